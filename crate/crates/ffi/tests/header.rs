use std::path::PathBuf;
use std::process::Command;

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("topomap.h")
}

fn compiler(name: &str) -> Option<Command> {
    Command::new(name).arg("--version").output().ok()?;
    Some(Command::new(name))
}

#[test]
fn header_declares_every_exported_function() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "topomap_version",
        "topomap_last_error_message",
        "topomap_cluster_params_default",
        "topomap_graph_load",
        "topomap_graph_from_edges",
        "topomap_graph_node_count",
        "topomap_graph_edge_count",
        "topomap_graph_free",
        "topomap_cluster",
        "topomap_solution_node_count",
        "topomap_solution_cluster_count",
        "topomap_solution_quality",
        "topomap_solution_discarded_share",
        "topomap_solution_membership",
        "topomap_solution_write_tsv",
        "topomap_solution_free",
        "topomap_nmi_score",
        "topomap_partition_similarity",
    ] {
        assert!(
            text.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    assert!(text.contains("typedef struct TopomapGraph TopomapGraph;"));
    assert!(text.contains("typedef struct TopomapSolution TopomapSolution;"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let include = header().parent().unwrap().to_path_buf();
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"topomap.h\"\n\
         int main(void) {\n\
           TopomapClusterParams p;\n\
           TopomapGraph *g = 0;\n\
           TopomapSolution *s = 0;\n\
           if (topomap_cluster_params_default(&p) != TOPOMAP_STATUS_OK) return 1;\n\
           p.scheme = TOPOMAP_SCHEME_ITERATED_BEST;\n\
           (void)topomap_cluster(g, &p, &s);\n\
           topomap_solution_free(s);\n\
           topomap_graph_free(g);\n\
           return 0;\n\
         }\n",
    )
    .unwrap();
    let mut checked = 0;
    for (cc, lang) in [("cc", "c"), ("c++", "c++")] {
        let Some(mut cmd) = compiler(cc) else {
            continue;
        };
        let out = cmd
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(&include)
            .arg(&src)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{cc}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        checked += 1;
    }
    if checked == 0 {
        eprintln!("no C compiler found; header compile check skipped");
    }
}
