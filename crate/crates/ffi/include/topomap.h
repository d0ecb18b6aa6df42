#ifndef TOPOMAP_H
#define TOPOMAP_H

#include <stddef.h>
#include <stdint.h>

// `scheme` value: independent starts from singletons, best final partition wins.
#define TOPOMAP_SCHEME_INDEPENDENT_STARTS 0

// `scheme` value: each round runs every start once from the incumbent.
#define TOPOMAP_SCHEME_ITERATED_BEST 1

// NMI normalized by the geometric mean of the two entropies.
#define TOPOMAP_NORMALIZATION_SQRT 0

// NMI normalized by the smaller of the two entropies.
#define TOPOMAP_NORMALIZATION_MIN 1

// Result code of every fallible call.
typedef enum TopomapStatus {
  TOPOMAP_STATUS_OK = 0,
  TOPOMAP_STATUS_NULL_POINTER = 1,
  TOPOMAP_STATUS_INVALID_ARGUMENT = 2,
  TOPOMAP_STATUS_MISSING_INPUT = 3,
  TOPOMAP_STATUS_SCHEMA = 4,
  TOPOMAP_STATUS_INVARIANT = 5,
  TOPOMAP_STATUS_BUFFER_TOO_SMALL = 6,
  TOPOMAP_STATUS_PANIC = 7,
} TopomapStatus;

// Opaque citation graph.
typedef struct TopomapGraph TopomapGraph;

// Opaque clustering result.
typedef struct TopomapSolution TopomapSolution;

// Clustering parameters. Fill with [`topomap_cluster_params_default`].
typedef struct TopomapClusterParams {
  double gamma;
  uint32_t iterations;
  uint32_t random_starts;
  uint64_t seed;
  double theta;
  uint64_t min_cluster_size;
  uint32_t scheme;
} TopomapClusterParams;

// Agreement between two partitions of the same documents.
typedef struct TopomapSimilarity {
  double nmi;
  double ari;
  // Documents assigned in both partitions.
  uint64_t shared;
} TopomapSimilarity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *topomap_version(void);

// Message of the most recent failed call on this thread, or an empty
// string. Valid until the next failing call on the same thread.
const char *topomap_last_error_message(void);

// Writes the library defaults into `out`.
//
// # Safety
// `out` must be null or point to writable memory for one params struct.
enum TopomapStatus topomap_cluster_params_default(struct TopomapClusterParams *out);

// Loads a graph directory holding `nodes.tsv` and `edges.tsv`.
//
// # Safety
// `dir` must be a NUL-terminated string and `out` a writable handle slot.
enum TopomapStatus topomap_graph_load(const char *dir, struct TopomapGraph **out);

// Builds a graph over nodes `0..node_count` (ids are their decimal
// indices, sizes 1) from `edge_count` directed weighted edges. Parallel
// edges are summed.
//
// # Safety
// Each array must hold `edge_count` elements (may be null when zero) and
// `out` must be a writable handle slot.
enum TopomapStatus topomap_graph_from_edges(size_t node_count,
                                            const size_t *sources,
                                            const size_t *targets,
                                            const double *weights,
                                            size_t edge_count,
                                            struct TopomapGraph **out);

// Number of nodes, or 0 for a null handle.
//
// # Safety
// `graph` must be null or a live graph handle.
size_t topomap_graph_node_count(const struct TopomapGraph *graph);

// Number of distinct directed edges, or 0 for a null handle.
//
// # Safety
// `graph` must be null or a live graph handle.
size_t topomap_graph_edge_count(const struct TopomapGraph *graph);

// Releases a graph. Null is ignored.
//
// # Safety
// `graph` must be null or a handle not yet freed.
void topomap_graph_free(struct TopomapGraph *graph);

// Clusters `graph` with the Leiden algorithm under the CPM quality.
//
// # Safety
// `graph` and `params` must be live pointers and `out` a writable slot.
enum TopomapStatus topomap_cluster(const struct TopomapGraph *graph,
                                   const struct TopomapClusterParams *params,
                                   struct TopomapSolution **out);

// Number of nodes the solution covers, or 0 for a null handle.
//
// # Safety
// `solution` must be null or a live solution handle.
size_t topomap_solution_node_count(const struct TopomapSolution *solution);

// Number of clusters at or above the minimum size, or 0 for a null handle.
//
// # Safety
// `solution` must be null or a live solution handle.
size_t topomap_solution_cluster_count(const struct TopomapSolution *solution);

// CPM quality of the full partition, or NaN for a null handle.
//
// # Safety
// `solution` must be null or a live solution handle.
double topomap_solution_quality(const struct TopomapSolution *solution);

// Share of nodes in discarded clusters, or NaN for a null handle.
//
// # Safety
// `solution` must be null or a live solution handle.
double topomap_solution_discarded_share(const struct TopomapSolution *solution);

// Copies the cluster of every node into `out`, -1 for discarded nodes.
// `written` receives the node count. Pass a null `out` to query the size;
// a smaller `capacity` returns `BUFFER_TOO_SMALL`.
//
// # Safety
// `out` must be null or hold `capacity` elements; `written` null or writable.
enum TopomapStatus topomap_solution_membership(const struct TopomapSolution *solution,
                                               int64_t *out,
                                               size_t capacity,
                                               size_t *written);

// Writes `pub_id<TAB>cluster_id` rows to `path`.
//
// # Safety
// `solution` must be a live handle and `path` a NUL-terminated string.
enum TopomapStatus topomap_solution_write_tsv(const struct TopomapSolution *solution,
                                              const char *path);

// Releases a solution. Null is ignored.
//
// # Safety
// `solution` must be null or a handle not yet freed.
void topomap_solution_free(struct TopomapSolution *solution);

// NMI between a label and a cluster from their 2x2 contingency counts.
// `enriched` (optional) is set to 1 when the label is over-represented.
//
// # Safety
// `nmi` must be writable; `enriched` null or writable.
enum TopomapStatus topomap_nmi_score(uint64_t n11,
                                     uint64_t n10,
                                     uint64_t n01,
                                     uint64_t n00,
                                     uint32_t normalization,
                                     double *nmi,
                                     int32_t *enriched);

// NMI and adjusted Rand index between two partitions of the same `n`
// documents. Negative entries mark unassigned documents, which are left
// out of both scores.
//
// # Safety
// `a` and `b` must hold `n` elements and `out` must be writable.
enum TopomapStatus topomap_partition_similarity(const int64_t *a,
                                                const int64_t *b,
                                                size_t n,
                                                struct TopomapSimilarity *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPOMAP_H */
