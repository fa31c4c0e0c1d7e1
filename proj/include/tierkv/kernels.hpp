#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Data-parallel inner loops shared by index build, retrieval and audits.
// Every kernel exists twice: `serial::` is the reference, `par::` the
// OpenMP version. Parallelism is always over independent output elements
// (one thread owns one row/score/dimension), so par:: results are
// bit-identical to serial:: and everything downstream stays deterministic.
// The unprefixed wrappers dispatch to par:: when OpenMP is compiled in.

namespace tierkv::kernels {

double dot(const float* a, const float* b, size_t d);
double l2_norm(const float* a, size_t d);
double l2_dist(const float* a, const float* b, size_t d);

// true if built with OpenMP
bool parallel_available();
int thread_count();

namespace serial {

// scores[i] = q . rows[i]
void dot_scores(const float* q, const float* rows, size_t n, size_t d,
                double* scores);

// scores[i] = q . centroids[i] + qnorm * radii[i]
void upper_bounds(const float* q, const float* centroids, const double* radii,
                  size_t n, size_t d, double qnorm, double* scores);

// assign[i] = argmax_c points[i] . centroids[c], ties to the smaller c
void assign_nearest(const float* points, size_t n, const float* centroids,
                    size_t k, size_t d, uint32_t* assign);

// out[g] = L2-normalized mean of the rows listed in groups[g]; rows with an
// empty group keep their previous content. Returns per-group mean norms.
void group_mean_normalize(const float* rows, size_t d,
                          const std::vector<std::vector<uint32_t>>& groups,
                          float* out, double* mean_norms);

// radii[g] = max_{i in groups[g]} ||rows[i] - centroids[g]||
void group_radius(const float* rows, size_t d,
                  const std::vector<std::vector<uint32_t>>& groups,
                  const float* centroids, double* radii);

// softmax(q . k_i / sqrt(d)) weighted sum of values over the id set
void attention(const float* q, const float* keys, const float* values,
               std::span<const uint32_t> ids, size_t d, float* out);

// max over member rows of q . row, one value per group
void group_max_dot(const float* q, const float* rows, size_t d,
                   const std::vector<std::vector<uint32_t>>& groups,
                   double* out);

}  // namespace serial

namespace par {

void dot_scores(const float* q, const float* rows, size_t n, size_t d,
                double* scores);
void upper_bounds(const float* q, const float* centroids, const double* radii,
                  size_t n, size_t d, double qnorm, double* scores);
void assign_nearest(const float* points, size_t n, const float* centroids,
                    size_t k, size_t d, uint32_t* assign);
void group_mean_normalize(const float* rows, size_t d,
                          const std::vector<std::vector<uint32_t>>& groups,
                          float* out, double* mean_norms);
void group_radius(const float* rows, size_t d,
                  const std::vector<std::vector<uint32_t>>& groups,
                  const float* centroids, double* radii);
void attention(const float* q, const float* keys, const float* values,
               std::span<const uint32_t> ids, size_t d, float* out);
void group_max_dot(const float* q, const float* rows, size_t d,
                   const std::vector<std::vector<uint32_t>>& groups,
                   double* out);

}  // namespace par

// dispatching wrappers
void dot_scores(const float* q, const float* rows, size_t n, size_t d,
                double* scores);
void upper_bounds(const float* q, const float* centroids, const double* radii,
                  size_t n, size_t d, double qnorm, double* scores);
void assign_nearest(const float* points, size_t n, const float* centroids,
                    size_t k, size_t d, uint32_t* assign);
void group_mean_normalize(const float* rows, size_t d,
                          const std::vector<std::vector<uint32_t>>& groups,
                          float* out, double* mean_norms);
void group_radius(const float* rows, size_t d,
                  const std::vector<std::vector<uint32_t>>& groups,
                  const float* centroids, double* radii);
void attention(const float* q, const float* keys, const float* values,
               std::span<const uint32_t> ids, size_t d, float* out);
void group_max_dot(const float* q, const float* rows, size_t d,
                   const std::vector<std::vector<uint32_t>>& groups,
                   double* out);

}  // namespace tierkv::kernels
