#include "tierkv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tierkv::kernels {

double dot(const float* a, const float* b, size_t d) {
    double s = 0.0;
    for (size_t i = 0; i < d; ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

double l2_norm(const float* a, size_t d) {
    double s = 0.0;
    for (size_t i = 0; i < d; ++i) s += static_cast<double>(a[i]) * a[i];
    return std::sqrt(s);
}

double l2_dist(const float* a, const float* b, size_t d) {
    double s = 0.0;
    for (size_t i = 0; i < d; ++i) {
        double diff = static_cast<double>(a[i]) - b[i];
        s += diff * diff;
    }
    return std::sqrt(s);
}

bool parallel_available() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

uint32_t argmax_dot(const float* p, const float* centroids, size_t k, size_t d) {
    uint32_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < k; ++c) {
        double s = dot(p, centroids + c * d, d);
        if (s > best_score) {
            best_score = s;
            best = static_cast<uint32_t>(c);
        }
    }
    return best;
}

void mean_normalize_one(const float* rows, size_t d,
                        const std::vector<uint32_t>& group, float* out,
                        double* mean_norm) {
    if (group.empty()) {
        *mean_norm = 0.0;
        return;
    }
    std::vector<double> acc(d, 0.0);
    for (uint32_t idx : group) {
        const float* r = rows + static_cast<size_t>(idx) * d;
        for (size_t j = 0; j < d; ++j) acc[j] += r[j];
    }
    const double inv_n = 1.0 / static_cast<double>(group.size());
    double norm2 = 0.0;
    for (size_t j = 0; j < d; ++j) {
        acc[j] *= inv_n;
        norm2 += acc[j] * acc[j];
    }
    const double norm = std::sqrt(norm2);
    *mean_norm = norm;
    if (norm == 0.0) return;  // caller keeps the previous row
    for (size_t j = 0; j < d; ++j)
        out[j] = static_cast<float>(acc[j] / norm);
}

double radius_one(const float* rows, size_t d, const std::vector<uint32_t>& group,
                  const float* centroid) {
    double r = 0.0;
    for (uint32_t idx : group)
        r = std::max(r, l2_dist(rows + static_cast<size_t>(idx) * d, centroid, d));
    return r;
}

double max_dot_one(const float* q, const float* rows, size_t d,
                   const std::vector<uint32_t>& group) {
    double m = -std::numeric_limits<double>::infinity();
    for (uint32_t idx : group)
        m = std::max(m, dot(q, rows + static_cast<size_t>(idx) * d, d));
    return m;
}

// logits and weights for one attention call; the reduction over ids is kept
// serial so the result does not depend on the thread count
void attention_weights(const float* q, const float* keys,
                       std::span<const uint32_t> ids, size_t d,
                       std::vector<double>& w, bool parallel) {
    const size_t n = ids.size();
    w.resize(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel && n > 256)
#endif
    for (size_t i = 0; i < n; ++i)
        w[i] = dot(q, keys + static_cast<size_t>(ids[i]) * d, d) * scale;
    (void)parallel;
    double m = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) m = std::max(m, w[i]);
    double z = 0.0;
    for (size_t i = 0; i < n; ++i) {
        w[i] = std::exp(w[i] - m);
        z += w[i];
    }
    const double inv_z = 1.0 / z;
    for (size_t i = 0; i < n; ++i) w[i] *= inv_z;
}

void attention_output(const float* values, std::span<const uint32_t> ids, size_t d,
                      const std::vector<double>& w, float* out, bool parallel) {
    const size_t n = ids.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel && d > 16)
#endif
    for (size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i)
            acc += w[i] * values[static_cast<size_t>(ids[i]) * d + j];
        out[j] = static_cast<float>(acc);
    }
    (void)parallel;
}

}  // namespace

namespace serial {

void dot_scores(const float* q, const float* rows, size_t n, size_t d,
                double* scores) {
    for (size_t i = 0; i < n; ++i) scores[i] = dot(q, rows + i * d, d);
}

void upper_bounds(const float* q, const float* centroids, const double* radii,
                  size_t n, size_t d, double qnorm, double* scores) {
    for (size_t i = 0; i < n; ++i)
        scores[i] = dot(q, centroids + i * d, d) + qnorm * radii[i];
}

void assign_nearest(const float* points, size_t n, const float* centroids,
                    size_t k, size_t d, uint32_t* assign) {
    for (size_t i = 0; i < n; ++i)
        assign[i] = argmax_dot(points + i * d, centroids, k, d);
}

void group_mean_normalize(const float* rows, size_t d,
                          const std::vector<std::vector<uint32_t>>& groups,
                          float* out, double* mean_norms) {
    for (size_t g = 0; g < groups.size(); ++g)
        mean_normalize_one(rows, d, groups[g], out + g * d, &mean_norms[g]);
}

void group_radius(const float* rows, size_t d,
                  const std::vector<std::vector<uint32_t>>& groups,
                  const float* centroids, double* radii) {
    for (size_t g = 0; g < groups.size(); ++g)
        radii[g] = radius_one(rows, d, groups[g], centroids + g * d);
}

void attention(const float* q, const float* keys, const float* values,
               std::span<const uint32_t> ids, size_t d, float* out) {
    std::vector<double> w;
    attention_weights(q, keys, ids, d, w, false);
    attention_output(values, ids, d, w, out, false);
}

void group_max_dot(const float* q, const float* rows, size_t d,
                   const std::vector<std::vector<uint32_t>>& groups,
                   double* out) {
    for (size_t g = 0; g < groups.size(); ++g)
        out[g] = max_dot_one(q, rows, d, groups[g]);
}

}  // namespace serial

namespace par {

void dot_scores(const float* q, const float* rows, size_t n, size_t d,
                double* scores) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n > 64)
#endif
    for (size_t i = 0; i < n; ++i) scores[i] = dot(q, rows + i * d, d);
}

void upper_bounds(const float* q, const float* centroids, const double* radii,
                  size_t n, size_t d, double qnorm, double* scores) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n > 64)
#endif
    for (size_t i = 0; i < n; ++i)
        scores[i] = dot(q, centroids + i * d, d) + qnorm * radii[i];
}

void assign_nearest(const float* points, size_t n, const float* centroids,
                    size_t k, size_t d, uint32_t* assign) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n > 16)
#endif
    for (size_t i = 0; i < n; ++i)
        assign[i] = argmax_dot(points + i * d, centroids, k, d);
}

void group_mean_normalize(const float* rows, size_t d,
                          const std::vector<std::vector<uint32_t>>& groups,
                          float* out, double* mean_norms) {
    const size_t n = groups.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) if (n > 8)
#endif
    for (size_t g = 0; g < n; ++g)
        mean_normalize_one(rows, d, groups[g], out + g * d, &mean_norms[g]);
}

void group_radius(const float* rows, size_t d,
                  const std::vector<std::vector<uint32_t>>& groups,
                  const float* centroids, double* radii) {
    const size_t n = groups.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) if (n > 8)
#endif
    for (size_t g = 0; g < n; ++g)
        radii[g] = radius_one(rows, d, groups[g], centroids + g * d);
}

void attention(const float* q, const float* keys, const float* values,
               std::span<const uint32_t> ids, size_t d, float* out) {
    std::vector<double> w;
    attention_weights(q, keys, ids, d, w, true);
    attention_output(values, ids, d, w, out, true);
}

void group_max_dot(const float* q, const float* rows, size_t d,
                   const std::vector<std::vector<uint32_t>>& groups,
                   double* out) {
    const size_t n = groups.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) if (n > 8)
#endif
    for (size_t g = 0; g < n; ++g)
        out[g] = max_dot_one(q, rows, d, groups[g]);
}

}  // namespace par

#ifdef _OPENMP
#define TIERKV_DISPATCH(fn, ...) par::fn(__VA_ARGS__)
#else
#define TIERKV_DISPATCH(fn, ...) serial::fn(__VA_ARGS__)
#endif

void dot_scores(const float* q, const float* rows, size_t n, size_t d,
                double* scores) {
    TIERKV_DISPATCH(dot_scores, q, rows, n, d, scores);
}

void upper_bounds(const float* q, const float* centroids, const double* radii,
                  size_t n, size_t d, double qnorm, double* scores) {
    TIERKV_DISPATCH(upper_bounds, q, centroids, radii, n, d, qnorm, scores);
}

void assign_nearest(const float* points, size_t n, const float* centroids,
                    size_t k, size_t d, uint32_t* assign) {
    TIERKV_DISPATCH(assign_nearest, points, n, centroids, k, d, assign);
}

void group_mean_normalize(const float* rows, size_t d,
                          const std::vector<std::vector<uint32_t>>& groups,
                          float* out, double* mean_norms) {
    TIERKV_DISPATCH(group_mean_normalize, rows, d, groups, out, mean_norms);
}

void group_radius(const float* rows, size_t d,
                  const std::vector<std::vector<uint32_t>>& groups,
                  const float* centroids, double* radii) {
    TIERKV_DISPATCH(group_radius, rows, d, groups, centroids, radii);
}

void attention(const float* q, const float* keys, const float* values,
               std::span<const uint32_t> ids, size_t d, float* out) {
    TIERKV_DISPATCH(attention, q, keys, values, ids, d, out);
}

void group_max_dot(const float* q, const float* rows, size_t d,
                   const std::vector<std::vector<uint32_t>>& groups,
                   double* out) {
    TIERKV_DISPATCH(group_max_dot, q, rows, d, groups, out);
}

#undef TIERKV_DISPATCH

}  // namespace tierkv::kernels
