#include "tierkv/index.hpp"

#include "tierkv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace tierkv {

void IndexConfig::validate() const {
    if (avg_chunks_per_cluster <= 0.0)
        throw std::invalid_argument("avg_chunks_per_cluster must be positive");
    if (max_coarse_units < 1 || kmeans_iters < 1 || elem_bytes < 1)
        throw std::invalid_argument("index config fields must be positive");
}

VecF chunk_representative(std::span<const float> keys, size_t d, Pooling pooling) {
    if (d == 0 || keys.empty() || keys.size() % d != 0)
        throw std::invalid_argument("chunk_representative: empty or ragged key list");
    const size_t n = keys.size() / d;
    std::vector<double> acc(d);
    if (pooling == Pooling::mean) {
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < d; ++j) acc[j] += keys[i * d + j];
        for (size_t j = 0; j < d; ++j) acc[j] /= static_cast<double>(n);
    } else {
        for (size_t j = 0; j < d; ++j) acc[j] = keys[j];
        for (size_t i = 1; i < n; ++i)
            for (size_t j = 0; j < d; ++j)
                acc[j] = std::max(acc[j], static_cast<double>(keys[i * d + j]));
    }
    double norm = std::sqrt(std::inner_product(acc.begin(), acc.end(), acc.begin(), 0.0));
    if (norm == 0.0)
        throw std::runtime_error("chunk_representative: pooled key has zero norm");
    VecF rep(d);
    for (size_t j = 0; j < d; ++j) rep[j] = static_cast<float>(acc[j] / norm);
    return rep;
}

namespace {

// k distinct point indices via partial Fisher-Yates
std::vector<uint32_t> sample_distinct(size_t n, size_t k, uint64_t seed) {
    std::vector<uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

std::vector<std::vector<uint32_t>> invert_assignment(
    const std::vector<uint32_t>& assign, size_t k) {
    std::vector<std::vector<uint32_t>> groups(k);
    for (uint32_t i = 0; i < assign.size(); ++i)
        groups[assign[i]].push_back(i);
    return groups;
}

// move the globally worst-fitting point into each empty cluster; the stolen
// point becomes the centroid, which keeps the objective non-decreasing
void repair_empty_clusters(std::span<const float> points, size_t d,
                           std::vector<uint32_t>& assign, VecF& centroids,
                           std::vector<std::vector<uint32_t>>& groups) {
    const size_t k = groups.size();
    for (size_t c = 0; c < k; ++c) {
        if (!groups[c].empty()) continue;
        double worst = std::numeric_limits<double>::infinity();
        uint32_t worst_point = 0;
        for (size_t g = 0; g < k; ++g) {
            if (groups[g].size() < 2) continue;
            for (uint32_t p : groups[g]) {
                double s = kernels::dot(points.data() + static_cast<size_t>(p) * d,
                                        centroids.data() + g * d, d);
                if (s < worst) {
                    worst = s;
                    worst_point = p;
                }
            }
        }
        auto& donor = groups[assign[worst_point]];
        donor.erase(std::find(donor.begin(), donor.end(), worst_point));
        assign[worst_point] = static_cast<uint32_t>(c);
        groups[c].push_back(worst_point);
        std::copy_n(points.data() + static_cast<size_t>(worst_point) * d, d,
                    centroids.data() + c * d);
    }
}

double kmeans_objective(std::span<const float> points, size_t d,
                        const std::vector<uint32_t>& assign, const VecF& centroids) {
    double obj = 0.0;
    for (size_t i = 0; i < assign.size(); ++i)
        obj += kernels::dot(points.data() + i * d,
                            centroids.data() + static_cast<size_t>(assign[i]) * d, d);
    return obj;
}

}  // namespace

KMeansResult spherical_kmeans(std::span<const float> points, size_t n, size_t d,
                              size_t k, uint32_t iters, uint64_t seed) {
    if (k < 1) throw std::invalid_argument("spherical_kmeans: k must be >= 1");
    if (k > n) throw std::invalid_argument("spherical_kmeans: k exceeds point count");
    if (points.size() != n * d)
        throw std::invalid_argument("spherical_kmeans: point buffer size mismatch");

    KMeansResult res;
    res.centroids.resize(k * d);
    res.assignment.resize(n);
    for (size_t c_pos = 0; const uint32_t p : sample_distinct(n, k, seed)) {
        std::copy_n(points.data() + static_cast<size_t>(p) * d, d,
                    res.centroids.data() + c_pos * d);
        ++c_pos;
    }

    std::vector<double> mean_norms(k);
    for (uint32_t it = 0; it < iters; ++it) {
        kernels::assign_nearest(points.data(), n, res.centroids.data(), k, d,
                                res.assignment.data());
        res.assignment_dots += n * k;
        auto groups = invert_assignment(res.assignment, k);
        repair_empty_clusters(points, d, res.assignment, res.centroids, groups);
        kernels::group_mean_normalize(points.data(), d, groups,
                                      res.centroids.data(), mean_norms.data());
        res.centroid_updates += k;
        res.objective.push_back(kmeans_objective(points, d, res.assignment,
                                                 res.centroids));
    }
    // final pass so the returned assignment matches the returned centroids
    kernels::assign_nearest(points.data(), n, res.centroids.data(), k, d,
                            res.assignment.data());
    res.assignment_dots += n * k;
    auto groups = invert_assignment(res.assignment, k);
    repair_empty_clusters(points, d, res.assignment, res.centroids, groups);
    return res;
}

size_t fine_cluster_count(size_t chunk_count, double avg_chunks_per_cluster) {
    const double l = std::ceil(static_cast<double>(chunk_count) / avg_chunks_per_cluster);
    return std::max<size_t>(1, static_cast<size_t>(l));
}

size_t coarse_unit_count(size_t cluster_count, uint32_t max_coarse_units) {
    const auto root = static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(cluster_count))));
    return std::min<size_t>(max_coarse_units, std::max<size_t>(1, root));
}

HierarchicalIndex build_index(const TokenStore& store,
                              const std::vector<ChunkSpan>& spans,
                              const IndexConfig& cfg) {
    cfg.validate();
    if (spans.empty()) throw std::invalid_argument("build_index: empty spans");
    uint32_t expect = 0;
    for (const auto& s : spans) {
        if (s.start != expect || s.end <= s.start || s.end > store.size())
            throw std::invalid_argument("build_index: spans do not tile the stream");
        expect = s.end;
    }
    if (expect != store.size())
        throw std::invalid_argument("build_index: spans do not cover the stream");

    HierarchicalIndex index;
    index.dim = store.dim();
    index.store = &store;
    index.config = cfg;

    const size_t d = store.dim();
    const size_t m = spans.size();
    index.chunks.resize(m);
    VecF reps(m * d);
    for (size_t j = 0; j < m; ++j) {
        const auto& s = spans[j];
        std::span<const float> keys(store.key(s.start),
                                    static_cast<size_t>(s.length()) * d);
        VecF rep = chunk_representative(keys, d, cfg.pooling);
        std::copy(rep.begin(), rep.end(), reps.begin() + j * d);
        index.chunks[j] = Chunk{s, std::move(rep)};
    }

    const size_t l = fine_cluster_count(m, cfg.avg_chunks_per_cluster);
    KMeansResult fine_km = spherical_kmeans(reps, m, d, l, cfg.kmeans_iters, cfg.seed);
    index.build_stats.centroid_updates += fine_km.centroid_updates;
    index.build_stats.assignment_dots += fine_km.assignment_dots;
    index.build_stats.fine_objective = fine_km.objective;

    index.fine.resize(l);
    index.cluster_of_chunk.assign(m, 0);
    auto fine_groups = invert_assignment(fine_km.assignment, l);
    {
        std::vector<double> radii(l);
        kernels::group_radius(reps.data(), d, fine_groups, fine_km.centroids.data(),
                              radii.data());
        for (size_t c = 0; c < l; ++c) {
            FineCluster& fc = index.fine[c];
            fc.centroid.assign(fine_km.centroids.begin() + c * d,
                               fine_km.centroids.begin() + (c + 1) * d);
            fc.radius = radii[c];
            fc.members = std::move(fine_groups[c]);
            for (uint32_t j : fc.members) {
                fc.token_count += index.chunks[j].token_count();
                index.cluster_of_chunk[j] = static_cast<uint32_t>(c);
            }
        }
    }

    const size_t p = coarse_unit_count(l, cfg.max_coarse_units);
    KMeansResult coarse_km = spherical_kmeans(fine_km.centroids, l, d, p,
                                              cfg.kmeans_iters, cfg.seed + 1);
    index.build_stats.centroid_updates += coarse_km.centroid_updates;
    index.build_stats.assignment_dots += coarse_km.assignment_dots;
    index.build_stats.coarse_objective = coarse_km.objective;

    index.coarse.resize(p);
    auto coarse_groups = invert_assignment(coarse_km.assignment, p);
    // coarse radii cover descendant chunk reps so leaf-level pruning is sound
    std::vector<std::vector<uint32_t>> descendant_chunks(p);
    for (size_t u = 0; u < p; ++u) {
        for (uint32_t c : coarse_groups[u]) {
            index.fine[c].parent_unit = static_cast<uint32_t>(u);
            descendant_chunks[u].insert(descendant_chunks[u].end(),
                                        index.fine[c].members.begin(),
                                        index.fine[c].members.end());
        }
    }
    std::vector<double> coarse_radii(p);
    kernels::group_radius(reps.data(), d, descendant_chunks,
                          coarse_km.centroids.data(), coarse_radii.data());
    for (size_t u = 0; u < p; ++u) {
        CoarseUnit& cu = index.coarse[u];
        cu.centroid.assign(coarse_km.centroids.begin() + u * d,
                           coarse_km.centroids.begin() + (u + 1) * d);
        cu.radius = coarse_radii[u];
        cu.members = std::move(coarse_groups[u]);
    }
    return index;
}

MemoryFootprint index_memory_bytes(const HierarchicalIndex& index) {
    const size_t w = index.config.elem_bytes;
    const size_t d = index.dim;
    MemoryFootprint mf;
    mf.centroid_bytes = (index.fine.size() + index.coarse.size()) * d * w;
    mf.radius_bytes = (index.fine.size() + index.coarse.size()) * w;
    size_t ids = 0;
    for (const auto& c : index.fine) ids += c.members.size();
    for (const auto& u : index.coarse) ids += u.members.size();
    mf.id_list_bytes = ids * w;
    mf.rep_key_bytes = index.chunks.size() * d * w;
    mf.index_bytes = mf.centroid_bytes + mf.radius_bytes + mf.id_list_bytes;
    mf.kv_bytes = 2 * index.store->size() * d * w;
    mf.ratio = mf.kv_bytes > 0
                   ? static_cast<double>(mf.index_bytes) / static_cast<double>(mf.kv_bytes)
                   : 0.0;
    return mf;
}

}  // namespace tierkv
