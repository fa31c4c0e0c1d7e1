#include "tierkv/retriever.hpp"

#include "tierkv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tierkv {

void Budgets::validate() const {
    if (unit_topk < 1) throw std::invalid_argument("unit_topk must be >= 1");
    if (mode == SelectionMode::fixed_cluster_count && cluster_topk < 1)
        throw std::invalid_argument("cluster_topk must be >= 1");
    if (mode == SelectionMode::token_budget && token_budget < 1)
        throw std::invalid_argument("token_budget must be >= 1");
}

double score_upper_bound(std::span<const float> q, std::span<const float> centroid,
                         double radius) {
    if (q.size() != centroid.size())
        throw std::invalid_argument("score_upper_bound: dimension mismatch");
    const double qnorm = kernels::l2_norm(q.data(), q.size());
    return kernels::dot(q.data(), centroid.data(), q.size()) + qnorm * radius;
}

std::vector<uint32_t> select_topk(std::span<const std::pair<uint32_t, double>> scores,
                                  size_t k) {
    if (k < 1) throw std::invalid_argument("select_topk: k must be >= 1");
    std::vector<std::pair<uint32_t, double>> s(scores.begin(), scores.end());
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    s.resize(std::min(k, s.size()));
    std::vector<uint32_t> ids(s.size());
    for (size_t i = 0; i < s.size(); ++i) ids[i] = s[i].first;
    return ids;
}

VecF sparse_attention(std::span<const float> q, const TokenStore& store,
                      std::span<const uint32_t> ids) {
    if (ids.empty()) throw std::invalid_argument("sparse_attention: empty active set");
    if (q.size() != store.dim())
        throw std::invalid_argument("sparse_attention: query dimension mismatch");
    VecF out(store.dim());
    kernels::attention(q.data(), store.keys_flat().data(), store.values_flat().data(),
                       ids, store.dim(), out.data());
    return out;
}

namespace {

std::vector<uint32_t> all_ids(size_t n) {
    std::vector<uint32_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0u);
    return ids;
}

void collect_active(const HierarchicalIndex& index,
                    const std::vector<uint32_t>& clusters, uint32_t sink_size,
                    std::span<const uint32_t> buffer_ids,
                    std::vector<uint32_t>& out) {
    const uint32_t n = static_cast<uint32_t>(index.store->size());
    for (uint32_t i = 0; i < std::min(sink_size, n); ++i) out.push_back(i);
    for (uint32_t c : clusters)
        for (uint32_t j : index.fine[c].members) {
            const auto& span = index.chunks[j].span;
            for (uint32_t t = span.start; t < span.end; ++t) out.push_back(t);
        }
    out.insert(out.end(), buffer_ids.begin(), buffer_ids.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
}

}  // namespace

RetrievalResult retrieve_ids(const HierarchicalIndex& index, std::span<const float> q,
                             const Budgets& budgets,
                             std::span<const uint32_t> buffer_ids) {
    budgets.validate();
    if (q.size() != index.store->dim())
        throw std::invalid_argument("retrieve: query dimension mismatch");

    RetrievalResult res;
    const size_t total_tokens = index.store->size();
    const bool fits_budget = budgets.mode == SelectionMode::token_budget &&
                             total_tokens <= budgets.token_budget;
    if (fits_budget || index.chunks.empty()) {
        res.degenerate = true;
        res.selected_units = all_ids(index.coarse.size());
        res.selected_clusters = all_ids(index.fine.size());
        res.active_token_ids = all_ids(total_tokens);
        return res;
    }

    const double qnorm = kernels::l2_norm(q.data(), q.size());
    const size_t d = index.dim;

    // tier 1: coarse units
    const size_t p = index.coarse.size();
    VecF unit_centroids(p * d);
    std::vector<double> unit_radii(p);
    for (size_t u = 0; u < p; ++u) {
        std::copy(index.coarse[u].centroid.begin(), index.coarse[u].centroid.end(),
                  unit_centroids.begin() + u * d);
        unit_radii[u] = index.coarse[u].radius;
    }
    std::vector<double> unit_scores(p);
    kernels::upper_bounds(q.data(), unit_centroids.data(), unit_radii.data(), p, d,
                          qnorm, unit_scores.data());
    res.scanned_centroids += p;
    std::vector<std::pair<uint32_t, double>> unit_ranked(p);
    for (size_t u = 0; u < p; ++u)
        unit_ranked[u] = {static_cast<uint32_t>(u), unit_scores[u]};
    res.selected_units = select_topk(unit_ranked, budgets.unit_topk);

    // tier 2: fine clusters under the kept units
    std::vector<uint32_t> candidates;
    for (uint32_t u : res.selected_units)
        candidates.insert(candidates.end(), index.coarse[u].members.begin(),
                          index.coarse[u].members.end());
    const size_t nc = candidates.size();
    VecF cluster_centroids(nc * d);
    std::vector<double> cluster_radii(nc);
    for (size_t i = 0; i < nc; ++i) {
        const FineCluster& fc = index.fine[candidates[i]];
        std::copy(fc.centroid.begin(), fc.centroid.end(),
                  cluster_centroids.begin() + i * d);
        cluster_radii[i] = fc.radius;
    }
    std::vector<double> cluster_scores(nc);
    kernels::upper_bounds(q.data(), cluster_centroids.data(), cluster_radii.data(),
                          nc, d, qnorm, cluster_scores.data());
    res.scanned_centroids += nc;
    std::vector<std::pair<uint32_t, double>> cluster_ranked(nc);
    for (size_t i = 0; i < nc; ++i)
        cluster_ranked[i] = {candidates[i], cluster_scores[i]};

    if (budgets.mode == SelectionMode::fixed_cluster_count) {
        res.selected_clusters = select_topk(cluster_ranked, budgets.cluster_topk);
    } else {
        // greedy prefix fill in (UB desc, id asc) order; stopping at the first
        // cluster that overflows keeps active sets nested across budgets
        std::vector<uint32_t> order = select_topk(cluster_ranked, nc);
        uint64_t used = 0;
        for (uint32_t c : order) {
            const uint64_t tokens = index.fine[c].token_count;
            if (!res.selected_clusters.empty() && used + tokens > budgets.token_budget)
                break;
            res.selected_clusters.push_back(c);
            used += tokens;
        }
    }

    collect_active(index, res.selected_clusters, budgets.sink_size, buffer_ids,
                   res.active_token_ids);
    return res;
}

RetrievalResult retrieve(const HierarchicalIndex& index, std::span<const float> q,
                         const Budgets& budgets,
                         std::span<const uint32_t> buffer_ids) {
    RetrievalResult res = retrieve_ids(index, q, budgets, buffer_ids);
    res.output = sparse_attention(q, *index.store, res.active_token_ids);
    return res;
}

}  // namespace tierkv
