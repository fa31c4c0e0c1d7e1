#include "tierkv/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tierkv::eval {

VecF full_attention(std::span<const float> q, const TokenStore& store) {
    const size_t n = store.size();
    const size_t d = store.dim();
    if (n == 0) throw std::invalid_argument("full_attention: empty store");
    if (q.size() != d) throw std::invalid_argument("full_attention: dim mismatch");

    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> logits(n);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
        const float* k = store.key(i);
        double s = 0.0;
        for (size_t j = 0; j < d; ++j) s += static_cast<double>(q[j]) * k[j];
        logits[i] = s * scale;
        max_logit = std::max(max_logit, logits[i]);
    }
    double z = 0.0;
    for (size_t i = 0; i < n; ++i) {
        logits[i] = std::exp(logits[i] - max_logit);
        z += logits[i];
    }
    std::vector<double> acc(d, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const double w = logits[i] / z;
        const float* v = store.value(i);
        for (size_t j = 0; j < d; ++j) acc[j] += w * v[j];
    }
    VecF out(d);
    for (size_t j = 0; j < d; ++j) out[j] = static_cast<float>(acc[j]);
    return out;
}

std::vector<uint32_t> oracle_topk_tokens(std::span<const float> q,
                                         const TokenStore& store, size_t budget) {
    if (budget < 1) throw std::invalid_argument("oracle_topk_tokens: budget >= 1");
    const size_t n = store.size();
    const size_t d = store.dim();
    std::vector<std::pair<double, uint32_t>> scored(n);
    for (size_t i = 0; i < n; ++i) {
        const float* k = store.key(i);
        double s = 0.0;
        for (size_t j = 0; j < d; ++j) s += static_cast<double>(q[j]) * k[j];
        scored[i] = {s, static_cast<uint32_t>(i)};
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    scored.resize(std::min(budget, n));
    std::vector<uint32_t> ids(scored.size());
    for (size_t i = 0; i < scored.size(); ++i) ids[i] = scored[i].second;
    std::sort(ids.begin(), ids.end());
    return ids;
}

double recall_rate(std::span<const uint32_t> retrieved,
                   std::span<const uint32_t> oracle) {
    if (oracle.empty()) throw std::invalid_argument("recall_rate: empty oracle");
    std::vector<uint32_t> hit;
    std::set_intersection(retrieved.begin(), retrieved.end(), oracle.begin(),
                          oracle.end(), std::back_inserter(hit));
    return static_cast<double>(hit.size()) / static_cast<double>(oracle.size());
}

double jaccard(std::span<const uint32_t> a, std::span<const uint32_t> b) {
    if (a.empty() && b.empty()) return 1.0;
    std::vector<uint32_t> inter, uni;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::back_inserter(inter));
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
    return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

double window_hit(const std::vector<std::vector<uint32_t>>& history,
                  std::span<const uint32_t> current) {
    if (current.empty()) return 1.0;
    std::vector<uint32_t> seen;
    for (const auto& s : history) seen.insert(seen.end(), s.begin(), s.end());
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    std::vector<uint32_t> hit;
    std::set_intersection(current.begin(), current.end(), seen.begin(), seen.end(),
                          std::back_inserter(hit));
    return static_cast<double>(hit.size()) / static_cast<double>(current.size());
}

namespace {

double dot_d(const float* a, const float* b, size_t d) {
    double s = 0.0;
    for (size_t j = 0; j < d; ++j) s += static_cast<double>(a[j]) * b[j];
    return s;
}

}  // namespace

size_t audit_ub_soundness(const HierarchicalIndex& index,
                          std::span<const float> queries, size_t query_count,
                          double tolerance) {
    const size_t d = index.dim;
    if (queries.size() != query_count * d)
        throw std::invalid_argument("audit_ub_soundness: query buffer mismatch");

    size_t violations = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : violations)
#endif
    for (size_t qi = 0; qi < query_count; ++qi) {
        const float* q = queries.data() + qi * d;
        double qnorm = 0.0;
        for (size_t j = 0; j < d; ++j) qnorm += static_cast<double>(q[j]) * q[j];
        qnorm = std::sqrt(qnorm);
        for (const FineCluster& fc : index.fine) {
            const double ub = dot_d(q, fc.centroid.data(), d) + qnorm * fc.radius;
            for (uint32_t j : fc.members) {
                if (dot_d(q, index.chunks[j].rep_key.data(), d) > ub + tolerance)
                    ++violations;
            }
        }
        for (const CoarseUnit& cu : index.coarse) {
            const double ub = dot_d(q, cu.centroid.data(), d) + qnorm * cu.radius;
            for (uint32_t c : cu.members)
                for (uint32_t j : index.fine[c].members) {
                    if (dot_d(q, index.chunks[j].rep_key.data(), d) > ub + tolerance)
                        ++violations;
                }
        }
    }
    return violations;
}

double StabilitySummary::mean_jaccard() const {
    if (jaccard_series.empty()) return 0.0;
    return std::accumulate(jaccard_series.begin(), jaccard_series.end(), 0.0) /
           static_cast<double>(jaccard_series.size());
}

double StabilitySummary::mean_window_hit() const {
    if (window_hit_series.empty()) return 0.0;
    return std::accumulate(window_hit_series.begin(), window_hit_series.end(), 0.0) /
           static_cast<double>(window_hit_series.size());
}

}  // namespace tierkv::eval
