#pragma once

#include "tierkv/index.hpp"
#include "tierkv/types.hpp"

#include <span>
#include <vector>

namespace tierkv {

// Ground-truth oracles and metrics. Everything here is written as plain
// serial loops, independent of the kernels the engine runs on, so these
// functions double as the reference implementation the parallel paths are
// checked against.
namespace eval {

// exact softmax attention over the whole store
VecF full_attention(std::span<const float> q, const TokenStore& store);

// ids of the `budget` largest q . k_i, ties toward the smaller id
std::vector<uint32_t> oracle_topk_tokens(std::span<const float> q,
                                         const TokenStore& store, size_t budget);

// |retrieved ∩ oracle| / |oracle|; both inputs sorted ascending
double recall_rate(std::span<const uint32_t> retrieved,
                   std::span<const uint32_t> oracle);

// |a ∩ b| / |a ∪ b|, 1.0 when both empty; inputs sorted ascending
double jaccard(std::span<const uint32_t> a, std::span<const uint32_t> b);

// fraction of current ids seen in the union of the last w sets; empty
// current set is vacuously 1.0 (callers flag those steps)
double window_hit(const std::vector<std::vector<uint32_t>>& history,
                  std::span<const uint32_t> current);

// Exhaustively checks max descendant dot product <= upper bound at both
// tiers for every query. Returns the number of violations (0 for any index
// produced by build_index or mutated only by grafts).
size_t audit_ub_soundness(const HierarchicalIndex& index,
                          std::span<const float> queries, size_t query_count,
                          double tolerance = 1e-6);

struct StabilitySummary {
    std::vector<double> jaccard_series;
    std::vector<double> window_hit_series;
    size_t vacuous_steps = 0;  // empty current sets scored as 1.0

    double mean_jaccard() const;
    double mean_window_hit() const;
};

}  // namespace eval
}  // namespace tierkv
