#pragma once

#include "tierkv/index.hpp"
#include "tierkv/types.hpp"

#include <span>
#include <vector>

namespace tierkv {

enum class SelectionMode : uint8_t { fixed_cluster_count, token_budget };

struct Budgets {
    uint32_t unit_topk = 8;       // coarse units kept per query
    SelectionMode mode = SelectionMode::token_budget;
    uint32_t cluster_topk = 8;    // fixed_cluster_count mode
    uint64_t token_budget = 1024; // token_budget mode
    uint32_t sink_size = 16;      // leading tokens always active

    void validate() const;
};

struct RetrievalResult {
    std::vector<uint32_t> selected_units;
    std::vector<uint32_t> selected_clusters;
    std::vector<uint32_t> active_token_ids;  // sorted, unique
    VecF output;
    size_t scanned_centroids = 0;
    bool degenerate = false;  // full attention fallback was taken
};

// q . centroid + ||q|| * radius; never below the best dot product any member
// of the ball can achieve against q.
double score_upper_bound(std::span<const float> q, std::span<const float> centroid,
                         double radius);

// ids of the k largest scores, ties toward the smaller id; the result is
// ordered by (score desc, id asc) and truncated to the candidate count.
std::vector<uint32_t> select_topk(std::span<const std::pair<uint32_t, double>> scores,
                                  size_t k);

// Top-down prune and refine: rank coarse units by upper bound, keep
// unit_topk, rank their fine clusters, select by mode, then run exact
// attention over sink + selected chunk tokens + buffered tokens. When the
// whole stream fits the token budget the engine degenerates to full
// attention over every token.
RetrievalResult retrieve(const HierarchicalIndex& index, std::span<const float> q,
                         const Budgets& budgets,
                         std::span<const uint32_t> buffer_ids = {});

// selection stage only; `output` is left empty
RetrievalResult retrieve_ids(const HierarchicalIndex& index, std::span<const float> q,
                             const Budgets& budgets,
                             std::span<const uint32_t> buffer_ids = {});

// softmax(q . k_i / sqrt(d)) weighted sum over the given token ids
VecF sparse_attention(std::span<const float> q, const TokenStore& store,
                      std::span<const uint32_t> ids);

}  // namespace tierkv
