#pragma once

#include "tierkv/chunker.hpp"
#include "tierkv/index.hpp"
#include "tierkv/retriever.hpp"
#include "tierkv/types.hpp"

#include <deque>
#include <optional>
#include <vector>

namespace tierkv {

enum class GraftSearch : uint8_t {
    scoped,  // nearest coarse unit first, then its member clusters
    full     // scan every fine cluster
};

struct StreamerConfig {
    ChunkPolicy policy = ChunkPolicy::defaults();
    bool structure_aware = true;  // false: fixed-size dynamic chunks (ablation)
    GraftSearch graft_search = GraftSearch::scoped;
    uint32_t max_buffer = 128;     // hard cap on unindexed tokens
    size_t history_capacity = 32;  // >= stability window w
};

struct GraftReport {
    uint32_t chunk_id = 0;
    uint32_t cluster_id = 0;
    uint32_t unit_id = 0;
    double centroid_delta = 0.0;
    double fine_radius = 0.0;
    double coarse_radius = 0.0;
    size_t distance_comps = 0;  // centroid distance computations for the search
};

struct DecodeOutcome {
    RetrievalResult retrieval;
    double jaccard = 0.0;
    double window_hit = 0.0;
    std::optional<GraftReport> graft;
};

// Owns the token store and index during streaming generation. Grafts mutate
// the index; callers must serialize decode/graft calls against concurrent
// retrievals (many readers or one writer, never both).
class StreamState {
public:
    StreamState(TokenStore store, HierarchicalIndex index, StreamerConfig cfg);
    StreamState(const StreamState&) = delete;
    StreamState& operator=(const StreamState&) = delete;

    const TokenStore& store() const { return store_; }
    const HierarchicalIndex& index() const { return index_; }
    const StreamerConfig& config() const { return cfg_; }

    size_t buffer_size() const { return store_.size() - chunked_end_; }
    std::vector<uint32_t> buffer_ids() const;
    const std::deque<std::vector<uint32_t>>& history() const { return history_; }
    size_t graft_count() const { return graft_count_; }

    // Appends the token; when the buffer reaches max chunk length, carves one
    // boundary-aligned leading chunk out of it and returns it.
    std::optional<Chunk> push_token(const TokenRecord& token);

    // Attaches a dynamic chunk to its nearest fine cluster: moving-average
    // centroid, radius expanded so every old and new member stays covered;
    // the parent unit's centroid is frozen and only its radius grows.
    GraftReport graft_chunk(Chunk chunk);

    // retrieve + attend, then index this step's token; stability metrics are
    // computed against the history ring before the new selection is recorded
    DecodeOutcome decode_step(std::span<const float> q, const TokenRecord& token,
                              const Budgets& budgets);

private:
    std::optional<Chunk> flush_buffer();

    TokenStore store_;
    HierarchicalIndex index_;
    StreamerConfig cfg_;
    size_t chunked_end_ = 0;
    size_t graft_count_ = 0;
    std::deque<std::vector<uint32_t>> history_;
};

}  // namespace tierkv
