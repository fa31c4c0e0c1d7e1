#include "tierkv/streamer.hpp"

#include "tierkv/evaluator.hpp"
#include "tierkv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tierkv {

StreamState::StreamState(TokenStore store, HierarchicalIndex index, StreamerConfig cfg)
    : store_(std::move(store)), index_(std::move(index)), cfg_(std::move(cfg)) {
    cfg_.policy.validate();
    if (index_.fine.empty()) throw std::invalid_argument("stream state: empty index");
    index_.store = &store_;
    chunked_end_ = index_.chunks.empty() ? 0 : index_.chunks.back().span.end;
    if (chunked_end_ > store_.size())
        throw std::invalid_argument("stream state: chunks exceed store");
}

std::vector<uint32_t> StreamState::buffer_ids() const {
    std::vector<uint32_t> ids(store_.size() - chunked_end_);
    std::iota(ids.begin(), ids.end(), static_cast<uint32_t>(chunked_end_));
    return ids;
}

std::optional<Chunk> StreamState::flush_buffer() {
    const size_t len = buffer_size();
    const ChunkPolicy& pol = cfg_.policy;
    size_t take = pol.max_len;
    BoundaryKind kind = BoundaryKind::forced;
    int level = 0;
    if (cfg_.structure_aware) {
        std::vector<std::string> texts(len);
        for (size_t i = 0; i < len; ++i) texts[i] = store_.text(chunked_end_ + i);
        auto spans = segment(texts, pol);
        const ChunkSpan& head = spans.front();
        if (head.kind != BoundaryKind::tail) {
            take = head.length();
            kind = head.kind;
            level = head.level;
        }
    }
    const size_t d = store_.dim();
    std::span<const float> keys(store_.key(chunked_end_), take * d);
    Chunk chunk;
    chunk.span = {static_cast<uint32_t>(chunked_end_),
                  static_cast<uint32_t>(chunked_end_ + take), kind, level};
    chunk.rep_key = chunk_representative(keys, d, index_.config.pooling);
    chunked_end_ += take;
    return chunk;
}

std::optional<Chunk> StreamState::push_token(const TokenRecord& token) {
    store_.append(token);  // rejects non-sequential ids
    std::optional<Chunk> emitted;
    if (buffer_size() >= cfg_.policy.max_len) emitted = flush_buffer();
    while (buffer_size() >= cfg_.max_buffer) {
        // unreachable under the eager policy above; hard cap kept as a guard
        auto extra = flush_buffer();
        if (extra) graft_chunk(std::move(*extra));
    }
    return emitted;
}

GraftReport StreamState::graft_chunk(Chunk chunk) {
    if (index_.fine.empty()) throw std::invalid_argument("graft: empty index");
    const size_t d = index_.dim;
    const float* rep = chunk.rep_key.data();

    GraftReport report;
    uint32_t best_cluster = 0;
    {
        double best = -std::numeric_limits<double>::infinity();
        bool scoped = cfg_.graft_search == GraftSearch::scoped;
        std::vector<uint32_t> candidates;
        if (scoped) {
            uint32_t best_unit = 0;
            double best_unit_score = -std::numeric_limits<double>::infinity();
            for (uint32_t u = 0; u < index_.coarse.size(); ++u) {
                double s = kernels::dot(rep, index_.coarse[u].centroid.data(), d);
                ++report.distance_comps;
                if (s > best_unit_score) {
                    best_unit_score = s;
                    best_unit = u;
                }
            }
            candidates = index_.coarse[best_unit].members;
            if (candidates.empty()) scoped = false;  // fall back to a full scan
        }
        if (!scoped) {
            candidates.resize(index_.fine.size());
            std::iota(candidates.begin(), candidates.end(), 0u);
            report.distance_comps = 0;  // the cap in full mode is L alone
        }
        for (uint32_t c : candidates) {
            double s = kernels::dot(rep, index_.fine[c].centroid.data(), d);
            ++report.distance_comps;
            if (s > best) {
                best = s;
                best_cluster = c;
            }
        }
    }

    FineCluster& fc = index_.fine[best_cluster];
    const double n = static_cast<double>(fc.member_count());
    std::vector<double> moved(d);
    double norm2 = 0.0;
    for (size_t j = 0; j < d; ++j) {
        moved[j] = n * fc.centroid[j] + rep[j];
        norm2 += moved[j] * moved[j];
    }
    const double norm = std::sqrt(norm2);
    VecF new_centroid(fc.centroid);
    if (norm > 0.0)
        for (size_t j = 0; j < d; ++j)
            new_centroid[j] = static_cast<float>(moved[j] / norm);
    const double delta = kernels::l2_dist(new_centroid.data(), fc.centroid.data(), d);
    const double to_new = kernels::l2_dist(rep, new_centroid.data(), d);
    fc.centroid = std::move(new_centroid);
    fc.radius = std::max(fc.radius + delta, to_new);
    fc.token_count += chunk.token_count();

    CoarseUnit& cu = index_.coarse[fc.parent_unit];
    cu.radius = std::max(cu.radius, kernels::l2_dist(rep, cu.centroid.data(), d));

    const auto chunk_id = static_cast<uint32_t>(index_.chunks.size());
    fc.members.push_back(chunk_id);
    index_.cluster_of_chunk.push_back(best_cluster);
    index_.chunks.push_back(std::move(chunk));
    ++graft_count_;

    report.chunk_id = chunk_id;
    report.cluster_id = best_cluster;
    report.unit_id = fc.parent_unit;
    report.centroid_delta = delta;
    report.fine_radius = fc.radius;
    report.coarse_radius = cu.radius;
    return report;
}

DecodeOutcome StreamState::decode_step(std::span<const float> q,
                                       const TokenRecord& token,
                                       const Budgets& budgets) {
    DecodeOutcome out;
    auto buffered = buffer_ids();
    out.retrieval = retrieve(index_, q, budgets, buffered);

    std::vector<uint32_t> selected = out.retrieval.selected_clusters;
    std::sort(selected.begin(), selected.end());
    static const std::vector<uint32_t> empty_set;
    out.jaccard = eval::jaccard(history_.empty() ? empty_set : history_.back(),
                                selected);
    std::vector<std::vector<uint32_t>> window(history_.begin(), history_.end());
    out.window_hit = eval::window_hit(window, selected);

    history_.push_back(std::move(selected));
    while (history_.size() > cfg_.history_capacity) history_.pop_front();

    if (auto chunk = push_token(token)) out.graft = graft_chunk(std::move(*chunk));
    return out;
}

}  // namespace tierkv
