#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "tierkv/chunker.hpp"
#include "tierkv/evaluator.hpp"
#include "tierkv/index.hpp"
#include "tierkv/kernels.hpp"
#include "tierkv/streamer.hpp"
#include "tierkv/workload.hpp"

#include <algorithm>
#include <cmath>

using namespace tierkv;

namespace {

// prefill from a clustered workload, keeping the generator around for more
// same-distribution tokens
struct StreamFixture {
    WorkloadSpec spec;
    Workload workload;
    std::unique_ptr<StreamState> state;
    Rng rng{777};

    explicit StreamFixture(size_t prefill = 640, size_t d = 16,
                           StreamerConfig cfg = {}) {
        spec.n_tokens = prefill;
        spec.d = d;
        spec.n_blobs = 3;
        spec.seed = 4;
        spec.query_count = 4;
        workload = gen_clustered_workload(spec);
        auto spans = segment(workload.tokens.texts(), cfg.policy);
        IndexConfig icfg;
        icfg.seed = 4;
        TokenStore copy = workload.tokens;  // state owns its own store
        auto index = build_index(copy, spans, icfg);
        state = std::make_unique<StreamState>(std::move(copy), std::move(index), cfg);
    }

    TokenRecord next_token(const std::string& text = "") {
        TokenRecord t;
        t.id = static_cast<uint32_t>(state->store().size());
        t.text = text;
        const size_t d = spec.d;
        const size_t blob = rng.next_index(spec.n_blobs);
        t.key.resize(d);
        double n2 = 0.0;
        for (size_t j = 0; j < d; ++j) {
            const double x = workload.blob_centers[blob * d + j] +
                             0.1 * rng.next_gaussian();
            t.key[j] = static_cast<float>(x);
            n2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(n2);
        for (size_t j = 0; j < d; ++j) t.key[j] = static_cast<float>(t.key[j] * inv);
        t.value.resize(d);
        for (size_t j = 0; j < d; ++j)
            t.value[j] = static_cast<float>(rng.next_gaussian());
        return t;
    }

    VecF query_near_blob(size_t blob) {
        const size_t d = spec.d;
        VecF q(d);
        for (size_t j = 0; j < d; ++j)
            q[j] = static_cast<float>(workload.blob_centers[blob * d + j] * 3.0 +
                                      0.05 * rng.next_gaussian());
        return q;
    }
};

void check_covering(const HierarchicalIndex& index) {
    for (const auto& fc : index.fine)
        for (uint32_t j : fc.members)
            CHECK(kernels::l2_dist(index.chunks[j].rep_key.data(),
                                   fc.centroid.data(), index.dim) <=
                  fc.radius + 1e-6);
    for (const auto& cu : index.coarse)
        for (uint32_t c : cu.members)
            for (uint32_t j : index.fine[c].members)
                CHECK(kernels::l2_dist(index.chunks[j].rep_key.data(),
                                       cu.centroid.data(), index.dim) <=
                      cu.radius + 1e-6);
}

}  // namespace

TEST_CASE("push_token buffers until max length, then emits one chunk") {
    StreamFixture fx;
    // 15 separator-free pushes stay buffered
    for (int i = 0; i < 15; ++i) {
        auto chunk = fx.state->push_token(fx.next_token());
        CHECK(!chunk.has_value());
    }
    CHECK(fx.state->buffer_size() == 15);
    // the 16th triggers a forced flush of the whole buffer
    auto chunk = fx.state->push_token(fx.next_token());
    REQUIRE(chunk.has_value());
    CHECK(chunk->span.length() == 16);
    CHECK(chunk->span.kind == BoundaryKind::forced);
    CHECK(fx.state->buffer_size() == 0);
}

TEST_CASE("push_token splits the buffer at a planted boundary") {
    StreamFixture fx;
    for (int i = 0; i < 15; ++i)
        fx.state->push_token(fx.next_token(i == 10 ? "}" : ""));
    auto chunk = fx.state->push_token(fx.next_token());
    REQUIRE(chunk.has_value());
    CHECK(chunk->span.length() == 11);  // boundary-aligned prefix
    CHECK(chunk->span.kind == BoundaryKind::natural);
    CHECK(fx.state->buffer_size() == 5);
}

TEST_CASE("push_token rejects non-sequential ids") {
    StreamFixture fx;
    TokenRecord t = fx.next_token();
    t.id += 5;
    CHECK_THROWS(fx.state->push_token(t));
}

TEST_CASE("a 160-token separator-free stream grafts exactly 10 forced chunks") {
    StreamFixture fx;
    const size_t chunks_before = fx.state->index().chunk_count();
    size_t grafts = 0;
    for (int i = 0; i < 160; ++i) {
        if (auto chunk = fx.state->push_token(fx.next_token())) {
            auto report = fx.state->graft_chunk(std::move(*chunk));
            CHECK(fx.state->index().chunks.back().span.length() == 16);
            (void)report;
            ++grafts;
        }
    }
    CHECK(grafts == 10);
    CHECK(fx.state->index().chunk_count() == chunks_before + 10);
}

TEST_CASE("graft with the centroid itself changes nothing") {
    StreamerConfig cfg;
    cfg.graft_search = GraftSearch::full;
    StreamFixture fx(640, 16, cfg);
    auto& index = fx.state->index();
    const uint32_t c = 0;
    const VecF mu = index.fine[c].centroid;
    const double r = index.fine[c].radius;
    const size_t n = index.fine[c].member_count();

    Chunk chunk;
    const auto start = static_cast<uint32_t>(fx.state->store().size());
    chunk.span = {start, start + 1, BoundaryKind::forced, 0};
    chunk.rep_key = mu;
    // feed the matching token so spans stay within the store
    fx.state->push_token(fx.next_token());

    auto report = fx.state->graft_chunk(chunk);
    REQUIRE(report.cluster_id == c);  // dot(mu, mu) = 1 is the maximum
    const FineCluster& fc = fx.state->index().fine[c];
    CHECK(fc.member_count() == n + 1);
    CHECK(report.centroid_delta <= 1e-6);
    CHECK(std::abs(fc.radius - r) <= 1e-6);
    for (size_t j = 0; j < mu.size(); ++j)
        CHECK(fc.centroid[j] == doctest::Approx(mu[j]).epsilon(1e-6));
}

TEST_CASE("graft keeps covering invariants over a long stream") {
    StreamFixture fx(640, 16);
    for (int i = 0; i < 2000; ++i) {
        if (auto chunk = fx.state->push_token(fx.next_token(i % 12 == 7 ? "\n" : "")))
            fx.state->graft_chunk(std::move(*chunk));
    }
    CHECK(fx.state->graft_count() > 100);
    check_covering(fx.state->index());
}

TEST_CASE("coarse radii grow monotonically; L and P never change") {
    StreamFixture fx;
    const size_t l = fx.state->index().cluster_count();
    const size_t p = fx.state->index().unit_count();
    std::vector<double> radii(p);
    for (size_t u = 0; u < p; ++u) radii[u] = fx.state->index().coarse[u].radius;

    for (int i = 0; i < 500; ++i) {
        if (auto chunk = fx.state->push_token(fx.next_token())) {
            fx.state->graft_chunk(std::move(*chunk));
            const auto& index = fx.state->index();
            CHECK(index.cluster_count() == l);
            CHECK(index.unit_count() == p);
            for (size_t u = 0; u < p; ++u) {
                CHECK(index.coarse[u].radius >= radii[u]);
                radii[u] = index.coarse[u].radius;
            }
        }
    }
}

TEST_CASE("graft search cost stays within the documented caps") {
    SUBCASE("scoped: at most units + fan-out of the chosen unit") {
        StreamFixture fx;
        for (int i = 0; i < 800; ++i) {
            if (auto chunk = fx.state->push_token(fx.next_token())) {
                const auto& index = fx.state->index();
                size_t max_fanout = 0;
                for (const auto& cu : index.coarse)
                    max_fanout = std::max(max_fanout, cu.members.size());
                auto report = fx.state->graft_chunk(std::move(*chunk));
                CHECK(report.distance_comps <= index.unit_count() + max_fanout);
            }
        }
    }
    SUBCASE("full: exactly L comparisons") {
        StreamerConfig cfg;
        cfg.graft_search = GraftSearch::full;
        StreamFixture fx(640, 16, cfg);
        for (int i = 0; i < 200; ++i) {
            if (auto chunk = fx.state->push_token(fx.next_token())) {
                auto report = fx.state->graft_chunk(std::move(*chunk));
                CHECK(report.distance_comps == fx.state->index().cluster_count());
            }
        }
    }
}

TEST_CASE("decode_step degenerates to full attention under the budget") {
    StreamFixture fx(320, 16);
    Budgets budgets;
    budgets.token_budget = 1024;  // 320 tokens fit
    VecF q = fx.query_near_blob(0);
    auto outcome = fx.state->decode_step(q, fx.next_token(), budgets);
    CHECK(outcome.retrieval.degenerate);
    // the attention was computed before the new token entered the store
    TokenStore before = fx.workload.tokens;
    VecF oracle = eval::full_attention(q, before);
    REQUIRE(outcome.retrieval.output.size() == oracle.size());
    for (size_t j = 0; j < oracle.size(); ++j)
        CHECK(std::abs(outcome.retrieval.output[j] - oracle[j]) <= 1e-6);
}

TEST_CASE("decode_step records history and stability metrics") {
    StreamFixture fx(2048, 16);
    Budgets budgets;
    budgets.token_budget = 256;
    std::vector<uint32_t> prev;
    for (int step = 0; step < 80; ++step) {
        VecF q = fx.query_near_blob(1);
        auto outcome = fx.state->decode_step(q, fx.next_token(), budgets);
        CHECK(outcome.jaccard >= 0.0);
        CHECK(outcome.jaccard <= 1.0);
        CHECK(outcome.window_hit >= 0.0);
        CHECK(outcome.window_hit <= 1.0);
        if (step == 0) {
            CHECK(outcome.window_hit == 0.0);  // empty history
        }
        std::vector<uint32_t> cur = outcome.retrieval.selected_clusters;
        std::sort(cur.begin(), cur.end());
        if (step > 0 && cur == prev) CHECK(outcome.jaccard == 1.0);
        prev = cur;
    }
    CHECK(fx.state->history().size() <= fx.state->config().history_capacity);
    CHECK(fx.state->graft_count() > 0);
}

TEST_CASE("stream state keeps the buffer below max chunk length") {
    StreamFixture fx;
    for (int i = 0; i < 300; ++i) {
        if (auto chunk = fx.state->push_token(fx.next_token()))
            fx.state->graft_chunk(std::move(*chunk));
        CHECK(fx.state->buffer_size() < fx.state->config().policy.max_len);
    }
}
