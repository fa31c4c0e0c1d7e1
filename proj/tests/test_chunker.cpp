#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "tierkv/chunker.hpp"

#include <set>

using namespace tierkv;
using testutil::plain_texts;

namespace {
const ChunkPolicy kDefault = ChunkPolicy::defaults();
}

TEST_CASE("classify_boundary levels") {
    CHECK(classify_boundary("}\n", kDefault) == 1);
    CHECK(classify_boundary("word.", kDefault) == 2);
    CHECK(!classify_boundary("word", kDefault).has_value());

    CHECK(classify_boundary("\n\n", kDefault) == 1);
    CHECK(classify_boundary("```", kDefault) == 1);
    CHECK(classify_boundary("b.\n\n", kDefault) == 1);  // paragraph break attached
    CHECK(classify_boundary("\n", kDefault) == 2);
    CHECK(classify_boundary("word. ", kDefault) == 2);  // glued trailing space
    CHECK(classify_boundary("word,", kDefault) == 3);
    CHECK(classify_boundary("word ", kDefault) == 4);
    CHECK(classify_boundary("word\t", kDefault) == 4);
    CHECK(classify_boundary("。", kDefault) == 2);  // CJK full stop
    CHECK(!classify_boundary("", kDefault).has_value());
}

TEST_CASE("multi-character separators span adjacent tokens") {
    CHECK(classify_boundary_pair("line\n", "\n", kDefault) == 1);   // \n + \n
    CHECK(classify_boundary_pair("-", "--", kDefault) == 1);        // - + --
    CHECK(classify_boundary_pair("``", "`", kDefault) == 1);
    // single-char separators never match across tokens
    CHECK(classify_boundary_pair("}", " ", kDefault) == 4);
    CHECK(!classify_boundary_pair("}", "x", kDefault).has_value());
}

TEST_CASE("segment: boundary inside the look-ahead window") {
    auto texts = plain_texts(20);
    texts[10] = "}";  // level 1 at position 10
    auto spans = segment(texts, kDefault);
    REQUIRE(spans.size() == 2);
    CHECK(spans[0] == ChunkSpan{0, 11, BoundaryKind::natural, 1});
    CHECK(spans[1] == ChunkSpan{11, 20, BoundaryKind::tail, 0});
}

TEST_CASE("segment: boundary below min_len is ignored") {
    auto texts = plain_texts(20);
    texts[4] = "}";
    auto spans = segment(texts, kDefault);
    REQUIRE(spans.size() == 2);
    CHECK(spans[0] == ChunkSpan{0, 16, BoundaryKind::forced, 0});
    CHECK(spans[1] == ChunkSpan{16, 20, BoundaryKind::tail, 0});
}

TEST_CASE("segment: rightmost split among equal priorities") {
    auto texts = plain_texts(24);
    texts[9] = "end.";
    texts[13] = "stop.";
    auto spans = segment(texts, kDefault);
    CHECK(spans[0] == ChunkSpan{0, 14, BoundaryKind::natural, 2});
}

TEST_CASE("segment: stronger priority wins over rightmost weaker one") {
    auto texts = plain_texts(24);
    texts[9] = "done.";   // level 2
    texts[13] = "part,";  // level 3, further right
    auto spans = segment(texts, kDefault);
    CHECK(spans[0] == ChunkSpan{0, 10, BoundaryKind::natural, 2});
}

TEST_CASE("segment: empty input is an error") {
    std::vector<std::string> none;
    CHECK_THROWS_AS(segment(none, kDefault), std::invalid_argument);
}

TEST_CASE("segment: separator-free input equals fixed-size chunking") {
    auto texts = plain_texts(53);  // no whitespace, no separators
    auto spans = segment(texts, kDefault);
    REQUIRE(spans.size() == 4);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(spans[i].kind == BoundaryKind::forced);
        CHECK(spans[i].length() == 16);
    }
    CHECK(spans[3] == ChunkSpan{48, 53, BoundaryKind::tail, 0});
}

TEST_CASE("segment: whole stream shorter than min_len is one tail") {
    auto texts = plain_texts(3);
    auto spans = segment(texts, kDefault);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0] == ChunkSpan{0, 3, BoundaryKind::tail, 0});
}

namespace {

// seeded stream mixing separators of all levels with plain tokens
std::vector<std::string> noisy_texts(Rng& rng, size_t n) {
    static const std::vector<std::string> pool = {
        "x",   "y",    "word", "}",  "]",  ">",   "a.", "b?", "c!",
        "\n",  "\n\n", "d,",   "e;", "f:", "g ",  "h\t", "```", "---",
        "tok", "zz",   "qq",   "w",  "v",  "m"};
    std::vector<std::string> texts(n);
    for (auto& t : texts) t = pool[rng.next_index(pool.size())];
    return texts;
}

int best_window_level(const std::vector<std::string>& texts, const ChunkSpan& span,
                      const ChunkPolicy& pol) {
    int best = 0;
    const size_t remaining = texts.size() - span.start;
    const size_t hi = std::min<size_t>(pol.max_len, remaining);
    for (size_t len = pol.min_len; len <= hi; ++len) {
        const size_t pos = span.start + len - 1;
        static const std::string none;
        auto lvl = classify_boundary_pair(pos > 0 ? texts[pos - 1] : none,
                                          texts[pos], pol);
        if (lvl && (best == 0 || *lvl < best)) best = *lvl;
    }
    return best;
}

}  // namespace

TEST_CASE("segment invariants on random streams") {
    Rng rng(2024);
    for (int iter = 0; iter < 50; ++iter) {
        const size_t n = 1 + rng.next_index(400);
        auto texts = noisy_texts(rng, n);
        auto spans = segment(texts, kDefault);

        // reconstruction: spans tile [0, n) in order
        uint32_t expect = 0;
        for (const auto& s : spans) {
            CHECK(s.start == expect);
            CHECK(s.end > s.start);
            expect = s.end;
        }
        CHECK(expect == n);

        // size bounds
        for (size_t i = 0; i < spans.size(); ++i) {
            CHECK(spans[i].length() <= kDefault.max_len);
            if (spans[i].kind != BoundaryKind::tail)
                CHECK(spans[i].length() >= kDefault.min_len);
            if (spans[i].kind == BoundaryKind::tail) CHECK(i == spans.size() - 1);
        }

        // boundary dominance: a natural span's level is the best in its
        // window; a forced span has no candidate at all
        for (const auto& s : spans) {
            if (s.kind == BoundaryKind::tail) continue;
            const int best = best_window_level(texts, s, kDefault);
            if (s.kind == BoundaryKind::natural) {
                CHECK(s.level == best);
            } else {
                CHECK(best == 0);
            }
        }

        // determinism
        CHECK(segment(texts, kDefault) == spans);
    }
}
