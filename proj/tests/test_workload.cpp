#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "tierkv/chunker.hpp"
#include "tierkv/index.hpp"
#include "tierkv/kernels.hpp"
#include "tierkv/workload.hpp"

#include <filesystem>
#include <fstream>
#include <map>

using namespace tierkv;

TEST_CASE("gen_clustered_workload determinism") {
    WorkloadSpec spec;
    spec.n_tokens = 400;
    spec.d = 16;
    spec.seed = 77;
    Workload a = gen_clustered_workload(spec);
    Workload b = gen_clustered_workload(spec);
    CHECK(std::equal(a.tokens.keys_flat().begin(), a.tokens.keys_flat().end(),
                     b.tokens.keys_flat().begin()));
    CHECK(std::equal(a.tokens.values_flat().begin(), a.tokens.values_flat().end(),
                     b.tokens.values_flat().begin()));
    CHECK(a.tokens.texts() == b.tokens.texts());
    CHECK(a.queries == b.queries);
    CHECK(a.query_blob == b.query_blob);
}

TEST_CASE("extreme concentration collapses keys onto their centers") {
    WorkloadSpec spec;
    spec.n_tokens = 50;
    spec.d = 16;
    spec.n_blobs = 2;
    spec.blob_concentration = 1e9;
    spec.seed = 5;
    Workload w = gen_clustered_workload(spec);
    for (size_t i = 0; i < spec.n_tokens; ++i) {
        const float* center = w.blob_centers.data() + w.token_blob[i] * spec.d;
        CHECK(kernels::dot(w.tokens.key(i), center, spec.d) ==
              doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("single blob: k=1 centroid approximates the blob center") {
    WorkloadSpec spec;
    spec.n_tokens = 600;
    spec.d = 32;
    spec.n_blobs = 1;
    spec.seed = 9;
    spec.query_count = 1;
    Workload w = gen_clustered_workload(spec);
    auto spans = segment(w.tokens.texts(), ChunkPolicy::defaults());
    IndexConfig cfg;
    cfg.seed = 9;
    auto index = build_index(w.tokens, spans, cfg);
    // aggregate all chunk reps through one k-means with k=1
    VecF reps;
    for (const auto& c : index.chunks)
        reps.insert(reps.end(), c.rep_key.begin(), c.rep_key.end());
    auto res = spherical_kmeans(reps, index.chunk_count(), spec.d, 1, 10, 1);
    CHECK(kernels::dot(res.centroids.data(), w.blob_centers.data(), spec.d) > 0.99);
}

TEST_CASE("boundary markers keep chunk sizes in the policy range") {
    WorkloadSpec spec;
    spec.n_tokens = 4096;
    spec.d = 8;
    spec.seed = 13;
    spec.query_count = 1;
    Workload w = gen_clustered_workload(spec);
    size_t markers = 0;
    for (const auto& t : w.tokens.texts())
        if (!t.empty()) ++markers;
    // roughly every 12 tokens
    CHECK(markers > spec.n_tokens / 24);
    CHECK(markers < spec.n_tokens / 6);

    auto spans = segment(w.tokens.texts(), ChunkPolicy::defaults());
    size_t natural = 0;
    for (const auto& s : spans)
        if (s.kind == BoundaryKind::natural) ++natural;
    CHECK(natural > spans.size() / 2);  // markers actually drive the splits
}

TEST_CASE("ingest_text tokenization and keys") {
    namespace fs = std::filesystem;
    const fs::path tmp = fs::temp_directory_path() / "tierkv_ingest_test.txt";

    SUBCASE("spec example: two sentences, one paragraph break") {
        std::ofstream(tmp) << "a b.\n\nc d.";
        TokenStore store = ingest_text(tmp.string(), 11, 16);
        REQUIRE(store.size() == 4);
        CHECK(store.text(0) == "a ");
        CHECK(store.text(1) == "b.\n\n");
        CHECK(store.text(2) == "c ");
        CHECK(store.text(3) == "d.");
        // the bare sentence end is level 2; with the attached paragraph
        // break the same position classifies level 1
        auto policy = ChunkPolicy::defaults();
        CHECK(classify_boundary("b.", policy) == 2);
        CHECK(classify_boundary(store.text(1), policy) == 1);
        fs::remove(tmp);
    }

    SUBCASE("same-paragraph tokens are closer than cross-paragraph ones") {
        std::ostringstream text;
        for (int i = 0; i < 40; ++i) text << "alpha" << i << (i % 8 == 7 ? ".\n" : " ");
        text << "\n\n";
        for (int i = 0; i < 40; ++i) text << "beta" << i << (i % 8 == 7 ? ".\n" : " ");
        std::ofstream(tmp) << text.str();
        TokenStore store = ingest_text(tmp.string(), 21, 32);
        REQUIRE(store.size() == 80);

        double within = 0, cross = 0;
        size_t nw = 0, nc = 0;
        for (size_t i = 0; i < 80; i += 3) {
            for (size_t j = i + 1; j < 80; j += 3) {
                const double s = kernels::dot(store.key(i), store.key(j), 32);
                const bool same = (i < 40) == (j < 40);
                if (same) {
                    within += s;
                    ++nw;
                } else {
                    cross += s;
                    ++nc;
                }
            }
        }
        CHECK(within / static_cast<double>(nw) > cross / static_cast<double>(nc));
        fs::remove(tmp);
    }

    SUBCASE("empty file is an error") {
        std::ofstream(tmp) << "";
        CHECK_THROWS(ingest_text(tmp.string(), 1, 8));
        fs::remove(tmp);
    }

    SUBCASE("invalid UTF-8 is an error") {
        std::ofstream(tmp, std::ios::binary) << "ok \xff\xfe bad";
        CHECK_THROWS(ingest_text(tmp.string(), 1, 8));
        fs::remove(tmp);
    }

    SUBCASE("missing file is an error") {
        CHECK_THROWS(ingest_text("/nonexistent/tierkv.txt", 1, 8));
    }
}

TEST_CASE("ingest determinism") {
    namespace fs = std::filesystem;
    const fs::path tmp = fs::temp_directory_path() / "tierkv_ingest_det.txt";
    std::ofstream(tmp) << "one two three. four five.\n\nsix seven eight nine ten.";
    TokenStore a = ingest_text(tmp.string(), 3, 16);
    TokenStore b = ingest_text(tmp.string(), 3, 16);
    CHECK(std::equal(a.keys_flat().begin(), a.keys_flat().end(),
                     b.keys_flat().begin()));
    CHECK(a.texts() == b.texts());
    fs::remove(tmp);
}
