#pragma once

#include "tierkv/types.hpp"

#include <string>
#include <vector>

namespace tierkv {

enum class WorkloadKind : uint8_t { clustered_synthetic, text_corpus };

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::clustered_synthetic;
    size_t n_tokens = 8192;
    size_t d = 128;
    size_t n_blobs = 8;
    double blob_concentration = 3.0;  // higher = tighter blobs on the sphere
    size_t query_count = 100;
    double query_locality = 0.8;  // probability a query targets one blob
    std::string corpus_path;      // text_corpus kind
    uint64_t seed = 1;

    void validate() const;
};

struct Workload {
    TokenStore tokens;
    std::vector<float> queries;      // query_count x d
    std::vector<uint32_t> query_blob;  // targeted blob, or n_blobs for uniform
    std::vector<float> blob_centers;   // n_blobs x d
    std::vector<uint32_t> token_blob;  // generating blob per token
};

// Deterministic draws, independent of the platform's distribution
// implementations. Splitmix/xorshift generator with Box-Muller normals.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
    uint64_t next_u64();
    double next_unit();          // [0, 1)
    double next_gaussian();
    size_t next_index(size_t n);  // [0, n)

private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Tokens with blob-structured keys, gaussian values and boundary markers
// planted roughly every 12 tokens so segmentation takes its natural paths.
Workload gen_clustered_workload(const WorkloadSpec& spec);

// Queries clustered around one blob center, for stationary streams.
std::vector<float> gen_local_queries(const WorkloadSpec& spec, size_t blob,
                                     size_t count, uint64_t seed);

// Whitespace-splitting tokenizer that keeps each trailing whitespace run
// attached to its token. Keys are seeded hashes of the token text biased by
// paragraph, so tokens from one paragraph cluster together.
TokenStore ingest_text(const std::string& path, uint64_t seed, size_t d = 128);
TokenStore ingest_text_content(const std::string& content, uint64_t seed,
                               size_t d = 128);

}  // namespace tierkv
