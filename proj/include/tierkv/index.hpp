#pragma once

#include "tierkv/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace tierkv {

enum class Pooling : uint8_t { mean, max };

struct IndexConfig {
    double avg_chunks_per_cluster = 2.0;
    uint32_t max_coarse_units = 64;
    uint32_t kmeans_iters = 10;
    Pooling pooling = Pooling::mean;
    uint64_t seed = 0;
    uint32_t elem_bytes = 2;  // accounting width, mirrors half-precision caches

    void validate() const;
};

// Atomic retrieval unit: a token span plus its unit-norm representative key.
struct Chunk {
    ChunkSpan span;
    VecF rep_key;

    uint32_t token_count() const { return span.length(); }
};

// First aggregation tier. centroid/radius form the covering ball over the
// member chunks' representative keys.
struct FineCluster {
    VecF centroid;
    double radius = 0.0;
    std::vector<uint32_t> members;  // chunk ids
    size_t token_count = 0;
    uint32_t parent_unit = 0;

    size_t member_count() const { return members.size(); }
};

// Second tier. The radius covers all descendant chunk representatives, not
// just the member cluster centroids, so pruning at this level stays sound
// for the leaves.
struct CoarseUnit {
    VecF centroid;
    double radius = 0.0;
    std::vector<uint32_t> members;  // fine cluster ids
};

struct BuildStats {
    size_t centroid_updates = 0;   // centroid mean recomputations
    size_t assignment_dots = 0;    // point x centroid products during build
    std::vector<double> fine_objective;    // per k-means round, after update
    std::vector<double> coarse_objective;
};

struct HierarchicalIndex {
    size_t dim = 0;
    std::vector<Chunk> chunks;
    std::vector<FineCluster> fine;
    std::vector<CoarseUnit> coarse;
    std::vector<uint32_t> cluster_of_chunk;
    const TokenStore* store = nullptr;
    IndexConfig config;
    BuildStats build_stats;

    size_t chunk_count() const { return chunks.size(); }
    size_t cluster_count() const { return fine.size(); }
    size_t unit_count() const { return coarse.size(); }
};

struct KMeansResult {
    VecF centroids;                  // k x d
    std::vector<uint32_t> assignment;
    std::vector<double> objective;   // per round, non-decreasing
    size_t centroid_updates = 0;
    size_t assignment_dots = 0;
};

// Pooled, L2-normalized representative of a set of key rows.
VecF chunk_representative(std::span<const float> keys, size_t d, Pooling pooling);

// Lloyd iterations on the unit sphere with inner-product assignment.
// Initial centroids are a seeded sample of k distinct points; empty clusters
// are repaired by stealing the point with the lowest inner product to its
// current centroid (the stolen point becomes the cluster centroid).
KMeansResult spherical_kmeans(std::span<const float> points, size_t n, size_t d,
                              size_t k, uint32_t iters, uint64_t seed);

HierarchicalIndex build_index(const TokenStore& store,
                              const std::vector<ChunkSpan>& spans,
                              const IndexConfig& cfg);

// Byte accounting at cfg.elem_bytes per element. index_bytes is the serving
// index: centroids, radii and member id lists. Representative keys are only
// needed while building or grafting and are itemized separately.
struct MemoryFootprint {
    size_t index_bytes = 0;
    size_t kv_bytes = 0;
    double ratio = 0.0;
    size_t centroid_bytes = 0;
    size_t radius_bytes = 0;
    size_t id_list_bytes = 0;
    size_t rep_key_bytes = 0;  // informational, not counted in index_bytes
};

MemoryFootprint index_memory_bytes(const HierarchicalIndex& index);

// number of fine clusters for M chunks / number of coarse units for L clusters
size_t fine_cluster_count(size_t chunk_count, double avg_chunks_per_cluster);
size_t coarse_unit_count(size_t cluster_count, uint32_t max_coarse_units);

}  // namespace tierkv
