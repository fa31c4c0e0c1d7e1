#pragma once

#include "tierkv/index.hpp"
#include "tierkv/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace tierkv {

// Binary index container (little-endian, magic "TKIX"). Embeds the token
// store so a saved index is self-contained for queries.
struct IndexFile {
    TokenStore store;
    HierarchicalIndex index;  // index.store points at this->store
};

void save_index(const std::string& path, const HierarchicalIndex& index);
IndexFile load_index(const std::string& path);

// In-memory serialization, also used to check build determinism.
std::vector<std::byte> index_to_bytes(const HierarchicalIndex& index);

// Token files are JSON: {"d": ..., "tokens": [{"text","key","value"}...]}
TokenStore load_tokens_json(const std::string& path);
void save_tokens_json(const std::string& path, const TokenStore& store);

// Query files are JSON: {"queries": [[...], ...]}
std::vector<std::vector<float>> load_queries_json(const std::string& path);

}  // namespace tierkv
