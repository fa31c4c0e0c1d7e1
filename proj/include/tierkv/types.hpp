#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tierkv {

using VecF = std::vector<float>;

// One element of the token stream: surface text plus the key/value pair
// produced for it. ids are consecutive from 0 within a stream.
struct TokenRecord {
    uint32_t id = 0;
    std::string text;
    VecF key;
    VecF value;
};

// Flat column store for the full token history. Keys and values are row-major
// [n x dim]. Append-only; chunk spans index into it by position.
class TokenStore {
public:
    TokenStore() = default;
    explicit TokenStore(size_t dim) : dim_(dim) {}

    size_t dim() const { return dim_; }
    size_t size() const { return texts_.size(); }
    bool empty() const { return texts_.empty(); }

    void append(const TokenRecord& t) {
        if (dim_ == 0) dim_ = t.key.size();
        if (t.key.size() != dim_ || t.value.size() != dim_)
            throw std::invalid_argument("token key/value dimension mismatch");
        if (t.id != texts_.size())
            throw std::invalid_argument("non-sequential token id");
        texts_.push_back(t.text);
        keys_.insert(keys_.end(), t.key.begin(), t.key.end());
        values_.insert(values_.end(), t.value.begin(), t.value.end());
    }

    const float* key(size_t i) const { return keys_.data() + i * dim_; }
    const float* value(size_t i) const { return values_.data() + i * dim_; }
    const std::string& text(size_t i) const { return texts_[i]; }
    const std::vector<std::string>& texts() const { return texts_; }
    std::span<const float> keys_flat() const { return keys_; }
    std::span<const float> values_flat() const { return values_; }

private:
    size_t dim_ = 0;
    std::vector<std::string> texts_;
    std::vector<float> keys_;
    std::vector<float> values_;
};

enum class BoundaryKind : uint8_t { natural, forced, tail };

// Contiguous token range [start, end). `level` is the separator priority that
// produced a natural split (1 = strongest), 0 otherwise.
struct ChunkSpan {
    uint32_t start = 0;
    uint32_t end = 0;
    BoundaryKind kind = BoundaryKind::forced;
    int level = 0;

    uint32_t length() const { return end - start; }
    bool operator==(const ChunkSpan&) const = default;
};

const char* to_string(BoundaryKind k);

}  // namespace tierkv
