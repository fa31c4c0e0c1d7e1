#pragma once

#include "tierkv/chunker.hpp"
#include "tierkv/index.hpp"
#include "tierkv/types.hpp"
#include "tierkv/workload.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace testutil {

// token stream with the given texts; keys/values are deterministic gaussians
inline tierkv::TokenStore make_tokens(const std::vector<std::string>& texts,
                                      size_t d = 8, uint64_t seed = 99) {
    tierkv::TokenStore store(d);
    tierkv::Rng rng(seed);
    for (size_t i = 0; i < texts.size(); ++i) {
        tierkv::TokenRecord t;
        t.id = static_cast<uint32_t>(i);
        t.text = texts[i];
        t.key.resize(d);
        t.value.resize(d);
        double n2 = 0.0;
        for (size_t j = 0; j < d; ++j) {
            t.key[j] = static_cast<float>(rng.next_gaussian());
            n2 += static_cast<double>(t.key[j]) * t.key[j];
        }
        const double inv = 1.0 / std::sqrt(n2);
        for (size_t j = 0; j < d; ++j) t.key[j] = static_cast<float>(t.key[j] * inv);
        for (size_t j = 0; j < d; ++j)
            t.value[j] = static_cast<float>(rng.next_gaussian());
        store.append(t);
    }
    return store;
}

inline std::vector<std::string> plain_texts(size_t n, const std::string& fill = "x") {
    return std::vector<std::string>(n, fill);
}

inline tierkv::VecF unit_vec(std::initializer_list<float> v) {
    tierkv::VecF out(v);
    double n2 = 0.0;
    for (float x : out) n2 += static_cast<double>(x) * x;
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& x : out) x = static_cast<float>(x * inv);
    return out;
}

inline tierkv::VecF basis(size_t d, size_t axis, float sign = 1.0f) {
    tierkv::VecF v(d, 0.0f);
    v[axis] = sign;
    return v;
}

inline tierkv::VecF random_unit(tierkv::Rng& rng, size_t d) {
    tierkv::VecF v(d);
    double n2 = 0.0;
    for (size_t j = 0; j < d; ++j) {
        v[j] = static_cast<float>(rng.next_gaussian());
        n2 += static_cast<double>(v[j]) * v[j];
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& x : v) x = static_cast<float>(x * inv);
    return v;
}

inline double dot(const tierkv::VecF& a, const tierkv::VecF& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

// spans of fixed width tiling n tokens (hand-made, independent of segment())
inline std::vector<tierkv::ChunkSpan> fixed_spans(size_t n, size_t width) {
    std::vector<tierkv::ChunkSpan> spans;
    for (size_t s = 0; s < n; s += width) {
        const size_t e = std::min(n, s + width);
        spans.push_back({static_cast<uint32_t>(s), static_cast<uint32_t>(e),
                         tierkv::BoundaryKind::forced, 0});
    }
    return spans;
}

}  // namespace testutil
