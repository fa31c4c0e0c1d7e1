#include "tierkv/chunker.hpp"

#include <algorithm>

namespace tierkv {

const char* to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::natural: return "natural";
        case BoundaryKind::forced: return "forced";
        case BoundaryKind::tail: return "tail";
    }
    return "?";
}

ChunkPolicy ChunkPolicy::defaults() {
    ChunkPolicy p;
    p.min_len = 8;
    p.max_len = 16;
    p.separator_table = {
        {1, {"\n\n", "---", "***", "```", "}", "]", ">"}},
        {2, {".", "?", "!", "。", "？", "！", "\n"}},
        {3, {",", ";", ":", "，", "；", "：", "、"}},
        {4, {" ", "\t"}},
    };
    return p;
}

void ChunkPolicy::validate() const {
    if (min_len < 1 || min_len > max_len)
        throw std::invalid_argument("chunk policy requires 1 <= min_len <= max_len");
    int prev = 0;
    for (const auto& [level, seps] : separator_table) {
        if (level <= prev)
            throw std::invalid_argument("separator levels must be strictly increasing");
        prev = level;
        (void)seps;
    }
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_strip_char(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

std::string strip_trailing_ws(const std::string& s) {
    size_t n = s.size();
    while (n > 0 && is_strip_char(s[n - 1])) --n;
    return s.substr(0, n);
}

size_t codepoint_count(const std::string& s) {
    size_t n = 0;
    for (char c : s)
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    return n;
}

std::optional<int> classify_impl(const std::string& text, const ChunkPolicy& policy,
                                 bool multichar_only) {
    if (text.empty()) return std::nullopt;
    const std::string stripped = strip_trailing_ws(text);
    for (const auto& [level, seps] : policy.separator_table) {
        if (level <= 3) {
            for (const auto& sep : seps) {
                if (multichar_only && codepoint_count(sep) < 2) continue;
                if (ends_with(text, sep) || ends_with(stripped, sep)) return level;
            }
        } else if (!multichar_only) {
            const char last = text.back();
            if (last == ' ' || last == '\t') return level;
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<int> classify_boundary(const std::string& text,
                                     const ChunkPolicy& policy) {
    return classify_impl(text, policy, false);
}

std::optional<int> classify_boundary_pair(const std::string& prev_text,
                                          const std::string& text,
                                          const ChunkPolicy& policy) {
    auto own = classify_impl(text, policy, false);
    if (own && *own == 1) return own;
    if (!text.empty() && !prev_text.empty()) {
        // a spanning match can only improve the level, never add one below it
        auto spanning = classify_impl(prev_text + text, policy, true);
        if (spanning && (!own || *spanning < *own)) return spanning;
    }
    return own;
}

std::vector<ChunkSpan> segment(std::span<const std::string> texts,
                               const ChunkPolicy& policy) {
    policy.validate();
    const size_t n = texts.size();
    if (n == 0) throw std::invalid_argument("empty stream");

    std::vector<ChunkSpan> spans;
    size_t start = 0;
    while (start < n) {
        const size_t remaining = n - start;
        if (remaining < policy.min_len) {
            spans.push_back({static_cast<uint32_t>(start), static_cast<uint32_t>(n),
                             BoundaryKind::tail, 0});
            break;
        }
        const size_t hi = std::min<size_t>(policy.max_len, remaining);
        static const std::string no_prev;
        int best_level = 0;
        size_t best_len = 0;
        for (size_t len = policy.min_len; len <= hi; ++len) {
            const size_t pos = start + len - 1;
            const std::string& prev = pos > 0 ? texts[pos - 1] : no_prev;
            auto level = classify_boundary_pair(prev, texts[pos], policy);
            // rightmost split among equal priorities
            if (level && (best_level == 0 || *level <= best_level)) {
                best_level = *level;
                best_len = len;
            }
        }
        if (best_len > 0) {
            spans.push_back({static_cast<uint32_t>(start),
                             static_cast<uint32_t>(start + best_len),
                             BoundaryKind::natural, best_level});
            start += best_len;
        } else if (remaining >= policy.max_len) {
            spans.push_back({static_cast<uint32_t>(start),
                             static_cast<uint32_t>(start + policy.max_len),
                             BoundaryKind::forced, 0});
            start += policy.max_len;
        } else {
            spans.push_back({static_cast<uint32_t>(start), static_cast<uint32_t>(n),
                             BoundaryKind::tail, 0});
            break;
        }
    }
    return spans;
}

}  // namespace tierkv
