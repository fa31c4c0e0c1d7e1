#pragma once

#include "tierkv/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tierkv {

// Boundary-aware segmentation. Tokens accumulate greedily; once a chunk
// reaches min_len the window up to max_len is scanned for the strongest
// separator, preferring the rightmost position among equal priorities.
// Separator-free streams degrade to fixed-size chunks of max_len.

struct ChunkPolicy {
    uint32_t min_len = 8;
    uint32_t max_len = 16;
    // priority level (1 = strongest) -> separator strings
    std::vector<std::pair<int, std::vector<std::string>>> separator_table;

    static ChunkPolicy defaults();
    void validate() const;
};

// Strongest priority level whose separator ends `text`. Trailing whitespace
// is stripped before matching levels 1-3 so tokenizers that glue newlines or
// spaces onto a separator still classify; level 4 is any token ending in
// space or tab. Empty text never matches.
std::optional<int> classify_boundary(const std::string& text,
                                     const ChunkPolicy& policy);

// classify_boundary extended with multi-character separators ("\n\n", "---",
// "***", "```") that span this token and its predecessor.
std::optional<int> classify_boundary_pair(const std::string& prev_text,
                                          const std::string& text,
                                          const ChunkPolicy& policy);

std::vector<ChunkSpan> segment(std::span<const std::string> texts,
                               const ChunkPolicy& policy);

}  // namespace tierkv
