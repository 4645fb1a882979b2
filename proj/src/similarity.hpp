#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace stepguard::sim {

// Decodes UTF-8 into Unicode scalar values. Invalid byte sequences become
// U+FFFD, one replacement per offending byte, so the function is total.
std::u32string decode_utf8(std::string_view text);

// Gestalt pattern matching (Ratcliff-Obershelp) over Unicode scalar values:
// 2*K/(|a|+|b|) where K is the character count matched by recursively taking
// the longest common contiguous block and recursing on both remainders.
// Ties between equal-length blocks resolve to the smallest start in `a`,
// then the smallest start in `b`. Two empty inputs compare as 1.0.
double gestalt_ratio(std::u32string_view a, std::u32string_view b);
double gestalt_ratio(std::string_view a, std::string_view b);

// Canonical form used for stored violation text: NFC-normalized, control
// characters dropped, whitespace runs collapsed to single spaces, trimmed.
std::string canonicalize(std::string_view text);

// Case-folded canonical form (NFC + lowercase). Comparison key for dedup.
std::string fold_for_comparison(std::string_view text);

// gestalt_ratio over the case-folded canonical forms of both inputs.
// Trivial casing or spacing differences must not defeat deduplication.
double canonical_ratio(std::string_view a, std::string_view b);

} // namespace stepguard::sim
