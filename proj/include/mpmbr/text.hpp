#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mpmbr {

// Canonical composition (NFC). Invalid UTF-8 input is returned unchanged.
std::string nfc(std::string_view utf8);

// Engine-wide tokenization: NFC normalize, then split on Unicode whitespace.
// Used by BLEU and the bigram diversity metric.
std::vector<std::string> tokenize(std::string_view text);

std::string trim(std::string_view s);

// ASCII-only casefold; answers compared by the extractor are expected to be
// numbers or short latin strings.
std::string casefold_ascii(std::string_view s);

std::string strip_trailing_punct(std::string_view s);

// trim + casefold + strip trailing punctuation, in that order.
std::string normalize_answer(std::string_view s);

// Collapse every whitespace run to a single space and trim the ends.
std::string normalize_whitespace(std::string_view s);

bool is_blank(std::string_view s);

}  // namespace mpmbr
