#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kgfuse::ingest {

using TokenSequence = std::vector<std::string>;

// Splits on whitespace and ASCII punctuation, lowercases ASCII letters and
// drops empty tokens. Bytes >= 0x80 are kept inside tokens so UTF-8 words
// survive intact.
TokenSequence tokenize(std::string_view text);

// Tokens joined by single spaces; the canonical text form used for lookups.
std::string normalize_text(std::string_view text);

}  // namespace kgfuse::ingest
