#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace memetect::text {

/// Lowercase, strip punctuation, collapse whitespace.
std::string normalize(std::string_view s);

/// Tokens of normalize(s), in order.
std::vector<std::string> tokens(std::string_view s);

bool is_stop_word(std::string_view token);

/// Tokens with stop words removed, deduplicated, sorted.
std::vector<std::string> content_terms(std::string_view s);

/// |terms(query) ∩ terms(doc)| / |terms(query)| over content terms.
/// Zero when the query has no content terms.
double containment(std::string_view query, std::string_view doc);

/// Token-level Levenshtein distance divided by the longer token count.
/// Two empty texts have distance 0.
double normalized_edit_distance(std::string_view a, std::string_view b);

}  // namespace memetect::text
