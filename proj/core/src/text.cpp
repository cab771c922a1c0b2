#include "memetect/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace memetect::text {

namespace {

// Short English function-word list; sorted for binary search.
constexpr std::array<std::string_view, 72> kStopWords = {
    "a", "about", "after", "all", "am", "an", "and", "any", "are", "as",
    "at", "be", "been", "but", "by", "can", "did", "do", "does", "for",
    "from", "had", "has", "have", "he", "her", "him", "his", "how", "i",
    "if", "in", "into", "is", "it", "its", "just", "me", "my", "no",
    "not", "of", "on", "or", "our", "she", "so", "than", "that", "the",
    "their", "them", "then", "there", "they", "this", "to", "too", "us", "was",
    "we", "were", "what", "when", "which", "who", "will", "with", "yes", "you",
    "your", "yours",
};
static_assert(std::is_sorted(kStopWords.begin(), kStopWords.end()));

}  // namespace

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char raw : s) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isalnum(c)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isspace(c)) {
      pending_space = true;
    } else if (c >= 0x80) {
      // Keep non-ASCII bytes verbatim; only ASCII punctuation is stripped.
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(raw);
    } else if (raw != '\'') {
      pending_space = true;  // punctuation separates words, apostrophes join them
    }
  }
  return out;
}

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  const std::string n = normalize(s);
  std::size_t start = 0;
  while (start < n.size()) {
    auto end = n.find(' ', start);
    if (end == std::string::npos) end = n.size();
    out.emplace_back(n.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

bool is_stop_word(std::string_view token) {
  return std::binary_search(kStopWords.begin(), kStopWords.end(), token);
}

std::vector<std::string> content_terms(std::string_view s) {
  auto toks = tokens(s);
  std::erase_if(toks, [](const std::string& t) { return is_stop_word(t); });
  std::sort(toks.begin(), toks.end());
  toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
  return toks;
}

double containment(std::string_view query, std::string_view doc) {
  const auto q = content_terms(query);
  if (q.empty()) return 0.0;
  const auto d = content_terms(doc);
  std::vector<std::string> common;
  std::set_intersection(q.begin(), q.end(), d.begin(), d.end(), std::back_inserter(common));
  return static_cast<double>(common.size()) / static_cast<double>(q.size());
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
  const auto ta = tokens(a);
  const auto tb = tokens(b);
  const std::size_t n = ta.size();
  const std::size_t m = tb.size();
  if (n == 0 && m == 0) return 0.0;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (ta[i - 1] == tb[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[m]) / static_cast<double>(std::max(n, m));
}

}  // namespace memetect::text
