#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "advtext/errors.hpp"

namespace advtext {

// Emoji codepoint sequence -> lowercase shortname. Multi-codepoint sequences
// (flags, variation selectors) are matched longest-first.
struct EmojiTable {
  std::map<std::u32string, std::string> entries;
  std::size_t max_key_len = 0;  // codepoints in the longest key

  // Validates the name charset ([a-z0-9_]+) and key uniqueness.
  void add(const std::u32string& key, const std::string& name);
};

// Replaces the five predefined XML entities (&amp; &lt; &gt; &quot; &apos;)
// and numeric character references (&#123; &#x1F637;) in a single pass; the
// result is not rescanned, so "&amp;amp;" becomes "&amp;". Malformed
// references pass through unchanged.
std::string unescape_html(const std::string& text);

// Collapses every run of space, tab, CR, LF to a single space and strips
// leading/trailing whitespace.
std::string normalize_whitespace(const std::string& text);

// Rewrites each whitespace-delimited token exactly equal to "HTTPURL" as
// "URL"; substrings inside larger tokens are untouched. Other whitespace is
// preserved as-is.
std::string replace_url_token(const std::string& text);

// Replaces each maximal table-known emoji sequence with " :name: ". The
// padding spaces are collapsed later by normalize_whitespace; see
// preprocess_text for the composition order. Unknown emoji pass through.
std::string demojize(const std::string& text, const EmojiTable& table);

// unescape_html, then replace_url_token, then demojize, then
// normalize_whitespace last so demojization padding is collapsed.
std::string preprocess_text(const std::string& text, const EmojiTable& table);

}  // namespace advtext
