#include "advtext/preprocess.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace advtext {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  }
  return true;
}

bool valid_codepoint(char32_t cp) {
  return cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

struct DecodedUnit {
  char32_t cp = 0;
  std::size_t begin = 0;  // byte offsets into the source string
  std::size_t length = 0;
  bool valid = false;  // invalid bytes are carried through verbatim, never matched
};

// Byte-preserving decode: malformed sequences become single invalid units so
// re-emission reproduces the input exactly.
std::vector<DecodedUnit> decode_utf8(const std::string& s) {
  std::vector<DecodedUnit> units;
  units.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }

    bool ok = len > 0 && i + len <= s.size();
    if (ok) {
      for (std::size_t j = 1; j < len; ++j) {
        const unsigned char b = static_cast<unsigned char>(s[i + j]);
        if ((b & 0xC0) != 0x80) {
          ok = false;
          break;
        }
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (ok && !valid_codepoint(cp)) ok = false;

    if (ok) {
      units.push_back({cp, i, len, true});
      i += len;
    } else {
      units.push_back({b0, i, 1, false});
      i += 1;
    }
  }
  return units;
}

}  // namespace

void EmojiTable::add(const std::u32string& key, const std::string& name) {
  if (key.empty()) throw Error(errc::bad_codepoint, "empty emoji key");
  for (char32_t cp : key) {
    if (!valid_codepoint(cp)) throw Error(errc::bad_codepoint, "codepoint out of range");
  }
  if (!valid_name(name)) throw Error(errc::bad_name, "emoji name '" + name + "' must match [a-z0-9_]+");
  if (!entries.emplace(key, name).second) {
    throw Error(errc::duplicate_key, "duplicate emoji key for name '" + name + "'");
  }
  max_key_len = std::max(max_key_len, key.size());
}

std::string unescape_html(const std::string& text) {
  static constexpr std::array<std::pair<std::string_view, char>, 5> kNamed = {{
      {"&amp;", '&'},
      {"&lt;", '<'},
      {"&gt;", '>'},
      {"&quot;", '"'},
      {"&apos;", '\''},
  }};

  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out += text[i++];
      continue;
    }

    bool matched = false;
    for (const auto& [entity, ch] : kNamed) {
      if (text.compare(i, entity.size(), entity) == 0) {
        out += ch;
        i += entity.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;

    // numeric reference: &#123; or &#x1F637;
    if (i + 2 < text.size() && text[i + 1] == '#') {
      std::size_t p = i + 2;
      const bool hex = p < text.size() && (text[p] == 'x' || text[p] == 'X');
      if (hex) ++p;
      std::uint64_t value = 0;
      std::size_t digits = 0;
      while (p < text.size() && value <= 0x10FFFF) {
        const char c = text[p];
        int d = -1;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
        if (d < 0) break;
        value = value * (hex ? 16 : 10) + static_cast<std::uint64_t>(d);
        ++digits;
        ++p;
      }
      if (digits > 0 && p < text.size() && text[p] == ';' &&
          valid_codepoint(static_cast<char32_t>(value))) {
        append_utf8(out, static_cast<char32_t>(value));
        i = p + 1;
        continue;
      }
    }

    out += text[i++];  // malformed reference passes through
  }
  return out;
}

std::string normalize_whitespace(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_ws(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

std::string replace_url_token(const std::string& text) {
  static constexpr std::string_view kSource = "HTTPURL";
  static constexpr std::string_view kTarget = "URL";

  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_ws(text[i])) {
      out += text[i++];
      continue;
    }
    std::size_t end = i;
    while (end < text.size() && !is_ws(text[end])) ++end;
    const std::string_view token(text.data() + i, end - i);
    out += token == kSource ? kTarget : token;
    i = end;
  }
  return out;
}

std::string demojize(const std::string& text, const EmojiTable& table) {
  if (table.entries.empty()) throw Error(errc::empty_table, "emoji table is empty");

  const std::vector<DecodedUnit> units = decode_utf8(text);
  std::string out;
  out.reserve(text.size());

  std::size_t i = 0;
  while (i < units.size()) {
    std::size_t matched_len = 0;
    const std::string* name = nullptr;
    if (units[i].valid) {
      // longest match against the table
      std::u32string key;
      const std::size_t limit = std::min(table.max_key_len, units.size() - i);
      for (std::size_t len = 1; len <= limit; ++len) {
        if (!units[i + len - 1].valid) break;
        key.push_back(units[i + len - 1].cp);
        auto it = table.entries.find(key);
        if (it != table.entries.end()) {
          matched_len = len;
          name = &it->second;
        }
      }
    }

    if (name != nullptr) {
      out += " :";
      out += *name;
      out += ": ";
      i += matched_len;
    } else {
      out.append(text, units[i].begin, units[i].length);
      ++i;
    }
  }
  return out;
}

std::string preprocess_text(const std::string& text, const EmojiTable& table) {
  return normalize_whitespace(demojize(replace_url_token(unescape_html(text)), table));
}

}  // namespace advtext
