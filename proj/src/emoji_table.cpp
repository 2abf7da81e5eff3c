#include "advtext/emoji_table.hpp"

#include <fstream>

namespace advtext {

namespace {

char32_t parse_hex_codepoint(const std::string& hex) {
  if (hex.empty() || hex.size() > 6) throw Error(errc::bad_codepoint, "bad codepoint '" + hex + "'");
  std::uint32_t value = 0;
  for (char c : hex) {
    int d = -1;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    if (d < 0) throw Error(errc::bad_codepoint, "bad codepoint '" + hex + "'");
    value = value * 16 + static_cast<std::uint32_t>(d);
  }
  if (value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) {
    throw Error(errc::bad_codepoint, "codepoint out of range '" + hex + "'");
  }
  return static_cast<char32_t>(value);
}

std::u32string parse_key(const std::string& spec) {
  std::u32string key;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t dash = spec.find('-', start);
    const std::string part =
        dash == std::string::npos ? spec.substr(start) : spec.substr(start, dash - start);
    key.push_back(parse_hex_codepoint(part));
    if (dash == std::string::npos) break;
    start = dash + 1;
  }
  return key;
}

}  // namespace

EmojiTable load_emoji_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot open emoji table '" + path + "'");

  EmojiTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(errc::bad_codepoint,
                  "emoji table line " + std::to_string(line_no) + ": missing tab separator");
    }
    table.add(parse_key(line.substr(0, tab)), line.substr(tab + 1));
  }

  if (table.entries.empty()) throw Error(errc::empty_table, "'" + path + "' contains no entries");
  return table;
}

}  // namespace advtext
