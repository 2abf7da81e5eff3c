#pragma once

#include <string>

#include "advtext/preprocess.hpp"

namespace advtext {

// File format: one entry per line, "1F637<TAB>face_with_medical_mask";
// multi-codepoint sequences join their hex codepoints with "-"
// (e.g. "1F1FA-1F1F8"). Lines starting with '#' and blank lines are skipped.
EmojiTable load_emoji_table(const std::string& path);

}  // namespace advtext
