#pragma once

#include <stdexcept>
#include <string>

namespace advtext {

// Error conditions surfaced by the library. The split into data and numeric
// groups drives the CLI exit codes (usage 1, data 2, numeric 3).
enum class errc {
  // data / format errors
  malformed_row,
  unknown_label,
  duplicate_id,
  empty_file,
  k_too_large,
  empty_vocabulary,
  id_out_of_range,
  empty_split,
  misaligned_ids,
  length_mismatch,
  single_class_labels,
  duplicate_key,
  bad_name,
  bad_codepoint,
  empty_table,
  vocab_mismatch,
  bad_config,
  io_error,
  // numeric errors
  zero_gradient,
  non_finite_gradient,
};

const char* errc_name(errc code);
bool is_numeric_error(errc code);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace advtext
