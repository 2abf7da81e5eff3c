#include "advtext/errors.hpp"

namespace advtext {

const char* errc_name(errc code) {
  switch (code) {
    case errc::malformed_row: return "MalformedRow";
    case errc::unknown_label: return "UnknownLabel";
    case errc::duplicate_id: return "DuplicateId";
    case errc::empty_file: return "EmptyFile";
    case errc::k_too_large: return "KTooLarge";
    case errc::empty_vocabulary: return "EmptyVocabulary";
    case errc::id_out_of_range: return "IdOutOfRange";
    case errc::empty_split: return "EmptySplit";
    case errc::misaligned_ids: return "MisalignedIds";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::single_class_labels: return "SingleClassLabels";
    case errc::duplicate_key: return "DuplicateKey";
    case errc::bad_name: return "BadName";
    case errc::bad_codepoint: return "BadCodepoint";
    case errc::empty_table: return "EmptyTable";
    case errc::vocab_mismatch: return "VocabMismatch";
    case errc::bad_config: return "BadConfig";
    case errc::io_error: return "IoError";
    case errc::zero_gradient: return "ZeroGradient";
    case errc::non_finite_gradient: return "NonFiniteGradient";
  }
  return "UnknownError";
}

bool is_numeric_error(errc code) {
  return code == errc::zero_gradient || code == errc::non_finite_gradient;
}

}  // namespace advtext
