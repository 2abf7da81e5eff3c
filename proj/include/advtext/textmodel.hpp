#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "advtext/corpus.hpp"
#include "advtext/matrix.hpp"

namespace advtext {

// Loss clamp shared between training and analysis: probabilities enter the
// cross entropy clamped to [kProbClamp, 1 - kProbClamp].
inline constexpr double kProbClamp = 1e-7;

struct Vocab {
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;

  std::vector<std::string> id_to_token;  // index == id; [0]="<pad>", [1]="<unk>"
  std::unordered_map<std::string, int> token_to_id;

  int size() const { return static_cast<int>(id_to_token.size()); }
  int id_of(const std::string& token) const;

  // FNV-1a over the token listing; used to detect checkpoint/vocab drift.
  std::uint64_t fingerprint() const;
};

// Lower-cased tokenization: tokens are maximal runs of [a-z0-9_] after ASCII
// lower-casing; everything else separates. Underscore stays part of a token
// so demojized emoji names survive as single tokens.
std::vector<std::string> tokenize(const std::string& text);

// Tokens with frequency >= min_freq, most frequent first (ties broken
// lexicographically), truncated to max_size - 2 entries after the reserved
// pad and unk ids.
Vocab build_vocab(const Dataset& data, int min_freq, int max_size);

// Tokenizes, maps unknown tokens to unk, truncates to max_len and right-pads
// with pad to exactly max_len ids.
std::vector<int> encode(const std::string& text, const Vocab& vocab, int max_len);

struct ModelHyper {
  int dim = 32;
  int max_len = 64;
  int vocab_size = 0;
};

// All trainable arrays of the classifier.
struct ModelParams {
  Matrix embedding;                       // V x d
  Matrix wq, wk, wv, wo;                  // d x d
  std::vector<double> classifier_weight;  // d
  double classifier_bias = 0.0;
  ModelHyper hyper;
};

// Uniform [-0.1, 0.1] init from a seeded stream; classifier bias 0.
ModelParams init_params(const ModelHyper& hyper, std::uint64_t seed);

// Cached activations of one forward pass. `embedded` is the raw sequence of
// embedding rows (plus the FGM perturbation when present); no normalization
// is applied anywhere.
struct ForwardTrace {
  std::vector<int> token_ids;
  std::vector<std::uint8_t> mask;  // 1 = non-pad position
  Matrix embedded;                 // L x d
  Matrix query, key, value;        // L x d
  Matrix attention;                // L x L; rows of pad queries are zero
  Matrix context;                  // L x d, attention * value
  Matrix encoded;                  // L x d, embedded + context * wo
  std::vector<double> pooled;      // d, masked mean over encoded rows
  double logit = 0.0;
  double prob = 0.5;
};

// Embedding lookup -> masked single-head scaled dot-product self-attention ->
// residual add -> masked mean-pool -> linear -> sigmoid. An all-pad input
// pools to the zero vector, so prob = sigmoid(classifier_bias).
ForwardTrace forward(const ModelParams& params, const std::vector<int>& ids);

// Same pass but over an explicit embedded sequence (the FGM path and the
// finite-difference oracle both need the loss as a function of `embedded`).
ForwardTrace forward_from_embedded(const ModelParams& params, const std::vector<int>& ids,
                                   const Matrix& embedded);

// -log p(label | input) with the shared clamp.
double bce_loss(double prob, Label label);

// Gradients of bce_loss with respect to every parameter array and to
// trace.embedded. Pad rows of wrt_embedded are exactly zero.
struct Gradients {
  Matrix embedding;
  Matrix wq, wk, wv, wo;
  std::vector<double> classifier_weight;
  double classifier_bias = 0.0;
  Matrix wrt_embedded;  // L x d

  bool all_finite() const;
};

Gradients backward(const ModelParams& params, const ForwardTrace& trace, Label label);

// Checkpoint file: text header (format version, V, d, max_len, vocabulary
// listing) followed by all parameter arrays in declared order, row-major,
// 64-bit little-endian floats.
struct Checkpoint {
  ModelParams params;
  Vocab vocab;
};

void save_checkpoint(const ModelParams& params, const Vocab& vocab, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace advtext
