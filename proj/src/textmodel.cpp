#include "advtext/textmodel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "advtext/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace advtext {

int Vocab::id_of(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? kUnkId : it->second;
}

std::uint64_t Vocab::fingerprint() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (const std::string& token : id_to_token) {
    for (char c : token) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    h ^= 0xFF;  // token boundary
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : text) {
    char c = raw;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    const bool word_char = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (word_char) {
      current += c;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocab build_vocab(const Dataset& data, int min_freq, int max_size) {
  if (min_freq < 1) throw Error(errc::bad_config, "min_freq must be positive");
  if (max_size < 3) throw Error(errc::bad_config, "max_size must leave room beyond pad and unk");

  std::map<std::string, long> freq;  // ordered map so ties come out lexicographic
  for (const Tweet& t : data.items) {
    for (std::string& token : tokenize(t.text)) freq[std::move(token)] += 1;
  }

  std::vector<std::pair<std::string, long>> kept;
  for (auto& [token, count] : freq) {
    if (count >= min_freq) kept.emplace_back(token, count);
  }
  if (kept.empty()) throw Error(errc::empty_vocabulary, "no token reaches min_freq");

  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (kept.size() > static_cast<std::size_t>(max_size - 2)) {
    kept.resize(static_cast<std::size_t>(max_size - 2));
  }

  Vocab vocab;
  vocab.id_to_token = {"<pad>", "<unk>"};
  vocab.id_to_token.reserve(kept.size() + 2);
  for (auto& [token, count] : kept) vocab.id_to_token.push_back(token);
  for (int id = 0; id < vocab.size(); ++id) vocab.token_to_id[vocab.id_to_token[id]] = id;
  return vocab;
}

std::vector<int> encode(const std::string& text, const Vocab& vocab, int max_len) {
  if (max_len < 1) throw Error(errc::bad_config, "max_len must be positive");
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(max_len));
  for (const std::string& token : tokenize(text)) {
    if (ids.size() == static_cast<std::size_t>(max_len)) break;
    ids.push_back(vocab.id_of(token));
  }
  ids.resize(static_cast<std::size_t>(max_len), Vocab::kPadId);
  return ids;
}

ModelParams init_params(const ModelHyper& hyper, std::uint64_t seed) {
  if (hyper.dim < 1 || hyper.max_len < 1 || hyper.vocab_size < 2) {
    throw Error(errc::bad_config, "invalid model hyperparameters");
  }
  Rng rng(seed);
  auto fill_uniform = [&rng](Matrix& m) {
    for (double& v : m.data()) v = rng.next_uniform(-0.1, 0.1);
  };

  ModelParams p;
  p.hyper = hyper;
  p.embedding = Matrix(hyper.vocab_size, hyper.dim);
  p.wq = Matrix(hyper.dim, hyper.dim);
  p.wk = Matrix(hyper.dim, hyper.dim);
  p.wv = Matrix(hyper.dim, hyper.dim);
  p.wo = Matrix(hyper.dim, hyper.dim);
  fill_uniform(p.embedding);
  fill_uniform(p.wq);
  fill_uniform(p.wk);
  fill_uniform(p.wv);
  fill_uniform(p.wo);
  p.classifier_weight.resize(static_cast<std::size_t>(hyper.dim));
  for (double& v : p.classifier_weight) v = rng.next_uniform(-0.1, 0.1);
  p.classifier_bias = 0.0;
  return p;
}

namespace {

// saturation is nudged back into the open interval so prob stays strictly
// inside (0, 1) for any finite logit
double sigmoid(double x) {
  const double p = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  if (p <= 0.0) return std::numeric_limits<double>::denorm_min();
  if (p >= 1.0) return std::nextafter(1.0, 0.0);
  return p;
}

// out = a * w for L x d rows against a d x d weight; pad rows are skipped
// (nothing downstream reads them) and stay zero.
void project(const Matrix& a, const Matrix& w, Matrix& out, const std::vector<std::uint8_t>& mask) {
  const int rows = a.rows();
  const int d = w.rows();
  for (int i = 0; i < rows; ++i) {
    if (!mask[i]) continue;
    const double* ai = a.row(i);
    double* oi = out.row(i);
    for (int c = 0; c < d; ++c) oi[c] = 0.0;
    for (int k = 0; k < d; ++k) {
      const double aik = ai[k];
      const double* wk = w.row(k);
      for (int c = 0; c < d; ++c) oi[c] += aik * wk[c];
    }
  }
}

}  // namespace

ForwardTrace forward_from_embedded(const ModelParams& params, const std::vector<int>& ids,
                                   const Matrix& embedded) {
  const int L = params.hyper.max_len;
  const int d = params.hyper.dim;
  if (ids.size() != static_cast<std::size_t>(L)) {
    throw Error(errc::length_mismatch, "expected " + std::to_string(L) + " token ids");
  }
  for (int id : ids) {
    if (id < 0 || id >= params.hyper.vocab_size) {
      throw Error(errc::id_out_of_range, "token id " + std::to_string(id));
    }
  }

  ForwardTrace t;
  t.token_ids = ids;
  t.mask.resize(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) t.mask[i] = ids[i] != Vocab::kPadId ? 1 : 0;
  t.embedded = embedded;

  t.query = Matrix(L, d);
  t.key = Matrix(L, d);
  t.value = Matrix(L, d);
  project(t.embedded, params.wq, t.query, t.mask);
  project(t.embedded, params.wk, t.key, t.mask);
  project(t.embedded, params.wv, t.value, t.mask);

  // masked scaled dot-product attention; pad keys are excluded from each
  // softmax and pad query rows stay zero
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  t.attention = Matrix(L, L);
  std::vector<double> scores(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) {
    if (!t.mask[i]) continue;
    double max_score = -1e300;
    for (int j = 0; j < L; ++j) {
      if (!t.mask[j]) continue;
      double s = 0.0;
      const double* qi = t.query.row(i);
      const double* kj = t.key.row(j);
      for (int c = 0; c < d; ++c) s += qi[c] * kj[c];
      s *= scale;
      scores[j] = s;
      max_score = std::max(max_score, s);
    }
    double denom = 0.0;
    for (int j = 0; j < L; ++j) {
      if (!t.mask[j]) continue;
      denom += std::exp(scores[j] - max_score);
    }
    for (int j = 0; j < L; ++j) {
      if (!t.mask[j]) continue;
      t.attention(i, j) = std::exp(scores[j] - max_score) / denom;
    }
  }

  t.context = Matrix(L, d);
  for (int i = 0; i < L; ++i) {
    if (!t.mask[i]) continue;
    double* ci = t.context.row(i);
    for (int j = 0; j < L; ++j) {
      if (!t.mask[j]) continue;
      const double a = t.attention(i, j);
      const double* vj = t.value.row(j);
      for (int c = 0; c < d; ++c) ci[c] += a * vj[c];
    }
  }

  // residual add after the output projection
  t.encoded = Matrix(L, d);
  Matrix projected(L, d);
  project(t.context, params.wo, projected, t.mask);
  for (int i = 0; i < L; ++i) {
    const double* ei = t.embedded.row(i);
    const double* pi = projected.row(i);
    double* ri = t.encoded.row(i);
    for (int c = 0; c < d; ++c) ri[c] = ei[c] + pi[c];
  }

  int n_tokens = 0;
  for (int i = 0; i < L; ++i) n_tokens += t.mask[i];
  t.pooled.assign(static_cast<std::size_t>(d), 0.0);
  if (n_tokens > 0) {
    for (int i = 0; i < L; ++i) {
      if (!t.mask[i]) continue;
      const double* ri = t.encoded.row(i);
      for (int c = 0; c < d; ++c) t.pooled[c] += ri[c];
    }
    for (int c = 0; c < d; ++c) t.pooled[c] /= n_tokens;
  }

  t.logit = params.classifier_bias;
  for (int c = 0; c < d; ++c) t.logit += params.classifier_weight[c] * t.pooled[c];
  t.prob = sigmoid(t.logit);
  return t;
}

ForwardTrace forward(const ModelParams& params, const std::vector<int>& ids) {
  const int L = params.hyper.max_len;
  const int d = params.hyper.dim;
  if (ids.size() != static_cast<std::size_t>(L)) {
    throw Error(errc::length_mismatch, "expected " + std::to_string(L) + " token ids");
  }
  Matrix embedded(L, d);
  for (int i = 0; i < L; ++i) {
    const int id = ids[i];
    if (id < 0 || id >= params.hyper.vocab_size) {
      throw Error(errc::id_out_of_range, "token id " + std::to_string(id));
    }
    const double* src = params.embedding.row(id);
    double* dst = embedded.row(i);
    for (int c = 0; c < d; ++c) dst[c] = src[c];
  }
  return forward_from_embedded(params, ids, embedded);
}

double bce_loss(double prob, Label label) {
  const double p = std::clamp(prob, kProbClamp, 1.0 - kProbClamp);
  return label == Label::INFORMATIVE ? -std::log(p) : -std::log(1.0 - p);
}

bool Gradients::all_finite() const {
  for (double v : classifier_weight) {
    if (!std::isfinite(v)) return false;
  }
  return std::isfinite(classifier_bias) && embedding.all_finite() && wq.all_finite() &&
         wk.all_finite() && wv.all_finite() && wo.all_finite() && wrt_embedded.all_finite();
}

Gradients backward(const ModelParams& params, const ForwardTrace& trace, Label label) {
  const int L = params.hyper.max_len;
  const int d = params.hyper.dim;

  Gradients g;
  g.embedding = Matrix(params.hyper.vocab_size, d);
  g.wq = Matrix(d, d);
  g.wk = Matrix(d, d);
  g.wv = Matrix(d, d);
  g.wo = Matrix(d, d);
  g.classifier_weight.assign(static_cast<std::size_t>(d), 0.0);
  g.wrt_embedded = Matrix(L, d);

  int n_tokens = 0;
  for (int i = 0; i < L; ++i) n_tokens += trace.mask[i];

  // d loss / d logit for sigmoid + cross entropy
  const double delta = trace.prob - (label == Label::INFORMATIVE ? 1.0 : 0.0);

  g.classifier_bias = delta;
  for (int c = 0; c < d; ++c) g.classifier_weight[c] = delta * trace.pooled[c];
  if (n_tokens == 0) return g;  // all-pad input: nothing else receives signal

  // pooled -> encoded rows
  Matrix d_encoded(L, d);
  for (int i = 0; i < L; ++i) {
    if (!trace.mask[i]) continue;
    double* gi = d_encoded.row(i);
    for (int c = 0; c < d; ++c) gi[c] = delta * params.classifier_weight[c] / n_tokens;
  }

  // encoded = embedded + context * wo
  Matrix d_context(L, d);
  for (int i = 0; i < L; ++i) {
    if (!trace.mask[i]) continue;
    const double* gi = d_encoded.row(i);
    const double* ci = trace.context.row(i);
    double* dci = d_context.row(i);
    for (int r = 0; r < d; ++r) {
      const double cir = ci[r];
      const double* wor = params.wo.row(r);
      double acc = 0.0;
      for (int c = 0; c < d; ++c) {
        g.wo(r, c) += cir * gi[c];
        acc += wor[c] * gi[c];
      }
      dci[r] = acc;
    }
    double* dei = g.wrt_embedded.row(i);
    for (int c = 0; c < d; ++c) dei[c] += gi[c];  // residual branch
  }

  // context = attention * value
  Matrix d_attention(L, L);
  Matrix d_value(L, d);
  for (int i = 0; i < L; ++i) {
    if (!trace.mask[i]) continue;
    const double* dci = d_context.row(i);
    for (int j = 0; j < L; ++j) {
      if (!trace.mask[j]) continue;
      const double a = trace.attention(i, j);
      const double* vj = trace.value.row(j);
      double* dvj = d_value.row(j);
      double acc = 0.0;
      for (int c = 0; c < d; ++c) {
        acc += dci[c] * vj[c];
        dvj[c] += a * dci[c];
      }
      d_attention(i, j) = acc;
    }
  }

  // softmax rows: dS_ij = A_ij * (dA_ij - sum_k dA_ik A_ik)
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix d_scores(L, L);
  for (int i = 0; i < L; ++i) {
    if (!trace.mask[i]) continue;
    double dot = 0.0;
    for (int j = 0; j < L; ++j) {
      if (!trace.mask[j]) continue;
      dot += d_attention(i, j) * trace.attention(i, j);
    }
    for (int j = 0; j < L; ++j) {
      if (!trace.mask[j]) continue;
      d_scores(i, j) = trace.attention(i, j) * (d_attention(i, j) - dot);
    }
  }

  // scores = query * key^T * scale
  Matrix d_query(L, d);
  Matrix d_key(L, d);
  for (int i = 0; i < L; ++i) {
    if (!trace.mask[i]) continue;
    double* dqi = d_query.row(i);
    const double* qi = trace.query.row(i);
    for (int j = 0; j < L; ++j) {
      if (!trace.mask[j]) continue;
      const double ds = d_scores(i, j) * scale;
      if (ds == 0.0) continue;
      const double* kj = trace.key.row(j);
      double* dkj = d_key.row(j);
      for (int c = 0; c < d; ++c) {
        dqi[c] += ds * kj[c];
        dkj[c] += ds * qi[c];
      }
    }
  }

  // projections query/key/value = embedded * w
  auto backprop_projection = [&](const Matrix& d_out, const Matrix& w, Matrix& d_w) {
    for (int i = 0; i < L; ++i) {
      if (!trace.mask[i]) continue;
      const double* xi = trace.embedded.row(i);
      const double* gi = d_out.row(i);
      double* dei = g.wrt_embedded.row(i);
      for (int r = 0; r < d; ++r) {
        const double xir = xi[r];
        const double* wr = w.row(r);
        double acc = 0.0;
        for (int c = 0; c < d; ++c) {
          d_w(r, c) += xir * gi[c];
          acc += wr[c] * gi[c];
        }
        dei[r] += acc;
      }
    }
  };
  backprop_projection(d_query, params.wq, g.wq);
  backprop_projection(d_key, params.wk, g.wk);
  backprop_projection(d_value, params.wv, g.wv);

  // embedding rows accumulate by token id; pad rows of wrt_embedded are zero
  // already because no gradient path reaches a masked position.
  for (int i = 0; i < L; ++i) {
    if (!trace.mask[i]) continue;
    const double* dei = g.wrt_embedded.row(i);
    double* rowg = g.embedding.row(trace.token_ids[i]);
    for (int c = 0; c < d; ++c) rowg[c] += dei[c];
  }
  return g;
}

namespace {

void write_doubles(std::ofstream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw Error(errc::io_error, "checkpoint truncated");
}

}  // namespace

void save_checkpoint(const ModelParams& params, const Vocab& vocab, const std::string& path) {
  if (vocab.size() != params.hyper.vocab_size) {
    throw Error(errc::vocab_mismatch, "vocab size does not match parameters");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::io_error, "cannot write checkpoint '" + path + "'");

  out << "advtext-checkpoint 1\n";
  out << "V " << params.hyper.vocab_size << "\n";
  out << "d " << params.hyper.dim << "\n";
  out << "max_len " << params.hyper.max_len << "\n";
  out << "vocab\n";
  for (const std::string& token : vocab.id_to_token) out << token << "\n";
  out << "end-header\n";

  write_doubles(out, params.embedding.data().data(), params.embedding.size());
  write_doubles(out, params.wq.data().data(), params.wq.size());
  write_doubles(out, params.wk.data().data(), params.wk.size());
  write_doubles(out, params.wv.data().data(), params.wv.size());
  write_doubles(out, params.wo.data().data(), params.wo.size());
  write_doubles(out, params.classifier_weight.data(), params.classifier_weight.size());
  write_doubles(out, &params.classifier_bias, 1);
  if (!out) throw Error(errc::io_error, "write failed for checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot open checkpoint '" + path + "'");

  auto next_line = [&in, &path]() {
    std::string line;
    if (!std::getline(in, line)) throw Error(errc::io_error, "checkpoint header truncated in '" + path + "'");
    return line;
  };

  if (next_line() != "advtext-checkpoint 1") {
    throw Error(errc::bad_config, "unrecognized checkpoint format in '" + path + "'");
  }
  auto parse_field = [&next_line](const std::string& key) {
    std::istringstream ss(next_line());
    std::string name;
    long value = 0;
    ss >> name >> value;
    if (!ss || name != key || value < 0) throw Error(errc::bad_config, "bad checkpoint field " + key);
    return static_cast<int>(value);
  };

  Checkpoint ck;
  ck.params.hyper.vocab_size = parse_field("V");
  ck.params.hyper.dim = parse_field("d");
  ck.params.hyper.max_len = parse_field("max_len");
  if (next_line() != "vocab") throw Error(errc::bad_config, "missing vocab section");
  ck.vocab.id_to_token.reserve(static_cast<std::size_t>(ck.params.hyper.vocab_size));
  for (int i = 0; i < ck.params.hyper.vocab_size; ++i) ck.vocab.id_to_token.push_back(next_line());
  for (int id = 0; id < ck.vocab.size(); ++id) ck.vocab.token_to_id[ck.vocab.id_to_token[id]] = id;
  if (next_line() != "end-header") throw Error(errc::bad_config, "missing end-header");
  if (ck.vocab.size() < 2 || ck.vocab.id_to_token[0] != "<pad>" || ck.vocab.id_to_token[1] != "<unk>") {
    throw Error(errc::bad_config, "vocab must reserve <pad> and <unk>");
  }

  const int V = ck.params.hyper.vocab_size;
  const int d = ck.params.hyper.dim;
  if (d < 1 || ck.params.hyper.max_len < 1) throw Error(errc::bad_config, "bad checkpoint shapes");
  ck.params.embedding = Matrix(V, d);
  ck.params.wq = Matrix(d, d);
  ck.params.wk = Matrix(d, d);
  ck.params.wv = Matrix(d, d);
  ck.params.wo = Matrix(d, d);
  ck.params.classifier_weight.resize(static_cast<std::size_t>(d));

  read_doubles(in, ck.params.embedding.data().data(), ck.params.embedding.size());
  read_doubles(in, ck.params.wq.data().data(), ck.params.wq.size());
  read_doubles(in, ck.params.wk.data().data(), ck.params.wk.size());
  read_doubles(in, ck.params.wv.data().data(), ck.params.wv.size());
  read_doubles(in, ck.params.wo.data().data(), ck.params.wo.size());
  read_doubles(in, ck.params.classifier_weight.data(), ck.params.classifier_weight.size());
  read_doubles(in, &ck.params.classifier_bias, 1);
  return ck;
}

}  // namespace advtext
