#include "traitlens/synthetic.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <set>
#include <sstream>

#include "traitlens/detail/hash.hpp"
#include "traitlens/detail/rng.hpp"

namespace traitlens {

namespace {

// Stream tags for the independent noise streams.
constexpr uint64_t kTagBasis = 0xB0;
constexpr uint64_t kTagLayer = 0xB1;
constexpr uint64_t kTagTrait = 0xB2;
constexpr uint64_t kTagComplement = 0xB3;
constexpr uint64_t kTagReadout = 0xB4;
constexpr uint64_t kTagWordEmb = 0xB5;

Matrix gaussian_matrix(detail::Rng& rng, Index rows, Index cols, double scale) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = scale * rng.next_gaussian();
  return m;
}

Vector gaussian_vector(uint64_t seed, Index n, double scale) {
  detail::Rng rng(seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = scale * rng.next_gaussian();
  return v;
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

}  // namespace

std::vector<double> SyntheticRuntimeSpec::ramp_schedule(Index layers,
                                                        double top) {
  std::vector<double> s(static_cast<size_t>(layers));
  for (Index l = 0; l < layers; ++l) {
    s[static_cast<size_t>(l)] =
        layers == 1 ? top : top * static_cast<double>(l) / (layers - 1);
  }
  return s;
}

void SyntheticRuntimeSpec::validate() const {
  if (layers < 1) throw SpecError("layers must be >= 1");
  const Index k = labels.size();
  if (k < 2) throw SpecError("synthetic runtime needs k >= 2 labels");
  if (dim <= k) throw SpecError("dim must exceed the label count");
  if (static_cast<Index>(separation.size()) != layers) {
    throw SpecError("separation schedule must have one entry per layer");
  }
  for (double s : separation) {
    if (!(s >= 0.0)) throw SpecError("separation entries must be >= 0");
  }
  if (noise_scale < 0.0) throw SpecError("noise_scale must be >= 0");
  if (block_size < 1 || neutral_size < 1) {
    throw SpecError("block_size and neutral_size must be >= 1");
  }
  if (!block_words.empty()) {
    if (static_cast<Index>(block_words.size()) != k) {
      throw SpecError("block_words must provide one list per label");
    }
    std::set<std::string> seen;
    for (const auto& words : block_words) {
      if (words.empty()) throw SpecError("custom token block is empty");
      for (const auto& w : words) {
        if (!seen.insert(w).second) {
          throw SpecError("vocabulary blocks are not disjoint: '" + w + "'");
        }
      }
    }
  }
}

SyntheticRuntime::SyntheticRuntime(SyntheticRuntimeSpec spec)
    : spec_(std::move(spec)) {
  spec_.validate();
  const Index d = spec_.dim;
  k_ = spec_.labels.size();
  const Index dc = d - k_;

  // Orthonormal trait directions plus a complement basis from one QR.
  detail::Rng basis_rng(detail::mix_seed(spec_.seed, kTagBasis));
  Matrix g = gaussian_matrix(basis_rng, d, d, 1.0);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  trait_basis_ = q.leftCols(k_);
  complement_basis_ = q.rightCols(dc);

  alpha_.resize(static_cast<size_t>(spec_.layers));
  for (Index l = 0; l < spec_.layers; ++l) {
    alpha_[static_cast<size_t>(l)] =
        spec_.sep_base * spec_.separation[static_cast<size_t>(l)];
  }

  const double mix_sd = spec_.mix_scale / std::sqrt(static_cast<double>(d));
  const double attn_sd = spec_.attn_mix / std::sqrt(static_cast<double>(d));
  for (Index l = 1; l <= spec_.layers; ++l) {
    detail::Rng rng(detail::mix_seed(spec_.seed, kTagLayer, static_cast<uint64_t>(l)));
    mix_.push_back(gaussian_matrix(rng, dc, d, mix_sd));
    attn_.push_back(gaussian_matrix(rng, dc, d, attn_sd));
    layer_bias_.push_back(gaussian_matrix(rng, dc, 1, 0.1).col(0));
  }

  // Vocabulary: one block per label, shared neutral tokens, end marker.
  blocks_.resize(static_cast<size_t>(k_));
  for (Index y = 0; y < k_; ++y) {
    auto& block = blocks_[static_cast<size_t>(y)];
    if (!spec_.block_words.empty()) {
      block = spec_.block_words[static_cast<size_t>(y)];
    } else {
      const std::string stem = sanitize(spec_.labels.at(y).name);
      block.push_back(stem);
      for (Index j = 1; j < spec_.block_size; ++j) {
        std::ostringstream os;
        os << stem << '_' << (j < 10 ? "0" : "") << j;
        block.push_back(os.str());
      }
    }
  }
  for (Index y = 0; y < k_; ++y) {
    for (const auto& w : blocks_[static_cast<size_t>(y)]) {
      if (word_to_id_.count(w)) {
        throw SpecError("vocabulary blocks are not disjoint: '" + w + "'");
      }
      word_to_id_[w] = static_cast<int>(vocab_.size());
      vocab_.push_back(w);
      token_block_.push_back(y);
    }
    // The label name always tokenizes into its block so prompts carry the
    // trait signal even under custom word lists.
    const std::string alias = sanitize(spec_.labels.at(y).name);
    if (!word_to_id_.count(alias)) {
      word_to_id_[alias] =
          word_to_id_.at(blocks_[static_cast<size_t>(y)].front());
    } else if (token_block_[static_cast<size_t>(word_to_id_.at(alias))] != y) {
      throw SpecError("label name '" + alias + "' collides with another block");
    }
  }
  for (Index j = 0; j < spec_.neutral_size; ++j) {
    std::ostringstream os;
    os << "filler_" << (j < 10 ? "0" : "") << j;
    word_to_id_[os.str()] = static_cast<int>(vocab_.size());
    vocab_.push_back(os.str());
    token_block_.push_back(-1);
  }
  eoq_id_ = static_cast<int>(vocab_.size());
  vocab_.push_back("<eoq>");
  token_block_.push_back(-1);
}

std::shared_ptr<SyntheticRuntime> build_synthetic(SyntheticRuntimeSpec spec) {
  return std::make_shared<SyntheticRuntime>(std::move(spec));
}

RuntimeInfo SyntheticRuntime::info() const {
  RuntimeInfo info;
  std::ostringstream id;
  id << "synthetic-L" << spec_.layers << "-d" << spec_.dim << "-seed"
     << spec_.seed;
  info.id = id.str();
  info.layers = spec_.layers;
  info.dim = spec_.dim;
  std::ostringstream vocab;
  vocab << k_ << " trait blocks + " << spec_.neutral_size
        << " neutral tokens + <eoq>";
  info.vocabulary = vocab.str();
  return info;
}

std::string SyntheticRuntime::normalize_word(const std::string& raw) const {
  size_t b = 0, e = raw.size();
  while (b < e && !std::isalnum(static_cast<unsigned char>(raw[b])) &&
         raw[b] != '<')
    ++b;
  while (e > b && !std::isalnum(static_cast<unsigned char>(raw[e - 1])) &&
         raw[e - 1] != '>')
    --e;
  std::string out;
  for (size_t i = b; i < e; ++i) {
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i])));
  }
  return out;
}

std::vector<std::string> SyntheticRuntime::tokenize(
    const std::string& text) const {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string raw;
  while (is >> raw) {
    std::string w = normalize_word(raw);
    if (!w.empty()) out.push_back(std::move(w));
  }
  return out;
}

Vector SyntheticRuntime::embedding(const std::string& word) const {
  const Index d = spec_.dim;
  auto it = word_to_id_.find(word);
  if (it != word_to_id_.end()) {
    const int id = it->second;
    if (id == eoq_id_) return Vector::Zero(d);
    const Index y = token_block_[static_cast<size_t>(id)];
    if (y >= 0) return trait_basis_.col(y);
  }
  // Neutral and out-of-vocabulary words carry a word-keyed complement
  // component and no trait component.
  const Index dc = d - k_;
  const Vector r = gaussian_vector(
      detail::mix_seed(spec_.seed, kTagWordEmb, detail::fnv1a64(word)), dc,
      0.8 / std::sqrt(static_cast<double>(dc)));
  return complement_basis_ * r;
}

Vector SyntheticRuntime::centroid(Index layer, Index label) const {
  if (layer < 1 || layer > spec_.layers) throw InputError("layer out of range");
  if (label < 0 || label >= k_) throw InputError("label out of range");
  return alpha_[static_cast<size_t>(layer - 1)] * trait_basis_.col(label);
}

const std::vector<std::string>& SyntheticRuntime::block_word_list(
    Index label) const {
  if (label < 0 || label >= k_) throw InputError("label out of range");
  return blocks_[static_cast<size_t>(label)];
}

Index SyntheticRuntime::block_of_token(int token_id) const {
  if (token_id < 0 || token_id >= static_cast<int>(token_block_.size())) {
    throw InputError("token id out of range");
  }
  return token_block_[static_cast<size_t>(token_id)];
}

std::string SyntheticRuntime::word_of_token(int token_id) const {
  if (token_id < 0 || token_id >= static_cast<int>(vocab_.size())) {
    throw InputError("token id out of range");
  }
  return vocab_[static_cast<size_t>(token_id)];
}

LabelSet SyntheticRuntime::judge_label_set() const {
  std::vector<Label> labels = spec_.labels.all();
  for (Index y = 0; y < k_; ++y) {
    labels[static_cast<size_t>(y)].lexicon = blocks_[static_cast<size_t>(y)];
  }
  return LabelSet(std::move(labels));
}

struct SyntheticRuntime::Pass {
  std::vector<std::vector<Vector>> cache;  // per layer: post-hook states
  std::vector<Vector> cache_sum;           // per layer: running sum
  Vector emb_sum;
  Index positions = 0;
  uint64_t prefix = detail::kFnvOffset;
};

void SyntheticRuntime::process_token(Pass& pass, const std::string& word,
                                     Index step, const LayerHook* hook,
                                     HookMode mode, Matrix* states_out) const {
  const Index d = spec_.dim;
  const Index dc = d - k_;

  const Vector emb = embedding(word);
  pass.emb_sum += emb;
  pass.positions += 1;
  pass.prefix = detail::fnv1a64(word, pass.prefix);
  pass.prefix = detail::fnv1a64("\x1f", pass.prefix);  // word separator

  // Direction of the trait signal accumulated from all consumed tokens.
  Vector inj = trait_basis_.transpose() * (pass.emb_sum / pass.positions);
  const double inj_norm = inj.norm();
  Vector inj_dir = inj_norm > 1e-12 ? Vector(inj / inj_norm)
                                    : Vector(Vector::Zero(k_));

  // Layer-0 state: token embedding plus the position's trait noise draw.
  // The draw is shared by all layers (carried by the unit-gain trait
  // recursion), so each layer's class-conditional spread equals noise_scale.
  const Vector trait_noise = gaussian_vector(
      detail::mix_seed(spec_.seed, kTagTrait, pass.prefix,
                       static_cast<uint64_t>(pass.positions)),
      k_, spec_.noise_scale);
  Vector h = emb + trait_basis_ * trait_noise;

  double alpha_prev = 0.0;
  for (Index l = 1; l <= spec_.layers; ++l) {
    const auto li = static_cast<size_t>(l - 1);
    const double inj_gain = alpha_[li] - alpha_prev;
    alpha_prev = alpha_[li];

    Vector attn = Vector::Zero(d);
    if (pass.positions > 1) {
      attn = pass.cache_sum[li] / static_cast<double>(pass.positions - 1);
    }

    const Vector z = trait_basis_.transpose() * h + inj_gain * inj_dir;
    Vector c = mix_[li] * h + attn_[li] * attn + layer_bias_[li];
    c += gaussian_vector(
        detail::mix_seed(spec_.seed, kTagComplement ^ (static_cast<uint64_t>(l) << 8),
                         pass.prefix, static_cast<uint64_t>(pass.positions)),
        dc, spec_.complement_noise);
    h = trait_basis_ * z + complement_basis_ * c;

    Vector cached = h;
    if (hook != nullptr && step >= 1) {
      Vector edited = (*hook)(l, step, h);
      if (edited.size() != d) {
        throw HookContractError(
            "hook returned dimension " + std::to_string(edited.size()) +
            ", expected " + std::to_string(d));
      }
      cached = std::move(edited);
      if (mode == HookMode::in_pass) h = cached;
      // post_hoc: downstream layers keep the unedited state; the cache and
      // the readout see the edit.
    }
    pass.cache[li].push_back(cached);
    pass.cache_sum[li] += cached;
    if (states_out != nullptr) states_out->row(l - 1) = cached.transpose();
  }
}

MatrixF SyntheticRuntime::capture(
    const std::vector<std::string>& tokens) const {
  if (tokens.empty()) {
    throw InputError("capture requires a non-empty token sequence");
  }
  Pass pass;
  pass.cache.resize(static_cast<size_t>(spec_.layers));
  pass.cache_sum.assign(static_cast<size_t>(spec_.layers),
                        Vector::Zero(spec_.dim));
  pass.emb_sum = Vector::Zero(spec_.dim);

  Matrix states(spec_.layers, spec_.dim);
  for (const auto& raw : tokens) {
    const std::string w = normalize_word(raw);
    process_token(pass, w.empty() ? raw : w, 0, nullptr, HookMode::in_pass,
                  &states);
  }
  return states.cast<float>();
}

int SyntheticRuntime::readout_argmax(const Vector& final_state,
                                     uint64_t prefix) const {
  const double gain = spec_.readout_gain;
  detail::Rng jitter_rng(detail::mix_seed(spec_.seed, kTagReadout, prefix));
  Vector trait = trait_basis_.transpose() * final_state;
  int best = -1;
  double best_logit = 0.0;
  for (int v = 0; v < static_cast<int>(vocab_.size()); ++v) {
    if (v == eoq_id_) {
      jitter_rng.next_gaussian();  // keep the stream aligned
      continue;
    }
    const Index y = token_block_[static_cast<size_t>(v)];
    const double base =
        y >= 0 ? gain * trait[y] : gain * spec_.neutral_level;
    const double logit = base + spec_.readout_jitter * jitter_rng.next_gaussian();
    if (best < 0 || logit > best_logit) {
      best = v;
      best_logit = logit;
    }
  }
  return best;
}

GenerationTrace SyntheticRuntime::generate(const std::string& prompt,
                                           const GenerateOptions& options) const {
  return generate_debug(prompt, options, nullptr);
}

GenerationTrace SyntheticRuntime::generate_debug(const std::string& prompt,
                                                 const GenerateOptions& options,
                                                 GenerationDebug* debug) const {
  if (options.max_tokens < 1) {
    throw InputError("max_tokens must be >= 1");
  }
  GenerationTrace trace;
  trace.prompt_text = prompt;
  trace.prompt_tokens = tokenize(prompt);
  if (trace.prompt_tokens.empty()) {
    throw InputError("prompt tokenized to nothing");
  }

  Pass pass;
  pass.cache.resize(static_cast<size_t>(spec_.layers));
  pass.cache_sum.assign(static_cast<size_t>(spec_.layers),
                        Vector::Zero(spec_.dim));
  pass.emb_sum = Vector::Zero(spec_.dim);

  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& w : trace.prompt_tokens) {
    process_token(pass, w, 0, nullptr, HookMode::in_pass, nullptr);
  }
  const auto t1 = std::chrono::steady_clock::now();

  Matrix states(spec_.layers, spec_.dim);
  std::string current = "<eoq>";
  for (Index t = 1; t <= options.max_tokens; ++t) {
    process_token(pass, current, t, options.hook, options.mode, &states);
    if (debug != nullptr) debug->step_states.push_back(states);
    const int next =
        readout_argmax(states.row(spec_.layers - 1).transpose(), pass.prefix);
    trace.token_ids.push_back(next);
    trace.tokens.push_back(vocab_[static_cast<size_t>(next)]);
    current = vocab_[static_cast<size_t>(next)];
  }
  const auto t2 = std::chrono::steady_clock::now();

  trace.timing.prompt_seconds = std::chrono::duration<double>(t1 - t0).count();
  trace.timing.generate_seconds = std::chrono::duration<double>(t2 - t1).count();

  if (debug != nullptr) {
    debug->cache.clear();
    for (const auto& layer_cache : pass.cache) {
      Matrix m(spec_.dim, static_cast<Index>(layer_cache.size()));
      for (size_t p = 0; p < layer_cache.size(); ++p) {
        m.col(static_cast<Index>(p)) = layer_cache[p];
      }
      debug->cache.push_back(std::move(m));
    }
  }
  return trace;
}

}  // namespace traitlens
