#include "traitlens/probing.hpp"

#include <cmath>
#include <future>

#include "traitlens/detail/hash.hpp"
#include "traitlens/detail/rng.hpp"
#include "traitlens/logistic.hpp"

namespace traitlens {

namespace {

double base_factor(LogBase base) {
  return base == LogBase::natural ? 1.0 : 1.0 / std::log(2.0);
}

// Gathers one layer of the requested split as doubles.
void gather(const ProbeDataset& ds, Index layer, Split split, Matrix& x,
            std::vector<Index>& y) {
  if (!ds.is_split()) {
    throw InputError("dataset has no train/test split; run stratified_split");
  }
  if (layer < 1 || layer > ds.layer_count()) {
    throw InputError("layer " + std::to_string(layer) + " out of range");
  }
  const Index n = ds.count_in(split);
  x.resize(n, ds.dim());
  y.clear();
  y.reserve(static_cast<size_t>(n));
  Index row = 0;
  for (size_t i = 0; i < ds.records.size(); ++i) {
    if (ds.split[i] != split) continue;
    x.row(row) = ds.records[i].layers.row(layer - 1).cast<double>();
    y.push_back(ds.records[i].label);
    ++row;
  }
}

double nll_of_scores(const Vector& scores, Index label) {
  const double m = scores.maxCoeff();
  const double lse = m + std::log((scores.array() - m).exp().sum());
  return lse - scores[label];
}

}  // namespace

uint64_t dataset_hash(const ProbeDataset& dataset) {
  uint64_t h = detail::kFnvOffset;
  for (const auto& l : dataset.labels.all()) {
    h = detail::fnv1a64(l.id, h);
    h = detail::fnv1a64(l.name, h);
  }
  for (const auto& rec : dataset.records) {
    h = detail::fnv1a64(rec.id, h);
    const auto label = static_cast<uint64_t>(rec.label);
    h = detail::fnv1a64(&label, sizeof(label), h);
    for (Index r = 0; r < rec.layers.rows(); ++r) {
      for (Index c = 0; c < rec.layers.cols(); ++c) {
        const float v = rec.layers(r, c);
        h = detail::fnv1a64(&v, sizeof(v), h);
      }
    }
  }
  return h;
}

LayerProbe train_layer_probe(const ProbeDataset& dataset, Index layer,
                             const VInfoConfig& config, uint64_t seed) {
  Matrix x;
  std::vector<Index> y;
  gather(dataset, layer, Split::train, x, y);
  if (x.rows() == 0) throw InputError("train split is empty");
  const Index k = dataset.labels.size();

  ProbeMeta meta;
  meta.lambda = config.lambda;
  meta.tolerance = config.tolerance;
  meta.seed = seed;

  if (config.family == ProbeFamily::linear) {
    LogisticFitConfig fc;
    fc.lambda = config.lambda;
    fc.tolerance = config.tolerance;
    fc.max_iter = config.max_iter;
    LogisticFit fit = fit_multinomial(x, y, k, fc);
    meta.residual = fit.grad_norm;
    meta.iterations = fit.iterations;
    return LayerProbe::linear(layer, std::move(fit.w), std::move(fit.b), meta);
  }

  Mlp2FitConfig mc;
  mc.hidden = config.mlp_hidden;
  mc.lambda = config.lambda;
  mc.iterations = config.mlp_iterations;
  mc.learning_rate = config.mlp_learning_rate;
  mc.seed = detail::mix_seed(seed, 0x3E7ULL, static_cast<uint64_t>(layer));
  Mlp2Fit fit = fit_mlp2(x, y, k, mc);
  meta.iterations = fit.iterations;
  meta.residual = fit.objective;
  return LayerProbe::mlp2(layer, std::move(fit.w1), std::move(fit.b1),
                          std::move(fit.w2), std::move(fit.b2), meta);
}

double conditional_v_entropy(const LayerProbe& probe,
                             const ProbeDataset& dataset, LogBase base) {
  Matrix x;
  std::vector<Index> y;
  gather(dataset, probe.layer(), Split::test, x, y);
  if (x.rows() == 0) throw InputError("test split is empty");
  if (probe.dim() != dataset.dim() ||
      probe.label_count() != dataset.labels.size()) {
    throw InputError("probe and dataset disagree on (k, d)");
  }
  double acc = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    acc += nll_of_scores(probe.scores(x.row(i).transpose()),
                         y[static_cast<size_t>(i)]);
  }
  return base_factor(base) * acc / static_cast<double>(x.rows());
}

double null_v_entropy(const ProbeDataset& dataset, const VInfoConfig& config) {
  Matrix xtr;
  std::vector<Index> ytr;
  gather(dataset, 1, Split::train, xtr, ytr);
  Matrix xte;
  std::vector<Index> yte;
  gather(dataset, 1, Split::test, xte, yte);
  if (xtr.rows() == 0 || xte.rows() == 0) {
    throw InputError("null entropy needs non-empty train and test labels");
  }
  const Index k = dataset.labels.size();

  // Same family, zero-filled inputs: only the class priors are learnable.
  Matrix zeros = Matrix::Zero(xtr.rows(), dataset.dim());
  Vector zero_input = Vector::Zero(dataset.dim());
  Vector scores;
  if (config.family == ProbeFamily::linear) {
    LogisticFitConfig fc;
    fc.lambda = config.lambda;
    fc.tolerance = config.tolerance;
    fc.max_iter = config.max_iter;
    LogisticFit fit = fit_multinomial(zeros, ytr, k, fc);
    scores = fit.w * zero_input + fit.b;
  } else {
    Mlp2FitConfig mc;
    mc.hidden = config.mlp_hidden;
    mc.lambda = config.lambda;
    mc.iterations = config.mlp_iterations;
    mc.learning_rate = config.mlp_learning_rate;
    mc.seed = detail::mix_seed(0, 0x3E7ULL, 0);
    Mlp2Fit fit = fit_mlp2(zeros, ytr, k, mc);
    const Vector h = ((fit.w1 * zero_input + fit.b1).array().tanh()).matrix();
    scores = fit.w2 * h + fit.b2;
  }

  double acc = 0.0;
  for (Index label : yte) acc += nll_of_scores(scores, label);
  return base_factor(config.base) * acc / static_cast<double>(yte.size());
}

double heldout_accuracy(const LayerProbe& probe, const ProbeDataset& dataset) {
  Matrix x;
  std::vector<Index> y;
  gather(dataset, probe.layer(), Split::test, x, y);
  if (x.rows() == 0) throw InputError("test split is empty");
  Index hits = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    hits += probe.predict(x.row(i).transpose()) == y[static_cast<size_t>(i)];
  }
  return static_cast<double>(hits) / static_cast<double>(x.rows());
}

VInfoResult v_information(const ProbeDataset& dataset,
                          const VInfoConfig& config, uint64_t seed) {
  if (!dataset.is_split()) {
    throw InputError("dataset has no train/test split; run stratified_split");
  }
  const Index layer_count = dataset.layer_count();
  if (layer_count == 0) throw InputError("dataset is empty");

  VInfoResult result;
  result.null_entropy = null_v_entropy(dataset, config);

  struct PerLayer {
    LayerProbe probe;
    double conditional;
    double accuracy;
  };
  std::vector<std::future<PerLayer>> futures;
  futures.reserve(static_cast<size_t>(layer_count));
  for (Index l = 1; l <= layer_count; ++l) {
    futures.push_back(std::async(std::launch::async, [&, l]() {
      PerLayer out;
      out.probe = train_layer_probe(
          dataset, l, config, detail::mix_seed(seed, static_cast<uint64_t>(l)));
      out.conditional = conditional_v_entropy(out.probe, dataset, config.base);
      out.accuracy = heldout_accuracy(out.probe, dataset);
      return out;
    }));
  }

  result.stack.label_names.reserve(static_cast<size_t>(dataset.labels.size()));
  for (const auto& l : dataset.labels.all()) {
    result.stack.label_names.push_back(l.name);
  }
  result.stack.dataset_hash = detail::hash_hex(dataset_hash(dataset));

  for (auto& f : futures) {
    PerLayer out = f.get();
    result.conditional.push_back(out.conditional);
    result.accuracy.push_back(out.accuracy);
    const double iv = result.null_entropy - out.conditional;
    result.v_information.push_back(iv);
    result.has_negative = result.has_negative || iv < 0.0;
    result.stack.probes.push_back(std::move(out.probe));
  }
  result.stack.validate();
  return result;
}

std::vector<double> layer_group_average(const std::vector<double>& values,
                                        Index group_size) {
  if (group_size < 1) throw DomainError("group size must be >= 1");
  if (values.empty()) throw InputError("layer_group_average needs input values");
  std::vector<double> out;
  for (size_t start = 0; start < values.size();
       start += static_cast<size_t>(group_size)) {
    const size_t end =
        std::min(values.size(), start + static_cast<size_t>(group_size));
    double sum = 0.0;
    for (size_t i = start; i < end; ++i) sum += values[i];
    out.push_back(sum / static_cast<double>(end - start));
  }
  return out;
}

}  // namespace traitlens
