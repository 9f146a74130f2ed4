#include "traitlens/workbench/probe_store.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace traitlens::workbench {

namespace {

using nlohmann::ordered_json;

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const ordered_json& j) {
  const auto rows = j.size();
  const auto cols = rows == 0 ? 0 : j.at(0).size();
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols) throw FormatError("ragged weight matrix");
    for (size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = j.at(r).at(c).get<double>();
    }
  }
  return m;
}

ordered_json vector_json(const Vector& v) {
  ordered_json out = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const ordered_json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j.at(i).get<double>();
  return v;
}

}  // namespace

void save_probes(const ProbeStack& stack, const std::filesystem::path& path) {
  stack.validate();
  const auto& first = stack.probes.front();
  if (first.family() != ProbeFamily::linear) {
    // mlp2 probes are a probing-time ablation; only linear probes feed
    // steering and the store.
    throw UnsupportedFamilyError("probe stores persist linear probes only");
  }

  ordered_json doc;
  doc["format"] = "traitlens-probes";
  doc["version"] = 1;
  doc["family"] = std::string(to_string(first.family()));
  doc["layers"] = stack.layer_count();
  doc["dim"] = first.dim();
  doc["k"] = first.label_count();
  doc["labels"] = stack.label_names;
  doc["dataset_fnv1a64"] = stack.dataset_hash;
  doc["probes"] = ordered_json::array();
  for (const auto& p : stack.probes) {
    ordered_json pj;
    pj["layer"] = p.layer();
    pj["w"] = matrix_json(p.weights());
    pj["b"] = vector_json(p.bias());
    pj["meta"] = ordered_json{{"lambda", p.meta().lambda},
                              {"tolerance", p.meta().tolerance},
                              {"residual", p.meta().residual},
                              {"iterations", p.meta().iterations},
                              {"seed", p.meta().seed}};
    doc["probes"].push_back(std::move(pj));
  }

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + tmp.string());
    os << doc.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

LoadedProbes load_probes(const std::filesystem::path& path,
                         const LabelSet* expected_labels,
                         const std::string* expected_dataset_hash) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  ordered_json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("probe store is not valid JSON: " + std::string(e.what()));
  }

  LoadedProbes out;
  try {
    if (doc.at("format") != "traitlens-probes" || doc.at("version") != 1) {
      throw FormatError("unsupported probe-store format/version");
    }
    const auto family = probe_family_from_string(doc.at("family").get<std::string>());
    if (family != ProbeFamily::linear) {
      throw FormatError("probe store holds a non-linear family");
    }
    const Index layers = doc.at("layers").get<Index>();
    const Index dim = doc.at("dim").get<Index>();
    const Index k = doc.at("k").get<Index>();
    out.stack.label_names = doc.at("labels").get<std::vector<std::string>>();
    out.stack.dataset_hash = doc.value("dataset_fnv1a64", std::string{});

    if (static_cast<Index>(out.stack.label_names.size()) != k) {
      throw FormatError("probe store label list does not match k");
    }
    if (expected_labels != nullptr) {
      if (expected_labels->size() != k) {
        throw FormatError("probe store k=" + std::to_string(k) +
                          " does not match the supplied label set (k=" +
                          std::to_string(expected_labels->size()) + ")");
      }
      for (Index y = 0; y < k; ++y) {
        if (expected_labels->at(y).name != out.stack.label_names[static_cast<size_t>(y)]) {
          throw FormatError("probe store label order differs from the label set");
        }
      }
    }

    std::vector<std::optional<LayerProbe>> slots(static_cast<size_t>(layers));
    for (const auto& pj : doc.at("probes")) {
      const Index layer = pj.at("layer").get<Index>();
      if (layer < 1 || layer > layers) {
        throw FormatError("probe store names layer " + std::to_string(layer) +
                          " outside 1.." + std::to_string(layers));
      }
      Matrix w = matrix_from_json(pj.at("w"));
      Vector b = vector_from_json(pj.at("b"));
      if (w.rows() != k || w.cols() != dim || b.size() != k) {
        throw FormatError("layer " + std::to_string(layer) +
                          " weight shape mismatch");
      }
      ProbeMeta meta;
      if (pj.contains("meta")) {
        const auto& mj = pj.at("meta");
        meta.lambda = mj.value("lambda", 0.0);
        meta.tolerance = mj.value("tolerance", 0.0);
        meta.residual = mj.value("residual", 0.0);
        meta.iterations = mj.value("iterations", 0);
        meta.seed = mj.value("seed", static_cast<uint64_t>(0));
      }
      slots[static_cast<size_t>(layer - 1)] =
          LayerProbe::linear(layer, std::move(w), std::move(b), meta);
    }
    std::string gaps;
    for (Index l = 1; l <= layers; ++l) {
      if (!slots[static_cast<size_t>(l - 1)]) {
        gaps += (gaps.empty() ? "" : ", ") + std::to_string(l);
      }
    }
    if (!gaps.empty()) {
      throw FormatError("probe store is missing layers: " + gaps);
    }
    for (auto& slot : slots) out.stack.probes.push_back(std::move(*slot));
    out.stack.validate();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("probe store is missing fields: " + std::string(e.what()));
  }

  if (expected_dataset_hash != nullptr && !out.stack.dataset_hash.empty() &&
      out.stack.dataset_hash != *expected_dataset_hash) {
    out.warnings.push_back(
        "probe store provenance hash " + out.stack.dataset_hash +
        " does not match the supplied dump (" + *expected_dataset_hash + ")");
  }
  return out;
}

}  // namespace traitlens::workbench
