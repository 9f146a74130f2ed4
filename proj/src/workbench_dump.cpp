#include "traitlens/workbench/dump.hpp"

#include <bit>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>

#include <nlohmann/json.hpp>

#include "traitlens/detail/hash.hpp"
#include "traitlens/probing.hpp"

namespace traitlens::workbench {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "dump tensors are little-endian; big-endian hosts unsupported");

std::string layer_file_name(Index layer) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "layer_%02lld.f32",
                static_cast<long long>(layer));
  return buf;
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void atomic_write(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + tmp.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("short write: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace

void save_dump(const ProbeDataset& dataset, const fs::path& dir) {
  if (!dataset.split.empty() &&
      dataset.split.size() != dataset.records.size()) {
    throw InputError("split assignment length does not match records");
  }
  const Index layers = dataset.layer_count();
  const Index dim = dataset.dim();
  for (const auto& rec : dataset.records) {
    if (rec.layers.rows() != layers || rec.layers.cols() != dim) {
      throw InputError("record '" + rec.id + "' has mismatched shape");
    }
    if (!rec.layers.allFinite()) {
      throw InputError("record '" + rec.id + "' contains non-finite values");
    }
  }
  fs::create_directories(dir);

  ordered_json manifest;
  manifest["format"] = "traitlens-dump";
  manifest["version"] = 1;
  manifest["layers"] = layers;
  manifest["dim"] = dim;
  manifest["labels"] = ordered_json::array();
  for (const auto& l : dataset.labels.all()) {
    manifest["labels"].push_back(ordered_json{{"id", l.id},
                                              {"name", l.name},
                                              {"lexicon", l.lexicon},
                                              {"persona", l.persona}});
  }
  manifest["records"] = ordered_json::array();
  for (size_t i = 0; i < dataset.records.size(); ++i) {
    ordered_json rec{{"id", dataset.records[i].id},
                     {"label", dataset.records[i].label}};
    if (!dataset.split.empty()) {
      rec["split"] = dataset.split[i] == Split::train ? "train" : "test";
    }
    manifest["records"].push_back(std::move(rec));
  }

  manifest["files"] = ordered_json::array();
  for (Index l = 1; l <= layers; ++l) {
    std::string bytes;
    bytes.reserve(dataset.records.size() * static_cast<size_t>(dim) * 4);
    for (const auto& rec : dataset.records) {
      for (Index c = 0; c < dim; ++c) {
        const float v = rec.layers(l - 1, c);
        bytes.append(reinterpret_cast<const char*>(&v), sizeof(v));
      }
    }
    const std::string name = layer_file_name(l);
    atomic_write(dir / name, bytes);
    manifest["files"].push_back(
        ordered_json{{"layer", l},
                     {"name", name},
                     {"bytes", bytes.size()},
                     {"fnv1a64", detail::hash_hex(detail::fnv1a64(bytes))}});
  }

  manifest["crosscheck"] = ordered_json::array();
  if (!dataset.records.empty() && dim > 0) {
    const auto& first = dataset.records.front();
    for (Index c = 0; c < std::min<Index>(4, dim); ++c) {
      manifest["crosscheck"].push_back(static_cast<double>(first.layers(0, c)));
    }
  }
  manifest["dataset_fnv1a64"] = detail::hash_hex(dataset_hash(dataset));
  manifest["provenance"] = ordered_json{{"created_at", iso_now()}};

  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

ProbeDataset load_dump(const fs::path& dir) {
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest.json is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (manifest.at("format") != "traitlens-dump" || manifest.at("version") != 1) {
      throw FormatError("unsupported dump format/version");
    }
    const Index layers = manifest.at("layers").get<Index>();
    const Index dim = manifest.at("dim").get<Index>();

    std::vector<Label> labels;
    for (const auto& l : manifest.at("labels")) {
      Label label;
      label.id = l.at("id").get<std::string>();
      label.name = l.at("name").get<std::string>();
      label.lexicon = l.value("lexicon", std::vector<std::string>{});
      label.persona = l.value("persona", std::string{});
      labels.push_back(std::move(label));
    }

    ProbeDataset ds;
    ds.labels = LabelSet(std::move(labels));
    bool any_split = false;
    for (const auto& r : manifest.at("records")) {
      ActivationRecord rec;
      rec.id = r.at("id").get<std::string>();
      rec.label = r.at("label").get<Index>();
      rec.layers = MatrixF::Zero(layers, dim);
      ds.records.push_back(std::move(rec));
      if (r.contains("split")) {
        any_split = true;
        ds.split.push_back(r.at("split") == "train" ? Split::train : Split::test);
      } else {
        ds.split.push_back(Split::train);
      }
    }
    if (!any_split) ds.split.clear();

    const auto n = ds.records.size();
    for (const auto& f : manifest.at("files")) {
      const Index layer = f.at("layer").get<Index>();
      if (layer < 1 || layer > layers) {
        throw FormatError("manifest names layer " + std::to_string(layer) +
                          " outside 1.." + std::to_string(layers));
      }
      const std::string name = f.at("name").get<std::string>();
      const std::string bytes = read_file(dir / name);
      const auto expected_bytes = n * static_cast<size_t>(dim) * 4;
      if (bytes.size() != expected_bytes ||
          bytes.size() != f.at("bytes").get<size_t>()) {
        throw FormatError("layer " + std::to_string(layer) + " file size " +
                          std::to_string(bytes.size()) + " != expected " +
                          std::to_string(expected_bytes));
      }
      if (detail::hash_hex(detail::fnv1a64(bytes)) !=
          f.at("fnv1a64").get<std::string>()) {
        throw CorruptionError("layer " + std::to_string(layer) +
                              " content hash mismatch");
      }
      size_t off = 0;
      for (auto& rec : ds.records) {
        for (Index c = 0; c < dim; ++c, off += 4) {
          float v = 0.0f;
          std::memcpy(&v, bytes.data() + off, 4);
          rec.layers(layer - 1, c) = v;
        }
      }
    }
    if (static_cast<Index>(manifest.at("files").size()) != layers) {
      throw FormatError("dump holds " +
                        std::to_string(manifest.at("files").size()) +
                        " layer files, expected " + std::to_string(layers));
    }

    if (!ds.records.empty() && dim > 0) {
      const auto& cc = manifest.at("crosscheck");
      for (Index c = 0; c < std::min<Index>(4, dim); ++c) {
        const auto stored = cc.at(static_cast<size_t>(c)).get<double>();
        if (static_cast<float>(stored) != ds.records.front().layers(0, c)) {
          throw CorruptionError("cross-check vector mismatch (endianness?)");
        }
      }
    }
    if (manifest.contains("dataset_fnv1a64") &&
        manifest.at("dataset_fnv1a64").get<std::string>() !=
            detail::hash_hex(dataset_hash(ds))) {
      throw CorruptionError("dataset content hash mismatch");
    }
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest.json is missing fields: " + std::string(e.what()));
  }
}

}  // namespace traitlens::workbench
