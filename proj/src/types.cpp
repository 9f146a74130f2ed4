#include "traitlens/types.hpp"

#include <set>
#include <sstream>

namespace traitlens {

LabelSet::LabelSet(std::vector<Label> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw InputError("label set needs at least 2 labels, got " +
                     std::to_string(labels_.size()));
  }
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.id.empty() || l.name.empty()) {
      throw InputError("label id and name must be non-empty");
    }
    if (!seen.insert(l.id).second || !seen.insert(l.name).second) {
      throw InputError("duplicate label id or name: " + l.id + "/" + l.name);
    }
  }
  // Lexicons, when present, must be pairwise disjoint or the lexicon judge
  // is ill-defined.
  std::set<std::string> words;
  for (const auto& l : labels_) {
    for (const auto& w : l.lexicon) {
      if (!words.insert(w).second) {
        throw InputError("lexicons overlap on word '" + w + "'");
      }
    }
  }
}

Index LabelSet::index_of(std::string_view id_or_name) const {
  for (size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].id == id_or_name || labels_[i].name == id_or_name) {
      return static_cast<Index>(i);
    }
  }
  throw InputError("unknown label: " + std::string(id_or_name));
}

bool LabelSet::contains(std::string_view id_or_name) const {
  for (const auto& l : labels_) {
    if (l.id == id_or_name || l.name == id_or_name) return true;
  }
  return false;
}

bool LabelSet::has_lexicons() const {
  for (const auto& l : labels_) {
    if (l.lexicon.empty()) return false;
  }
  return !labels_.empty();
}

void SteeringConfig::validate(Index layer_count, Index label_count) const {
  if (!(p_hat > 0.0 && p_hat < 1.0)) {
    throw DomainError("p_hat must lie in (0,1), got " + std::to_string(p_hat));
  }
  if (target < 0 || target >= label_count) {
    throw ConfigError("steering target index out of range");
  }
  if (layer_lo < 1 || layer_lo > layer_hi || layer_hi > layer_count) {
    std::ostringstream os;
    os << "layer range [" << layer_lo << "," << layer_hi
       << "] invalid for L=" << layer_count;
    throw ConfigError(os.str());
  }
  if (max_tokens < 1) {
    throw ConfigError("max_tokens must be >= 1");
  }
  if (patch) {
    if (patch->phi < 0.0 || patch->phi > 1.0) {
      throw DomainError("patch phi must lie in [0,1]");
    }
    if (static_cast<Index>(patch->selected.size()) != layer_count) {
      throw ConfigError("patch spec layer count mismatch");
    }
  }
}

std::string_view to_string(SkipReason r) {
  switch (r) {
    case SkipReason::none: return "none";
    case SkipReason::already_target: return "already-target";
    case SkipReason::outside_layer_range: return "outside-layer-range";
  }
  return "none";
}

std::string GenerationTrace::response_text() const {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace traitlens
