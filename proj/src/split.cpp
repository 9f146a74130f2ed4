#include "traitlens/split.hpp"

#include <algorithm>
#include <cmath>

#include "traitlens/detail/rng.hpp"

namespace traitlens {

ProbeDataset stratified_split(const LabelSet& labels,
                              std::vector<ActivationRecord> records,
                              double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw DomainError("split ratio must lie in (0,1)");
  }
  const Index k = labels.size();
  std::vector<std::vector<size_t>> by_label(static_cast<size_t>(k));
  for (size_t i = 0; i < records.size(); ++i) {
    const Index y = records[i].label;
    if (y < 0 || y >= k) {
      throw InputError("record '" + records[i].id + "' has label index out of range");
    }
    by_label[static_cast<size_t>(y)].push_back(i);
  }
  for (Index y = 0; y < k; ++y) {
    if (by_label[static_cast<size_t>(y)].size() < 2) {
      throw InsufficientDataError("label '" + labels.at(y).id +
                                  "' has fewer than 2 records");
    }
  }

  ProbeDataset ds;
  ds.labels = labels;
  ds.split.assign(records.size(), Split::test);

  for (Index y = 0; y < k; ++y) {
    auto& idx = by_label[static_cast<size_t>(y)];
    // Seeded Fisher-Yates, one stream per label so the assignment does not
    // depend on how records interleave across labels.
    detail::Rng rng(detail::mix_seed(seed, 0x5157ULL, static_cast<uint64_t>(y)));
    for (size_t i = idx.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(rng.next_below(i));
      std::swap(idx[i - 1], idx[j]);
    }
    // round(ratio * n) keeps each label within one record of the target
    // fraction; clamping keeps both splits non-empty.
    auto n_train = static_cast<size_t>(
        std::llround(ratio * static_cast<double>(idx.size())));
    n_train = std::clamp<size_t>(n_train, 1, idx.size() - 1);
    for (size_t i = 0; i < idx.size(); ++i) {
      ds.split[idx[i]] = (i < n_train) ? Split::train : Split::test;
    }
  }

  ds.records = std::move(records);
  return ds;
}

}  // namespace traitlens
