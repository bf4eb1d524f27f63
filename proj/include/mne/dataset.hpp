#ifndef MNE_DATASET_HPP
#define MNE_DATASET_HPP

#include <vector>

#include "mne/numeric.hpp"

namespace mne {

// In-memory feature set; labels parallel to features when present.
struct Dataset {
  std::vector<Vec> features;
  std::vector<int> labels;  // empty for unlabeled sets

  bool labeled() const { return !labels.empty(); }
  std::size_t size() const { return features.size(); }
  std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }

  void validate() const;
  int num_classes() const;  // max label + 1
};

}  // namespace mne

#endif  // MNE_DATASET_HPP
