#ifndef MNE_SYNTHETIC_HPP
#define MNE_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "mne/dataset.hpp"

namespace mne {

// Gaussian class blobs around unit-sphere centers, optionally split into two
// sub-modes per class (shifted +/- half the offset along a per-class
// direction) to mimic a two-camera appearance change.
struct SyntheticSpec {
  std::size_t classes = 2;
  std::size_t per_class = 2;
  std::size_t dim = 2;
  double sigma = 0.1;
  double bimodal_offset = 0.0;  // 0 disables the sub-modes
  std::uint64_t seed = 0;
};

struct SyntheticData {
  Dataset data;
  std::vector<int> modes;  // sub-mode (0/1) per item; all zero when unimodal
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace mne

#endif  // MNE_SYNTHETIC_HPP
