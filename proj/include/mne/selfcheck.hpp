#ifndef MNE_SELFCHECK_HPP
#define MNE_SELFCHECK_HPP

#include <cstdint>
#include <vector>

#include "mne/gradcheck.hpp"
#include "mne/model.hpp"

namespace mne {

// One gradient-integrity configuration: a random memory and target, a full
// tree, and the complete training loss (classification + weighted pair
// loss) differentiated with respect to every parameter block and the root
// feature.
struct SelfCheckConfig {
  std::size_t dim = 8;
  std::size_t diff_dim = 0;  // 0 -> dim
  int k = 3;
  int depth = 2;
  std::size_t classes = 5;
  std::size_t memory_size = 40;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  double step = 1e-5;
  Exec exec = Exec::parallel;
};

struct SelfCheckOutcome {
  SelfCheckConfig config;
  GradCheckReport report;
};

// Builds the instance, computes analytic gradients through the whole chain
// and compares them against central differences.
SelfCheckOutcome run_selfcheck(const SelfCheckConfig& config);

// The default sweep: configurations spanning dim {2, 8, 32}, k {1, 3, 8}
// and depth {1, 2}, all seeded from base_seed.
std::vector<SelfCheckConfig> selfcheck_sweep(std::uint64_t base_seed);

}  // namespace mne

#endif  // MNE_SELFCHECK_HPP
