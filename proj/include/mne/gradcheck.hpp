#ifndef MNE_GRADCHECK_HPP
#define MNE_GRADCHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "mne/numeric.hpp"
#include "mne/parallel.hpp"

namespace mne {

// Named contiguous slice of a flat parameter vector.
struct GradCheckBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct GradCheckBlockResult {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;  // absolute index into the flat vector
  double analytic = 0.0;        // gradient values at the worst index
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckBlockResult> blocks;
  double max_rel_err = 0.0;
  double tolerance = 0.0;

  bool passed() const { return max_rel_err < tolerance; }
};

using LossFn = std::function<double(const Vec&)>;

// Central-difference check of an analytic gradient:
//   numeric_i = (loss(theta + h e_i) - loss(theta - h e_i)) / (2h)
//   rel_err_i = |analytic_i - numeric_i| / max(|analytic_i|, |numeric_i|, 1e-8)
// Reports the max relative error per block. loss must be deterministic and
// pure; the parallel path evaluates perturbations concurrently.
GradCheckReport finite_diff_check(const LossFn& loss, const Vec& params,
                                  const Vec& analytic_grad,
                                  std::vector<GradCheckBlock> blocks,
                                  double tolerance, double step = 1e-5,
                                  Exec exec = Exec::serial);

// Same check with several step sizes: the optimal central-difference step is
// per-coordinate (small gradients of a large objective are rounding-limited,
// high-curvature coordinates truncation-limited), so each coordinate is
// scored by the step that agrees best. A genuinely wrong gradient fails at
// every step.
GradCheckReport finite_diff_check(const LossFn& loss, const Vec& params,
                                  const Vec& analytic_grad,
                                  std::vector<GradCheckBlock> blocks,
                                  double tolerance, std::span<const double> steps,
                                  Exec exec);

}  // namespace mne

#endif  // MNE_GRADCHECK_HPP
