#include "mne/synthetic.hpp"

#include <random>

namespace mne {

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw DegenerateInputError("generate_synthetic: need >= 2 classes");
  if (spec.per_class < 2) throw DegenerateInputError("generate_synthetic: need >= 2 per class");
  if (spec.dim < 1) throw DegenerateInputError("generate_synthetic: need dim >= 1");
  if (spec.sigma < 0.0) throw DegenerateInputError("generate_synthetic: sigma must be >= 0");
  if (spec.bimodal_offset < 0.0) {
    throw DegenerateInputError("generate_synthetic: bimodal offset must be >= 0");
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_unit = [&]() {
    Vec v(spec.dim);
    double n2 = 0.0;
    do {
      for (double& x : v) x = gauss(rng);
      n2 = dot(v, v);
    } while (n2 == 0.0);
    return l2_normalize(v);
  };

  SyntheticData out;
  out.data.features.reserve(spec.classes * spec.per_class);
  out.data.labels.reserve(spec.classes * spec.per_class);
  out.modes.reserve(spec.classes * spec.per_class);

  for (std::size_t c = 0; c < spec.classes; ++c) {
    const Vec center = random_unit();
    Vec offset(spec.dim, 0.0);
    if (spec.bimodal_offset > 0.0) {
      offset = random_unit();
      for (double& x : offset) x *= spec.bimodal_offset;
    }
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      const int mode = spec.bimodal_offset > 0.0 ? static_cast<int>(i % 2) : 0;
      Vec x = center;
      const double side = mode == 0 ? -0.5 : 0.5;
      for (std::size_t j = 0; j < spec.dim; ++j) {
        x[j] += side * offset[j] + spec.sigma * gauss(rng);
      }
      out.data.features.push_back(std::move(x));
      out.data.labels.push_back(static_cast<int>(c));
      out.modes.push_back(mode);
    }
  }
  return out;
}

}  // namespace mne
