#include "mne/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mne {

GradCheckReport finite_diff_check(const LossFn& loss, const Vec& params,
                                  const Vec& analytic_grad,
                                  std::vector<GradCheckBlock> blocks,
                                  double tolerance, double step, Exec exec) {
  const double steps[] = {step};
  return finite_diff_check(loss, params, analytic_grad, std::move(blocks), tolerance,
                           std::span<const double>(steps, 1), exec);
}

GradCheckReport finite_diff_check(const LossFn& loss, const Vec& params,
                                  const Vec& analytic_grad,
                                  std::vector<GradCheckBlock> blocks,
                                  double tolerance, std::span<const double> steps,
                                  Exec exec) {
  if (params.size() != analytic_grad.size()) {
    throw ShapeError("finite_diff_check: params/gradient size mismatch");
  }
  if (steps.empty()) throw DegenerateInputError("finite_diff_check: no step sizes");
  for (double step : steps) {
    if (!(step > 0.0)) throw DegenerateInputError("finite_diff_check: step must be positive");
  }
  if (blocks.empty()) blocks.push_back({"all", 0, params.size()});
  for (const auto& b : blocks) {
    if (b.offset + b.size > params.size()) {
      throw ShapeError("finite_diff_check: block '" + b.name + "' out of range");
    }
  }

  // per coordinate, keep the numeric derivative closest to the analytic one
  Vec numeric(params.size(), 0.0);
  parallel_for(params.size(), exec, [&](std::size_t i) {
    double best = 0.0;
    bool first = true;
    for (double step : steps) {
      Vec p = params;
      p[i] = params[i] + step;
      const double fp = loss(p);
      p[i] = params[i] - step;
      const double fm = loss(p);
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw NumericError("finite_diff_check: non-finite loss at perturbed parameter " +
                           std::to_string(i));
      }
      const double n = (fp - fm) / (2.0 * step);
      if (first || std::fabs(n - analytic_grad[i]) < std::fabs(best - analytic_grad[i])) {
        best = n;
        first = false;
      }
    }
    numeric[i] = best;
  });

  GradCheckReport report;
  report.tolerance = tolerance;
  for (const auto& b : blocks) {
    GradCheckBlockResult r;
    r.name = b.name;
    for (std::size_t i = b.offset; i < b.offset + b.size; ++i) {
      const double a = analytic_grad[i];
      const double n = numeric[i];
      const double denom = std::max({std::fabs(a), std::fabs(n), 1e-8});
      const double err = std::fabs(a - n) / denom;
      if (err >= r.max_rel_err) {
        r.max_rel_err = err;
        r.worst_index = i;
        r.analytic = a;
        r.numeric = n;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, r.max_rel_err);
    report.blocks.push_back(std::move(r));
  }
  return report;
}

}  // namespace mne
