#ifndef MNE_NUMERIC_HPP
#define MNE_NUMERIC_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mne/errors.hpp"

namespace mne {

// All internal arithmetic is double precision; file formats narrow to float.
using Vec = std::vector<double>;

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static Matrix identity(std::size_t n);
};

// weight rows must equal bias length
struct AffineMap {
  Matrix weight;
  Vec bias;

  AffineMap() = default;
  AffineMap(Matrix w, Vec b);

  std::size_t in_dim() const { return weight.cols; }
  std::size_t out_dim() const { return weight.rows; }
};

double dot(const Vec& a, const Vec& b);
double norm(const Vec& x);
void axpy(double a, const Vec& x, Vec& y);  // y += a * x

Vec matvec(const Matrix& m, const Vec& x);
Vec matvec_transposed(const Matrix& m, const Vec& x);  // m^T * x
void add_outer(Matrix& m, const Vec& u, const Vec& v);  // m += u * v^T

// weight * x + bias
Vec affine_apply(const AffineMap& map, const Vec& x);

// Throws DegenerateInputError on the zero vector.
Vec l2_normalize(const Vec& x);

struct AdamState {
  Vec m;  // first moment
  Vec v;  // second moment
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Standard Adam update with bias correction; increments state.step by one.
// Rejects non-finite gradients before touching any state.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr);

// Same update with a per-parameter learning rate (used for the encoder /
// model split during training). Still a single step.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, std::span<const double> lr);

}  // namespace mne

#endif  // MNE_NUMERIC_HPP
