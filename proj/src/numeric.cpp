#include "mne/numeric.hpp"

#include <cmath>
#include <string>

namespace mne {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

AffineMap::AffineMap(Matrix w, Vec b) : weight(std::move(w)), bias(std::move(b)) {
  if (weight.rows != bias.size()) {
    throw ShapeError("AffineMap: weight has " + std::to_string(weight.rows) +
                     " rows but bias has " + std::to_string(bias.size()) + " entries");
  }
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& x) { return std::sqrt(dot(x, x)); }

void axpy(double a, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec matvec(const Matrix& m, const Vec& x) {
  if (m.cols != x.size()) {
    throw ShapeError("matvec: matrix has " + std::to_string(m.cols) +
                     " cols, vector has " + std::to_string(x.size()));
  }
  Vec y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    const double* row = m.data.data() + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vec matvec_transposed(const Matrix& m, const Vec& x) {
  if (m.rows != x.size()) {
    throw ShapeError("matvec_transposed: matrix has " + std::to_string(m.rows) +
                     " rows, vector has " + std::to_string(x.size()));
  }
  Vec y(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.data.data() + i * m.cols;
    const double xi = x[i];
    for (std::size_t j = 0; j < m.cols; ++j) y[j] += row[j] * xi;
  }
  return y;
}

void add_outer(Matrix& m, const Vec& u, const Vec& v) {
  if (m.rows != u.size() || m.cols != v.size()) throw ShapeError("add_outer: shape mismatch");
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* row = m.data.data() + i * m.cols;
    const double ui = u[i];
    for (std::size_t j = 0; j < m.cols; ++j) row[j] += ui * v[j];
  }
}

Vec affine_apply(const AffineMap& map, const Vec& x) {
  if (map.weight.rows != map.bias.size()) throw ShapeError("affine_apply: weight rows != bias length");
  Vec y = matvec(map.weight, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += map.bias[i];
  return y;
}

Vec l2_normalize(const Vec& x) {
  const double n = norm(x);
  if (n == 0.0) throw DegenerateInputError("l2_normalize: zero vector");
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / n;
  return y;
}

namespace {

void check_adam_shapes(std::span<double> params, std::span<const double> grads,
                       const AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw ShapeError("adam_step: params/grads/state size mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("adam_step: non-finite gradient at index " + std::to_string(i));
    }
  }
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr) {
  check_adam_shapes(params, grads, state);
  if (!(lr > 0.0)) throw DegenerateInputError("adam_step: lr must be positive");
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    params[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + state.eps);
  }
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, std::span<const double> lr) {
  check_adam_shapes(params, grads, state);
  if (lr.size() != params.size()) throw ShapeError("adam_step: lr vector size mismatch");
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    params[i] -= lr[i] * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + state.eps);
  }
}

}  // namespace mne
