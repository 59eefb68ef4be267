// Copyright 2026 The ebstop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ebs {

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

// Thrown when a numerical oracle (e.g. finite differences) meets a non-finite
// loss value and cannot produce a trustworthy result.
class OracleFailure : public std::runtime_error {
 public:
  explicit OracleFailure(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic, explicitly seeded random stream.
//
// Algorithm: xoshiro256++ (Blackman & Vigna). The 256-bit state is expanded
// from (seed, stream) with the splitmix64 generator; the stream id is folded
// into the seed with a golden-ratio multiple so distinct ids give decorrelated
// streams for the same seed. Gaussian variates use the Marsaglia polar method
// (rejection on the unit disc), which needs only sqrt/log and therefore
// reproduces bit-identically across standard-library implementations.
//
// All member functions are pure state transitions: two streams constructed
// with the same (seed, stream) produce identical outputs on every platform.
// Instances are cheap to copy; copies advance independently.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t x = seed ^ (stream * 0x9E3779B97F4A7C15ULL);
    for (auto& s : state_) s = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound), unbiased via rejection sampling.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0)
      throw std::invalid_argument("RngStream::next_below: bound must be > 0");
    const std::uint64_t threshold = (0 - bound) % bound;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r < threshold);
    return r % bound;
  }

  // Standard normal variate. Pairs are generated by the polar method and the
  // spare is cached, so draws come in a fixed, reproducible order.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Vector of independent N(mean, stddev^2) draws. stddev = 0 returns the
// constant mean vector exactly.
inline DenseVector gaussian_vector(int dim, double mean, double stddev,
                                   RngStream& rng) {
  if (dim < 0) throw std::invalid_argument("gaussian_vector: negative dim");
  if (stddev < 0.0)
    throw std::invalid_argument("gaussian_vector: negative stddev");
  DenseVector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = mean + stddev * rng.next_gaussian();
  return v;
}

// Orthogonal matrix drawn from the Haar (rotation-invariant) distribution.
//
// Construction: fill a dim x dim matrix with iid standard normals, take its
// Householder QR factorization, and flip the sign of each Q column whose
// corresponding R diagonal entry is negative. Normalizing R to a positive
// diagonal makes the factorization unique, which both fixes the distribution
// to exactly Haar and makes the output a deterministic function of the stream.
inline DenseMatrix haar_orthogonal(int dim, RngStream& rng) {
  if (dim < 1) throw std::invalid_argument("haar_orthogonal: dim must be >= 1");
  DenseMatrix g(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) g(i, j) = rng.next_gaussian();
  Eigen::HouseholderQR<DenseMatrix> qr(g);
  DenseMatrix q = qr.householderQ();
  const DenseMatrix& packed = qr.matrixQR();
  for (int j = 0; j < dim; ++j) {
    if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

// Central-difference gradient estimate, used as the oracle that analytic
// gradients are tested against. Throws OracleFailure if the loss comes back
// non-finite at any probe point.
inline DenseVector finite_diff_gradient(
    const std::function<double(const DenseVector&)>& loss, const DenseVector& w,
    double eps = 1e-6) {
  if (eps <= 0.0) throw std::invalid_argument("finite_diff_gradient: eps <= 0");
  DenseVector grad(w.size());
  DenseVector probe = w;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    probe[k] = w[k] + eps;
    const double up = loss(probe);
    probe[k] = w[k] - eps;
    const double down = loss(probe);
    probe[k] = w[k];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw OracleFailure("finite_diff_gradient: non-finite loss at coordinate " +
                          std::to_string(k));
    }
    grad[k] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace ebs
