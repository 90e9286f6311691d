#ifndef GNMPPI_SAMPLING_HPP
#define GNMPPI_SAMPLING_HPP

#include "gnmppi/core.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>

namespace gnmppi {

/// Diagonal covariance Sigma = diag(variances), all entries strictly positive.
class DiagonalCovariance {
 public:
  explicit DiagonalCovariance(Vector variances) : diag_(std::move(variances)) {
    if (diag_.size() < 1) throw InvalidArgument("covariance must have positive dimension");
    if (!diag_.allFinite() || (diag_.array() <= 0.0).any()) {
      throw InvalidArgument("covariance diagonal must be finite and strictly positive");
    }
  }

  static DiagonalCovariance isotropic(Index dim, double variance) {
    return DiagonalCovariance(Vector::Constant(dim, variance));
  }

  const Vector& diag() const { return diag_; }
  Index dim() const { return diag_.size(); }
  double trace() const { return diag_.sum(); }
  Vector std_dev() const { return diag_.cwiseSqrt(); }
  Vector inverse_diag() const { return diag_.cwiseInverse(); }

  DiagonalCovariance scaled(double factor) const { return DiagonalCovariance(factor * diag_); }

 private:
  Vector diag_;
};

/// SplitMix64: a tiny counter-style generator whose streams can be derived
/// from (seed, index) pairs, so batches do not depend on evaluation order.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Independent stream seed for the `stream`-th consumer of `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 mix(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
  mix();
  return mix();
}

/// Perturbations stored column-wise: column m is W_m.
struct SampleBatch {
  Matrix perturbations;
  std::uint64_t seed = 0;
  bool antithetic = false;

  Index count() const { return perturbations.cols(); }
  Index dim() const { return perturbations.rows(); }
};

/// M samples W_m ~ N(0, Sigma). With `antithetic`, the second half mirrors
/// the first: W_{m + M/2} = -W_m.
inline SampleBatch draw(const DiagonalCovariance& cov, Index count, std::uint64_t seed,
                        bool antithetic) {
  if (count < 1) throw InvalidArgument("sample count must be at least 1");
  if (antithetic && count % 2 != 0) throw OddBatchWithAntithetic();

  const Vector sd = cov.std_dev();
  SampleBatch batch{Matrix(cov.dim(), count), seed, antithetic};
  const Index independent = antithetic ? count / 2 : count;
  for (Index m = 0; m < independent; ++m) {
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
    std::normal_distribution<double> normal;
    for (Index i = 0; i < cov.dim(); ++i) batch.perturbations(i, m) = sd[i] * normal(rng);
  }
  if (antithetic) {
    batch.perturbations.rightCols(independent) = -batch.perturbations.leftCols(independent);
  }
  return batch;
}

/// Expected-error bound for an n-sample empirical mean: sqrt(tr(Sigma) / n).
inline double mc_error_bound(const DiagonalCovariance& cov, Index n) {
  if (n < 1) throw InvalidArgument("sample count must be at least 1");
  return std::sqrt(cov.trace() / static_cast<double>(n));
}

struct McBoundCheck {
  double empirical_mean_error = 0.0;
  double bound = 0.0;
};

/// Mean over `trials` repetitions of |mean of n draws from N(0, Sigma)|_2,
/// next to the analytic bound.
inline McBoundCheck verify_mc_bound(const DiagonalCovariance& cov, Index n, Index trials,
                                    std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("trial count must be at least 1");
  double total = 0.0;
  for (Index t = 0; t < trials; ++t) {
    SampleBatch b = draw(cov, n, derive_seed(seed, static_cast<std::uint64_t>(t)), false);
    total += b.perturbations.rowwise().mean().norm();
  }
  return {total / static_cast<double>(trials), mc_error_bound(cov, n)};
}

}  // namespace gnmppi

#endif  // GNMPPI_SAMPLING_HPP
