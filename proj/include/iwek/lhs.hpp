#ifndef IWEK_LHS_HPP
#define IWEK_LHS_HPP

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iwek/core.hpp"
#include "iwek/random.hpp"

namespace iwek {

// Latin hypercube on [0,1]^d: column j holds one point in each stratum
// [k/n, (k+1)/n), paired across columns by independent permutations.
inline Eigen::MatrixXd lhs_unit(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Eigen::MatrixXd U(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto perm = random_permutation(static_cast<std::size_t>(n), rng);
    for (Eigen::Index i = 0; i < n; ++i)
      U(i, j) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + uniform01(rng)) / static_cast<double>(n);
  }
  return U;
}

struct SampleDesign {
  std::vector<std::string> knobs;
  std::vector<KnobConfig> S;
  std::uint64_t seed = 0;
  bool operator==(const SampleDesign&) const = default;
};

// N configurations over `specs` with exactly one sample per 1/N stratum of
// every knob's range. Integer and ordinal knobs draw an integer inside the
// stratum when one exists. Requires N >= 4.
SampleDesign lhs_sample(std::size_t N, std::span<const KnobSpec> specs, std::uint64_t seed);

}  // namespace iwek

#endif  // IWEK_LHS_HPP
