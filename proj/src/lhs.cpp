#include "iwek/lhs.hpp"

#include <algorithm>
#include <cmath>

#include "iwek/error.hpp"

namespace iwek {

SampleDesign lhs_sample(std::size_t N, std::span<const KnobSpec> specs, std::uint64_t seed) {
  if (N < 4) throw DataError("lhs_sample: N must be at least 4");
  if (specs.empty()) throw DataError("lhs_sample: no knobs to sample");
  const KnobUniverse universe(std::vector<KnobSpec>(specs.begin(), specs.end()));

  Rng rng(derive_seed(seed, "lhs"));
  const auto n = static_cast<Eigen::Index>(N);
  const Eigen::MatrixXd U = lhs_unit(n, static_cast<Eigen::Index>(universe.size()), rng);

  SampleDesign design;
  design.knobs = universe.names();
  design.seed = seed;
  design.S.resize(N);
  for (std::size_t j = 0; j < universe.size(); ++j) {
    const auto& s = universe[j];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = U(i, static_cast<Eigen::Index>(j));
      double v = s.lo + u * s.width();
      if (s.kind != KnobKind::kContinuous) {
        const double stratum = std::floor(u * static_cast<double>(N));
        const double a = s.lo + s.width() * stratum / static_cast<double>(N);
        const double b = s.lo + s.width() * (stratum + 1.0) / static_cast<double>(N);
        const double first = std::ceil(a);
        // Last stratum is closed on the right.
        const double last = stratum + 1.0 >= static_cast<double>(N) ? std::floor(b) : std::ceil(b) - 1.0;
        if (first <= last) {
          const double frac = (u * static_cast<double>(N)) - stratum;
          v = std::min(last, first + std::floor(frac * (last - first + 1.0)));
        } else {
          v = std::round(0.5 * (a + b));
        }
        v = std::clamp(v, s.lo, s.hi);
      }
      design.S[static_cast<std::size_t>(i)].set(s.name, std::min(v, s.hi));
    }
  }
  return design;
}

}  // namespace iwek
