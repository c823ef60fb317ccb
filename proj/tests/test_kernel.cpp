#include <cmath>
#include <vector>

#include "agrg/kernel.hpp"
#include "agrg/rng.hpp"
#include "doctest.h"

using namespace agrg;

namespace {

std::vector<double> uniform_grid(int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = -1.0 + 2.0 * i / (n - 1);
  return x;
}

// Brute-force second-order variation over all sign quadruples of the Ising
// kernel e^{beta s s'}.
double ising_d2_enumerated(double beta) {
  const double s[2] = {-1.0, 1.0};
  double best = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
          auto f = [&](double u, double v) { return std::exp(beta * u * v); };
          best = std::max(best, f(s[a], s[c]) - f(s[b], s[c]) -
                                    f(s[a], s[d]) + f(s[b], s[d]));
        }
  return best;
}

}  // namespace

TEST_CASE("rank2 <-> ising conversions") {
  IsingForm f = rank2_to_ising(5.0, 3.0);
  CHECK(f.c_tilde == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(f.beta == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  Rank2Kernel k0 = ising_to_rank2(0.0);
  CHECK(k0.c() == 1.0);
  CHECK(k0.theta() == 0.0);

  Rank2Kernel k = ising_to_rank2(0.7);
  IsingForm back = rank2_to_ising(k.c(), k.theta());
  CHECK(std::fabs(back.beta - 0.7) < 1e-14);
  CHECK(back.c_tilde == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(rank2_to_ising(1.0, 1.5), config_error);
}

TEST_CASE("ising check: kernel matches e^{beta s s'} on the atoms") {
  Rank2Kernel k = ising_to_rank2(std::log(2.0));
  CHECK(k(1.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(k(1.0, -1.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("second-order variation: closed forms and grids") {
  const double beta = std::log(2.0);
  // 4 sinh(log 2) = 3 by the quadruple enumeration.
  CHECK(ising_d2_enumerated(beta) == doctest::Approx(3.0).epsilon(1e-14));
  GridKernel gi = GridKernel::from_function(
      {-1.0, 1.0}, [&](double a, double b) { return std::exp(beta * a * b); });
  CHECK(second_order_variation(gi) == doctest::Approx(3.0).epsilon(1e-14));

  Rank2Kernel flat(2.0, 0.0, Observable::identity());
  CHECK(second_order_variation(flat) == 0.0);

  Rank2Kernel r(2.0, 0.5, Observable::identity());
  CHECK(second_order_variation(r) == doctest::Approx(2.0).epsilon(1e-12));
  GridKernel rg = GridKernel::from_rank2(r, uniform_grid(801));
  CHECK(std::fabs(second_order_variation(rg) - 2.0) < 1e-6);
}

TEST_CASE("closed-form d2 matches grid sup for random rank-2 kernels") {
  RngStream rng(123, 0);
  const Observable gs[3] = {Observable::identity(), Observable::cube(),
                            Observable::half_sine()};
  for (int trial = 0; trial < 10; ++trial) {
    const Observable& g = gs[trial % 3];
    const double theta = rng.uniform(-0.8, 0.8);
    const double c = std::fabs(theta) + rng.uniform(0.5, 2.0);
    Rank2Kernel k(c, theta, g);
    GridKernel kg = GridKernel::from_rank2(k, uniform_grid(801));
    CHECK(std::fabs(second_order_variation(k) - second_order_variation(kg)) <
          1e-6);
  }
}

TEST_CASE("uniqueness bound (contraction criterion)") {
  WeightModel w1 = WeightModel::deterministic(1.0);
  UniquenessReport a = uniqueness_bound(ising_to_rank2(0.4), w1);
  CHECK(a.lhs == doctest::Approx(2.0 * std::sinh(0.4)).epsilon(1e-12));
  CHECK(a.holds);
  UniquenessReport b = uniqueness_bound(ising_to_rank2(0.6), w1);
  CHECK(b.lhs == doctest::Approx(2.0 * std::sinh(0.6)).epsilon(1e-12));
  CHECK_FALSE(b.holds);
  UniquenessReport c =
      uniqueness_bound(Rank2Kernel(1.0, 0.0, Observable::identity()), w1);
  CHECK(c.lhs == 0.0);
  CHECK(c.holds);
}

TEST_CASE("positivity validation") {
  CHECK(validate_positive(Rank2Kernel(1.0, 0.5, Observable::identity())));
  CHECK_FALSE(validate_positive(Rank2Kernel(1.0, 1.5, Observable::identity())));
  GridKernel g = GridKernel::from_function(
      uniform_grid(11), [](double a, double b) { return std::exp(a * b); });
  CHECK(validate_positive(g));
}
