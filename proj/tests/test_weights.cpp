#include <cmath>
#include <vector>

#include "agrg/weights.hpp"
#include "doctest.h"

using namespace agrg;

namespace {

// Direct w-space quadrature oracle for Pareto expectations, independent of
// the library's substitution path: composite Simpson on [w_min, cut] plus a
// pointwise tail bound check that the cutoff is negligible.
double pareto_expect_direct(double tau, double w_min, double cut,
                            double (*f)(double)) {
  const int n = 2'000'000;
  const double h = (cut - w_min) / n;
  auto dens = [&](double w) {
    return (tau - 1.0) * std::pow(w_min, tau - 1.0) * std::pow(w, -tau);
  };
  double s = f(w_min) * dens(w_min) + f(cut) * dens(cut);
  for (int i = 1; i < n; ++i)
    s += (i % 2 ? 4.0 : 2.0) * f(w_min + i * h) * dens(w_min + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("pareto moments: closed form and divergence") {
  WeightModel w = WeightModel::pareto(4.0, 1.0);
  CHECK(w.moment(1).value() == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(w.moment(2).value() == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_FALSE(w.moment(3).has_value());
  CHECK_FALSE(w.moment(4).has_value());
  CHECK(WeightModel::deterministic(2.0).moment(5).value() == 32.0);
}

TEST_CASE("pareto construction rejects tau <= 3") {
  CHECK_THROWS_AS(WeightModel::pareto(3.0, 1.0), config_error);
  CHECK_THROWS_AS(WeightModel::pareto(2.5, 1.0), config_error);
}

TEST_CASE("truncated moments: closed forms, monotonicity, convergence") {
  WeightModel w = WeightModel::pareto(4.0, 1.0);
  CHECK(w.truncated_moment(4, 10.0) == doctest::Approx(27.0).epsilon(1e-13));
  CHECK(w.truncated_moment(3, std::exp(1.0)) ==
        doctest::Approx(3.0).epsilon(1e-13));
  double prev = 0.0;
  for (double R : {1.5, 2.0, 5.0, 20.0, 1e3, 1e8}) {
    const double t = w.truncated_moment(2, R);
    CHECK(t >= prev);
    prev = t;
  }
  // Tail of E[W^2 1{W<=R}] decays like R^{-(tau-1-k)} = R^{-1}.
  CHECK(prev == doctest::Approx(w.moment(2).value()).epsilon(1e-7));
}

TEST_CASE("size-biased expectations") {
  WeightModel p = WeightModel::pareto(4.0, 1.0);
  CHECK(p.size_biased_expect([](double) { return 1.0; }) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.size_biased_expect([](double w) { return w; }) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p.size_biased_mean() == doctest::Approx(2.0).epsilon(1e-15));

  WeightModel d = WeightModel::deterministic(3.0);
  CHECK(d.size_biased_expect([](double w) { return std::sin(w); }) ==
        doctest::Approx(std::sin(3.0)));

  WeightModel disc =
      WeightModel::discrete({{1.0, 0.5}, {2.0, 0.25}, {4.0, 0.25}});
  // E[W f(W)] / E[W] by hand.
  const double ew = 0.5 + 0.5 + 1.0;
  const double ewf = 0.5 * 1.0 + 0.5 * 4.0 + 1.0 * 16.0;  // f = w^2
  CHECK(disc.size_biased_expect([](double w) { return w * w; }) ==
        doctest::Approx(ewf / ew).epsilon(1e-14));
}

TEST_CASE("size-biased identity against direct quadrature") {
  WeightModel p = WeightModel::pareto(4.0, 1.0);
  const double lhs =
      p.size_biased_expect([](double w) { return std::exp(-w); }) * p.mean();
  const double rhs = pareto_expect_direct(
      4.0, 1.0, 400.0, [](double w) { return w * std::exp(-w); });
  CHECK(std::fabs(lhs - rhs) / std::fabs(rhs) < 1e-10);
}

TEST_CASE("quantiles and weight sequences") {
  WeightModel p = WeightModel::pareto(4.0, 1.0);
  std::vector<double> two = p.weight_sequence(2, SequenceMode::Quantile);
  CHECK(two[0] == doctest::Approx(std::pow(0.75, -1.0 / 3.0)).epsilon(1e-15));
  CHECK(two[1] == doctest::Approx(std::pow(0.25, -1.0 / 3.0)).epsilon(1e-15));

  std::vector<double> det =
      WeightModel::deterministic(1.0).weight_sequence(3, SequenceMode::Quantile);
  CHECK(det == std::vector<double>{1.0, 1.0, 1.0});

  // Quantile grids satisfy the weight condition by construction.
  std::vector<double> big = p.weight_sequence(10000, SequenceMode::Quantile);
  double mean = 0.0;
  for (double w : big) mean += w;
  mean /= big.size();
  CHECK(std::fabs(mean - 1.5) < 0.05);

  std::vector<double> huge = p.weight_sequence(100000, SequenceMode::Quantile);
  double m2 = 0.0;
  for (double w : huge) m2 += w * w;
  m2 /= huge.size();
  CHECK(std::fabs(m2 - 3.0) < 0.1);
}

TEST_CASE("random sequences are seed-reproducible") {
  WeightModel p = WeightModel::pareto(4.0, 1.0);
  auto a = p.weight_sequence(50, SequenceMode::Random, 9);
  auto b = p.weight_sequence(50, SequenceMode::Random, 9);
  auto c = p.weight_sequence(50, SequenceMode::Random, 10);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("tail classification") {
  CHECK(WeightModel::deterministic(1.0).classify_tail(4).kind ==
        TailRegime::Kind::FiniteMoment);
  TailRegime pl = WeightModel::pareto(3.5, 1.0).classify_tail(4);
  CHECK(pl.kind == TailRegime::Kind::PowerLaw);
  CHECK(pl.tau == 3.5);
  CHECK(WeightModel::pareto(5.0, 1.0).classify_tail(4).kind ==
        TailRegime::Kind::Boundary);
  CHECK(WeightModel::pareto(5.0, 1.0).classify_tail(6).kind ==
        TailRegime::Kind::PowerLaw);
  CHECK(WeightModel::pareto(8.0, 1.0).classify_tail(4).kind ==
        TailRegime::Kind::FiniteMoment);
  // Consistency: a power-law tail means the ceil(tau-1) moment diverges.
  CHECK_FALSE(WeightModel::pareto(3.5, 1.0).moment(3).has_value());
}

TEST_CASE("discrete law validation") {
  CHECK_THROWS_AS(WeightModel::discrete({{1.0, 0.7}, {2.0, 0.7}}), config_error);
  CHECK_THROWS_AS(WeightModel::discrete({{-1.0, 0.5}, {2.0, 0.5}}),
                  config_error);
}

TEST_CASE("tabulated density: moments and sequences") {
  // Triangle density on [1, 3], peak at 2; exact mean 2.
  WeightModel t = WeightModel::tabulated({{1.0, 0.0}, {2.0, 1.0}, {3.0, 0.0}});
  CHECK(t.mean() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(t.moment(2).value() ==
        doctest::Approx(t.second_moment()).epsilon(1e-12));
  // Zero-density endpoints break CDF inversion for sequences.
  CHECK_THROWS_AS(t.weight_sequence(4, SequenceMode::Quantile), config_error);

  WeightModel u = WeightModel::tabulated({{1.0, 1.0}, {3.0, 1.0}});
  std::vector<double> q = u.weight_sequence(2, SequenceMode::Quantile);
  CHECK(q[0] == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(q[1] == doctest::Approx(2.5).epsilon(1e-9));
}
