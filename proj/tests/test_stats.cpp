#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "traitsim/stats.hpp"

using namespace traitsim;
using namespace traitsim::stats;

namespace {

// 12 rows, intercept plus two predictors.
const std::vector<double> kX1 = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
const std::vector<double> kX2 = {3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8};
const std::vector<double> kY = {2.5, 3.1, 6.0, 5.2, 8.9, 12.4, 9.1, 14.0, 14.2, 13.5, 16.8, 20.3};

Matrix design(const std::vector<std::vector<double>>& cols) {
  Matrix m(cols[0].size(), cols.size() + 1);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    m(r, 0) = 1.0;
    for (std::size_t c = 0; c < cols.size(); ++c) m(r, c + 1) = cols[c][r];
  }
  return m;
}

// Cramer's rule on the 3x3 normal equations, in long double.
std::array<double, 3> cramer_oracle() {
  std::array<std::array<long double, 3>, 3> a{};
  std::array<long double, 3> b{};
  for (std::size_t r = 0; r < kY.size(); ++r) {
    long double row[3] = {1.0L, kX1[r], kX2[r]};
    for (int i = 0; i < 3; ++i) {
      b[i] += row[i] * kY[r];
      for (int j = 0; j < 3; ++j) a[i][j] += row[i] * row[j];
    }
  }
  auto det = [](const std::array<std::array<long double, 3>, 3>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  long double d = det(a);
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    auto m = a;
    for (int r = 0; r < 3; ++r) m[r][c] = b[r];
    out[c] = static_cast<double>(det(m) / d);
  }
  return out;
}

// Two-sided tail by composite Simpson integration of the t density on
// [0, |t|]: p = 1 - 2 * integral.
double simpson_t_p(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  auto f = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const int n = 20000;
  const double h = std::abs(t) / n;
  double s = f(0) + f(std::abs(t));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(i * h);
  return 1.0 - 2.0 * s * h / 3.0;
}

struct RandomProblem {
  Matrix x;
  std::vector<double> y;
};

RandomProblem random_problem(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> rows(12, 60);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t n = static_cast<std::size_t>(rows(gen)), k = 6;
  RandomProblem p{Matrix(n, k), std::vector<double>(n)};
  std::vector<double> beta(k);
  for (auto& b : beta) b = noise(gen) * 3;
  for (std::size_t r = 0; r < n; ++r) {
    p.x(r, 0) = 1.0;
    double yhat = beta[0];
    for (std::size_t c = 1; c < k; ++c) {
      p.x(r, c) = noise(gen);
      yhat += beta[c] * p.x(r, c);
    }
    p.y[r] = yhat + noise(gen);
  }
  return p;
}

}  // namespace

TEST(ZScore, Examples) {
  auto z = zscore(std::vector<double>{1, 2, 3});
  EXPECT_FALSE(z.degenerate);
  EXPECT_DOUBLE_EQ(z.values[0], -1.0);
  EXPECT_DOUBLE_EQ(z.values[1], 0.0);
  EXPECT_DOUBLE_EQ(z.values[2], 1.0);
  auto c = zscore(std::vector<double>{5, 5, 5});
  EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(c.values, (std::vector<double>{0, 0, 0}));
  EXPECT_THROW(zscore(std::vector<double>{1}), LengthError);
}

TEST(ZScore, MeanZero) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(20);
    for (auto& x : v) x = u(gen);
    auto z = zscore(v);
    EXPECT_NEAR(mean(z.values), 0.0, 1e-12);
    EXPECT_NEAR(sample_sd(z.values), 1.0, 1e-12);
  }
}

TEST(Ols, TwelveRowOracle) {
  auto fit = ols_fit(design({kX1, kX2}), kY);
  auto oracle = cramer_oracle();
  // Exact rational solution, frozen.
  const double frozen[3] = {-0.5996844319775596, 1.268039971949509, 0.6594056802244039};
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(fit.beta[c], oracle[c], 1e-9);
    EXPECT_NEAR(fit.beta[c], frozen[c], 1e-9);
  }
  EXPECT_EQ(fit.df, 9u);
  EXPECT_NEAR(fit.std_error[0], 0.28771040948372306, 1e-9);
  EXPECT_NEAR(fit.std_error[1], 0.040951955074255524, 1e-9);
  EXPECT_NEAR(fit.std_error[2], 0.058255288280041985, 1e-9);
  EXPECT_NEAR(fit.t[1], 30.96408876328991, 1e-6);
  EXPECT_NEAR(fit.p[0], 0.066794291634404, 1e-9);
  EXPECT_NEAR(fit.p[2], 1.2642880598073093e-06, 1e-12);
  EXPECT_NEAR(fit.r_squared, 0.9953038184835624, 1e-12);
}

TEST(Ols, ExactFit) {
  std::vector<double> x = {-1.5, -0.5, 0.5, 1.5};
  std::vector<double> y = {-3, -1, 1, 3};
  auto fit = ols_fit(design({x}), y);
  EXPECT_NEAR(fit.beta[0], 0.0, 1e-12);
  EXPECT_NEAR(fit.beta[1], 2.0, 1e-12);
  for (double r : fit.residuals) EXPECT_NEAR(r, 0.0, 1e-12);
}

TEST(Ols, ConstantResponse) {
  auto fit = ols_fit(design({kX1, kX2}), std::vector<double>(12, 4.25));
  EXPECT_NEAR(fit.beta[0], 4.25, 1e-12);
  EXPECT_NEAR(fit.beta[1], 0.0, 1e-12);
  EXPECT_NEAR(fit.beta[2], 0.0, 1e-12);
}

TEST(Ols, RankDeficientAndShort) {
  std::vector<double> twice(kX1.size());
  std::transform(kX1.begin(), kX1.end(), twice.begin(), [](double v) { return 2 * v; });
  EXPECT_THROW(ols_fit(design({kX1, twice}), kY), RankDeficient);
  EXPECT_THROW(ols_fit(design({{1, 2}, {3, 1}}), std::vector<double>{1, 2}), InsufficientData);
}

TEST(OlsProperties, ResidualOrthogonality) {
  std::mt19937_64 gen(101);
  for (int i = 0; i < 150; ++i) {
    auto p = random_problem(gen);
    auto fit = ols_fit(p.x, p.y);
    for (std::size_t c = 0; c < p.x.cols(); ++c) {
      double dot = 0;
      for (std::size_t r = 0; r < p.x.rows(); ++r) dot += p.x(r, c) * fit.residuals[r];
      EXPECT_LT(std::abs(dot), 1e-9);
    }
  }
}

TEST(OlsProperties, PermutationInvariance) {
  std::mt19937_64 gen(202);
  for (int i = 0; i < 150; ++i) {
    auto p = random_problem(gen);
    auto base = ols_fit(p.x, p.y);
    std::vector<std::size_t> order(p.y.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), gen);
    Matrix xs(p.x.rows(), p.x.cols());
    std::vector<double> ys(p.y.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      ys[r] = p.y[order[r]];
      for (std::size_t c = 0; c < p.x.cols(); ++c) xs(r, c) = p.x(order[r], c);
    }
    auto shuffled = ols_fit(xs, ys);
    for (std::size_t c = 0; c < base.beta.size(); ++c) EXPECT_NEAR(shuffled.beta[c], base.beta[c], 1e-12);
  }
}

TEST(OlsProperties, ShiftEquivariance) {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> shift(-100, 100);
  for (int i = 0; i < 150; ++i) {
    auto p = random_problem(gen);
    auto base = ols_fit(p.x, p.y);
    const double k = shift(gen);
    auto y2 = p.y;
    for (auto& v : y2) v += k;
    auto moved = ols_fit(p.x, y2);
    EXPECT_NEAR(moved.beta[0], base.beta[0] + k, 1e-9);
    for (std::size_t c = 1; c < base.beta.size(); ++c) EXPECT_NEAR(moved.beta[c], base.beta[c], 1e-9);
    for (std::size_t c = 0; c < base.std_error.size(); ++c) EXPECT_NEAR(moved.std_error[c], base.std_error[c], 1e-9);
  }
}

TEST(OlsProperties, ResponseScaling) {
  std::mt19937_64 gen(404);
  for (int i = 0; i < 100; ++i) {
    auto p = random_problem(gen);
    auto base = ols_fit(p.x, p.y);
    auto y2 = p.y;
    for (auto& v : y2) v *= -3.5;
    auto scaled = ols_fit(p.x, y2);
    for (std::size_t c = 0; c < base.beta.size(); ++c) {
      EXPECT_NEAR(scaled.beta[c], -3.5 * base.beta[c], 1e-9 * (1 + std::abs(base.beta[c])));
      EXPECT_NEAR(scaled.t[c], -base.t[c], 1e-7 * (1 + std::abs(base.t[c])));
    }
  }
}

TEST(StudentT, TableValue) {
  EXPECT_NEAR(student_t_p(2.228, 10), 0.050, 0.001);
  EXPECT_NEAR(student_t_p(2.228, 10), simpson_t_p(2.228, 10), 1e-9);
  EXPECT_NEAR(student_t_p(2.228, 10), 0.050011771817111327, 1e-12);
}

TEST(StudentT, KnownValues) {
  EXPECT_EQ(student_t_p(0.0, 1), 1.0);
  EXPECT_EQ(student_t_p(0.0, 237), 1.0);
  EXPECT_NEAR(student_t_p(1.0, 1), 0.5, 1e-12);  // Cauchy
  EXPECT_NEAR(student_t_p(3.5, 4), 0.02489616346022275, 1e-12);
  EXPECT_NEAR(student_t_p(2.0, 237), 0.04664156207061937, 1e-12);
  EXPECT_EQ(student_t_p(HUGE_VAL, 5), 0.0);
}

TEST(StudentT, AgreesWithIntegrationOracle) {
  std::mt19937_64 gen(55);
  std::uniform_real_distribution<double> tv(0.01, 6.0);
  std::uniform_int_distribution<int> dfv(1, 300);
  for (int i = 0; i < 200; ++i) {
    double t = tv(gen), df = dfv(gen);
    EXPECT_NEAR(student_t_p(t, df), simpson_t_p(t, df), 1e-7) << "t=" << t << " df=" << df;
  }
}

TEST(StudentT, SymmetryAndMonotonicity) {
  std::mt19937_64 gen(66);
  std::uniform_real_distribution<double> tv(0.0, 20.0);
  std::uniform_int_distribution<int> dfv(1, 500);
  for (int i = 0; i < 500; ++i) {
    double df = dfv(gen);
    double a = tv(gen), b = tv(gen);
    if (a > b) std::swap(a, b);
    EXPECT_EQ(student_t_p(a, df), student_t_p(-a, df));
    EXPECT_GE(student_t_p(a, df), student_t_p(b, df));
    double p = student_t_p(a, df);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(Pearson, PerfectCorrelation) {
  std::vector<std::array<double, kTraitCount>> scores;
  for (int i = 0; i < 10; ++i) {
    double v = i * 0.7 + (i % 3);
    scores.push_back({v, v, -v, static_cast<double>(i * i), std::sin(i)});
  }
  auto m = pearson_matrix(scores);
  EXPECT_NEAR(m[0][1], 1.0, 1e-12);
  EXPECT_NEAR(m[0][2], -1.0, 1e-12);
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    EXPECT_EQ(m[i][i], 1.0);
    for (std::size_t j = 0; j < kTraitCount; ++j) {
      EXPECT_EQ(m[i][j], m[j][i]);
      EXPECT_LE(std::abs(m[i][j]), 1.0);
    }
  }
}

TEST(Pearson, DegenerateColumn) {
  std::vector<std::array<double, kTraitCount>> scores = {{1, 2, 3, 4, 5}, {2, 2, 4, 5, 1}, {3, 2, 1, 1, 1}};
  EXPECT_THROW(pearson_matrix(scores), DegenerateColumn);
}

TEST(RegressBehavior, RecoversPlantedCoefficients) {
  auto grid = generate_grid();
  std::vector<std::optional<double>> y;
  for (const auto& p : grid) {
    y.push_back(2.0 + 1.0 * p.encoded(Trait::Openness) - 0.5 * p.encoded(Trait::Conscientiousness) +
                0.25 * p.encoded(Trait::Neuroticism));
  }
  auto r = regress_behavior("planted", grid, y);
  EXPECT_EQ(r.n_used, 243u);
  EXPECT_NEAR(r[Trait::Openness].beta_raw, 1.0, 1e-12);
  EXPECT_NEAR(r[Trait::Conscientiousness].beta_raw, -0.5, 1e-12);
  EXPECT_NEAR(r[Trait::Extraversion].beta_raw, 0.0, 1e-12);
  EXPECT_NEAR(r[Trait::Neuroticism].beta_raw, 0.25, 1e-12);
  EXPECT_NEAR(r.intercept_raw, 2.0, 1e-12);
  EXPECT_GT(r[Trait::Openness].beta, 0.0);
  EXPECT_LT(r[Trait::Conscientiousness].beta, 0.0);
  // Balanced grid: standardized beta = raw beta * sd(x) / sd(y).
  double sdx = std::sqrt(162.0 / 242.0);
  double sdy = std::sqrt((1.0 + 0.25 + 0.0625) * 162.0 / 242.0);
  EXPECT_NEAR(r[Trait::Openness].beta, sdx / sdy, 1e-12);
}

TEST(RegressBehavior, ConstantResponse) {
  auto grid = generate_grid();
  std::vector<std::optional<double>> y(grid.size(), 3.0);
  auto r = regress_behavior("flat", grid, y);
  EXPECT_TRUE(r.degenerate_response);
  for (Trait t : kAllTraits) {
    EXPECT_EQ(r[t].beta, 0.0);
    EXPECT_NEAR(r[t].beta_raw, 0.0, 1e-12);
  }
  EXPECT_NEAR(r.intercept_raw, 3.0, 1e-12);
}

TEST(RegressBehavior, MasksAbsentRows) {
  auto grid = generate_grid();
  std::vector<std::optional<double>> y;
  for (const auto& p : grid) {
    if (p.grid_index() % 4 == 0) {
      y.push_back(std::nullopt);
    } else {
      y.push_back(1.0 * p.encoded(Trait::Agreeableness) + 0.01 * (p.grid_index() % 7));
    }
  }
  auto r = regress_behavior("masked", grid, y);
  EXPECT_EQ(r.n_used, 243u - 61u);
  EXPECT_GT(r[Trait::Agreeableness].beta, 0.9);
}

TEST(RegressBehavior, InsufficientRows) {
  auto grid = generate_grid();
  std::vector<std::optional<double>> y(grid.size());
  for (std::size_t i = 0; i < 7; ++i) y[i * 35] = static_cast<double>(i);
  EXPECT_THROW(regress_behavior("sparse", grid, y), InsufficientData);
}
