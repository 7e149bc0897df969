#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "traitsim/error.hpp"
#include "traitsim/persona.hpp"

namespace traitsim::stats {

// Dense row-major matrix, sized for design matrices of a few hundred rows.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

inline double mean(std::span<const double> v) {
  if (v.empty()) throw LengthError("mean of empty vector");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1 denominator).
inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) throw LengthError("standard deviation needs at least 2 values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct ZScores {
  std::vector<double> values;
  bool degenerate = false;  // input was constant; values are all zero
  double mean = 0.0;
  double sd = 0.0;
};

inline ZScores zscore(std::span<const double> v) {
  if (v.size() < 2) throw LengthError("zscore needs at least 2 values");
  ZScores z;
  z.mean = mean(v);
  z.sd = sample_sd(v);
  z.values.resize(v.size(), 0.0);
  const double scale = std::max(std::abs(z.mean), 1.0);
  if (!(z.sd > 1e-14 * scale)) {
    z.degenerate = true;
    return z;
  }
  for (std::size_t i = 0; i < v.size(); ++i) z.values[i] = (v[i] - z.mean) / z.sd;
  return z;
}

// ---------------------------------------------------------------------------
// Student t distribution

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("incomplete_beta requires a, b > 0");
  if (std::isnan(x)) return x;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// Two-sided tail probability P(|T| >= |t|) for T ~ t(df).
inline double student_t_p(double t, double df) {
  if (!(df > 0.0)) throw Error("student_t_p requires df > 0");
  if (std::isnan(t)) return t;
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Least squares

namespace detail {

// In-place lower Cholesky factor of a symmetric positive definite matrix.
inline void cholesky(Matrix& a) {
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double tol = 1e-10 * std::max(max_diag, std::numeric_limits<double>::min());
  for (std::size_t j = 0; j < n; ++j) {
    double s = a(j, j);
    for (std::size_t k = 0; k < j; ++k) s -= a(j, k) * a(j, k);
    if (!(s > tol)) throw RankDeficient("design matrix is rank deficient (column " + std::to_string(j) + ")");
    const double l = std::sqrt(s);
    a(j, j) = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= a(i, k) * a(j, k);
      a(i, j) = v / l;
    }
    for (std::size_t i = 0; i < j; ++i) a(i, j) = 0.0;
  }
}

inline std::vector<double> cholesky_solve(const Matrix& l, std::vector<double> b) {
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l(i, k) * b[k];
    b[i] /= l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= l(k, i) * b[k];
    b[i] /= l(i, i);
  }
  return b;
}

inline std::vector<double> xt_times(const Matrix& x, std::span<const double> v) {
  std::vector<double> out(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] += x(r, c) * v[r];
  }
  return out;
}

}  // namespace detail

struct OlsFit {
  std::vector<double> beta;
  std::vector<double> std_error;
  std::vector<double> t;
  std::vector<double> p;
  std::vector<double> residuals;
  double residual_variance = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
  std::size_t df = 0;
};

// Least squares via the normal equations (Cholesky of X'X) with one step of
// iterative refinement. Standard errors use s^2 (X'X)^-1 with s^2 = RSS/(n-k);
// p-values are two-sided Student t with n - k degrees of freedom. A zero
// standard error yields t = 0 for a zero coefficient and +/-inf otherwise.
inline OlsFit ols_fit(const Matrix& x, std::span<const double> y) {
  const std::size_t n = x.rows(), k = x.cols();
  if (y.size() != n) throw LengthError("response length does not match design rows");
  if (n <= k) {
    throw InsufficientData("need more rows (" + std::to_string(n) + ") than columns (" +
                           std::to_string(k) + ")");
  }
  Matrix xtx(k, k);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = x.row(r);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j <= i; ++j) xtx(i, j) += row[i] * row[j];
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) xtx(i, j) = xtx(j, i);
  }
  Matrix l = xtx;
  detail::cholesky(l);

  OlsFit fit;
  fit.n = n;
  fit.df = n - k;
  fit.beta = detail::cholesky_solve(l, detail::xt_times(x, y));

  auto compute_residuals = [&] {
    fit.residuals.assign(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      double yhat = 0.0;
      auto row = x.row(r);
      for (std::size_t c = 0; c < k; ++c) yhat += row[c] * fit.beta[c];
      fit.residuals[r] = y[r] - yhat;
    }
  };
  compute_residuals();
  auto correction = detail::cholesky_solve(l, detail::xt_times(x, fit.residuals));
  for (std::size_t c = 0; c < k; ++c) fit.beta[c] += correction[c];
  compute_residuals();

  double rss = 0.0;
  for (double r : fit.residuals) rss += r * r;
  fit.residual_variance = rss / static_cast<double>(fit.df);

  const double ybar = mean(y);
  double tss = 0.0;
  for (double v : y) tss += (v - ybar) * (v - ybar);
  fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;

  fit.std_error.resize(k);
  fit.t.resize(k);
  fit.p.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> e(k, 0.0);
    e[c] = 1.0;
    const double inv_cc = detail::cholesky_solve(l, e)[c];
    fit.std_error[c] = std::sqrt(std::max(0.0, fit.residual_variance * inv_cc));
    if (fit.std_error[c] > 0.0) {
      fit.t[c] = fit.beta[c] / fit.std_error[c];
    } else {
      fit.t[c] = fit.beta[c] == 0.0 ? 0.0 : std::copysign(HUGE_VAL, fit.beta[c]);
    }
    fit.p[c] = student_t_p(fit.t[c], static_cast<double>(fit.df));
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Trait regressions

struct TraitCoefficient {
  double beta = 0.0;      // standardized predictors and response
  double beta_raw = 0.0;  // encoded traits, raw response scale
  double std_error = 0.0; // of the standardized coefficient
  double t = 0.0;
  double p = 1.0;
};

struct RegressionResult {
  std::string behavior;
  std::array<TraitCoefficient, kTraitCount> coefficients{};
  double intercept_raw = 0.0;
  std::size_t n_used = 0;
  double r_squared = 0.0;
  bool degenerate_response = false;

  const TraitCoefficient& operator[](Trait t) const noexcept { return coefficients[index_of(t)]; }
};

// Smallest usable sample for a trait regression: intercept + 5 traits and
// at least two residual degrees of freedom.
inline constexpr std::size_t kMinRegressionRows = kTraitCount + 3;

// Regresses one behavior on the five encoded traits. Rows whose response is
// absent are masked out. Coefficients are reported on both the standardized
// scale (z-scored traits and response) and the raw scale; t and p come from
// the standardized fit, where they coincide with the raw fit's.
inline RegressionResult regress_behavior(std::string behavior,
                                         std::span<const PersonaProfile> personas,
                                         std::span<const std::optional<double>> response) {
  if (personas.size() != response.size()) throw LengthError("persona/response length mismatch");
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < response.size(); ++i) {
    if (response[i] && std::isfinite(*response[i])) used.push_back(i);
  }
  if (used.size() < kMinRegressionRows) {
    throw InsufficientData(behavior + ": " + std::to_string(used.size()) +
                           " usable rows, need " + std::to_string(kMinRegressionRows));
  }
  const std::size_t n = used.size(), k = kTraitCount + 1;
  RegressionResult out;
  out.behavior = std::move(behavior);
  out.n_used = n;

  Matrix raw(n, k);
  std::vector<double> y(n);
  std::array<std::vector<double>, kTraitCount> cols;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& p = personas[used[r]];
    raw(r, 0) = 1.0;
    for (Trait t : kAllTraits) {
      raw(r, index_of(t) + 1) = p.encoded(t);
      cols[index_of(t)].push_back(p.encoded(t));
    }
    y[r] = *response[used[r]];
  }
  OlsFit raw_fit = ols_fit(raw, y);
  out.intercept_raw = raw_fit.beta[0];

  Matrix std_x(n, k);
  for (Trait t : kAllTraits) {
    auto z = zscore(cols[index_of(t)]);
    if (z.degenerate) {
      throw RankDeficient(out.behavior + ": trait " + std::string(trait_symbol(t)) +
                          " is constant over the usable rows");
    }
    for (std::size_t r = 0; r < n; ++r) std_x(r, index_of(t) + 1) = z.values[r];
  }
  for (std::size_t r = 0; r < n; ++r) std_x(r, 0) = 1.0;
  auto zy = zscore(y);
  out.degenerate_response = zy.degenerate;
  OlsFit std_fit = ols_fit(std_x, zy.values);
  out.r_squared = raw_fit.r_squared;

  for (Trait t : kAllTraits) {
    const std::size_t c = index_of(t) + 1;
    auto& coef = out.coefficients[index_of(t)];
    coef.beta = std_fit.beta[c];
    coef.beta_raw = raw_fit.beta[c];
    coef.std_error = std_fit.std_error[c];
    coef.t = std_fit.t[c];
    coef.p = std_fit.p[c];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlation

using TraitMatrix = std::array<std::array<double, kTraitCount>, kTraitCount>;

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw LengthError("pearson: length mismatch");
  if (a.size() < 2) throw LengthError("pearson needs at least 2 observations");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DegenerateColumn("pearson: constant column");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// Inter-trait correlation matrix of per-persona trait scores.
inline TraitMatrix pearson_matrix(std::span<const std::array<double, kTraitCount>> scores) {
  if (scores.size() < 2) throw LengthError("pearson_matrix needs at least 2 personas");
  std::array<std::vector<double>, kTraitCount> cols;
  for (const auto& s : scores) {
    for (std::size_t t = 0; t < kTraitCount; ++t) cols[t].push_back(s[t]);
  }
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    if (sample_sd(cols[t]) == 0.0) {
      throw DegenerateColumn("trait " + std::string(trait_symbol(kAllTraits[t])) + " is constant");
    }
  }
  TraitMatrix m{};
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    m[i][i] = 1.0;
    for (std::size_t j = i + 1; j < kTraitCount; ++j) {
      m[i][j] = m[j][i] = pearson(cols[i], cols[j]);
    }
  }
  return m;
}

}  // namespace traitsim::stats
