// Copyright 2026 The vqesa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vqesa/rng.hpp"

namespace vqesa {

using Objective = std::function<double(const std::vector<double>&)>;

struct Bound {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct OptimizerBudget {
  std::size_t max_evals = 1000;
  double tol = 1e-5;
  std::vector<Bound> bounds;  // empty = unbounded
  double rho_begin = 0.5;     // initial trust radius (linear-model method)

  void validate() const {
    if (max_evals < 1) throw std::invalid_argument("OptimizerBudget: max_evals must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("OptimizerBudget: tol must be positive");
  }
};

struct TraceEntry {
  std::vector<double> params;
  double value = 0.0;
};

struct OptResult {
  std::vector<double> best_params;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<TraceEntry> trace;
  bool converged = false;
  std::string reason;
  /// Point the method would report for a noisy objective (GP posterior-mean
  /// minimizer for the Bayesian method, best_params otherwise).
  std::vector<double> recommended;
};

namespace detail {

/// Wraps an objective: records the trace, tracks the best point, rejects NaN/inf.
class Evaluator {
 public:
  Evaluator(const Objective& f, std::size_t max_evals, OptResult& out) : f_(f), max_(max_evals), out_(out) {}

  bool exhausted() const { return out_.trace.size() >= max_; }
  std::size_t count() const { return out_.trace.size(); }

  double operator()(const std::vector<double>& x) {
    const double v = f_(x);
    if (!std::isfinite(v)) throw std::domain_error("optimizer: objective returned a non-finite value");
    out_.trace.push_back({x, v});
    if (v < out_.best_value) {
      out_.best_value = v;
      out_.best_params = x;
    }
    return v;
  }

 private:
  const Objective& f_;
  std::size_t max_;
  OptResult& out_;
};

inline void clip(std::vector<double>& x, const std::vector<Bound>& b) {
  if (b.empty()) return;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], b[i].lo, b[i].hi);
}

}  // namespace detail

/**
 * Derivative-free trust-region descent on linear interpolation models.
 *
 * Keeps n+1 points, fits the affine model through them, steps a distance
 * rho against the model gradient from the best point and swaps the step
 * into the simplex. When a step fails, either a geometry step restores a
 * well-poised simplex or rho is halved. Stops when rho < rho_end, with
 * rho_end = sqrt(tol) (floored at 1e-8), or when the budget is spent.
 */
inline OptResult cobyla_minimize(const Objective& objective, std::vector<double> x0, const OptimizerBudget& budget) {
  budget.validate();
  if (!budget.bounds.empty() && budget.bounds.size() != x0.size()) throw std::invalid_argument("cobyla_minimize: bounds size mismatch");
  OptResult res;
  detail::Evaluator eval(objective, budget.max_evals, res);
  detail::clip(x0, budget.bounds);
  const std::size_t n = x0.size();
  const double f0 = eval(x0);
  if (n == 0) {
    res.converged = true;
    res.reason = "no parameters";
    res.recommended = res.best_params;
    return res;
  }
  const double rho_end = std::max(1e-8, std::sqrt(budget.tol));
  double rho = std::max(budget.rho_begin, rho_end);

  std::vector<std::vector<double>> pts{x0};
  std::vector<double> fv{f0};
  for (std::size_t i = 0; i < n && !eval.exhausted(); ++i) {
    auto x = x0;
    x[i] += rho;
    if (!budget.bounds.empty() && x[i] > budget.bounds[i].hi) x[i] = x0[i] - rho;
    detail::clip(x, budget.bounds);
    fv.push_back(eval(x));
    pts.push_back(std::move(x));
  }
  if (pts.size() < n + 1) {
    res.reason = "evaluation budget exhausted";
    res.recommended = res.best_params;
    return res;
  }

  auto best_index = [&] { return static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin()); };
  auto edges = [&](std::size_t b) {
    Eigen::MatrixXd d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::Index r = 0;
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == b) continue;
      for (std::size_t k = 0; k < n; ++k) d(r, static_cast<Eigen::Index>(k)) = pts[i][k] - pts[b][k];
      ++r;
    }
    return d;
  };
  auto vertex_of_row = [](std::size_t b, Eigen::Index r) { return static_cast<std::size_t>(r) + (static_cast<std::size_t>(r) >= b ? 1 : 0); };
  auto dist = [&](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += (a[k] - c[k]) * (a[k] - c[k]);
    return std::sqrt(s);
  };

  // Replaces the vertex j != b by a point at distance rho from the best
  // vertex, orthogonal to the remaining edges.
  auto geometry_step = [&](std::size_t b, std::size_t j, const Eigen::VectorXd& g) {
    Eigen::MatrixXd others(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n - 1));
    Eigen::Index c = 0;
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == b || i == j) continue;
      for (std::size_t k = 0; k < n; ++k) others(static_cast<Eigen::Index>(k), c) = pts[i][k] - pts[b][k];
      ++c;
    }
    Eigen::VectorXd v;
    if (n == 1) {
      v = Eigen::VectorXd::Ones(1);
    } else {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(others);
      const Eigen::MatrixXd q = qr.householderQ();
      v = q.col(static_cast<Eigen::Index>(n - 1));
    }
    if (g.size() == v.size() && g.dot(v) > 0.0) v = -v;
    auto x = pts[b];
    for (std::size_t k = 0; k < n; ++k) x[k] += rho * v(static_cast<Eigen::Index>(k));
    detail::clip(x, budget.bounds);
    fv[j] = eval(x);
    pts[j] = std::move(x);
  };

  while (!eval.exhausted()) {
    const std::size_t b = best_index();
    const Eigen::MatrixXd d = edges(b);
    Eigen::VectorXd df(static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(n); ++r) df(r) = fv[vertex_of_row(b, r)] - fv[b];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smin = svd.singularValues().minCoeff();
    Eigen::VectorXd g = svd.solve(df);

    // Worst-placed vertex: farthest from the best point.
    std::size_t far = b == 0 ? 1 : 0;
    for (std::size_t i = 0; i <= n; ++i) {
      if (i != b && dist(pts[i], pts[b]) > dist(pts[far], pts[b])) far = i;
    }
    const bool poised = smin > 0.25 * rho && dist(pts[far], pts[b]) <= 2.1 * rho;

    bool success = false;
    const double gn = g.norm();
    if (std::isfinite(gn) && gn > 0.0 && smin > 1e-3 * rho) {
      auto xt = pts[b];
      for (std::size_t k = 0; k < n; ++k) xt[k] -= rho * g(static_cast<Eigen::Index>(k)) / gn;
      detail::clip(xt, budget.bounds);
      const double step = dist(xt, pts[b]);
      if (step > 0.1 * rho) {
        const double ft = eval(xt);
        const double predicted = gn * step;
        const double actual = fv[b] - ft;
        // Swap the trial point in for the vertex farthest from it.
        std::size_t j = b == 0 ? 1 : 0;
        for (std::size_t i = 0; i <= n; ++i) {
          if (ft < fv[b] || i != b) {
            if (dist(pts[i], xt) > dist(pts[j], xt) && (ft < fv[b] || i != b)) j = i;
          }
        }
        if (ft >= fv[b] && j == b) j = far;
        pts[j] = std::move(xt);
        fv[j] = ft;
        success = actual > 0.1 * predicted;
      }
    }
    if (success) continue;
    if (eval.exhausted()) break;
    if (!poised) {
      const std::size_t b2 = best_index();
      std::size_t j = b2 == 0 ? 1 : 0;
      for (std::size_t i = 0; i <= n; ++i) {
        if (i != b2 && dist(pts[i], pts[b2]) > dist(pts[j], pts[b2])) j = i;
      }
      if (dist(pts[j], pts[b2]) > 2.1 * rho || smin <= 0.25 * rho) {
        geometry_step(b2, j, g);
        continue;
      }
    }
    if (rho <= rho_end) {
      res.converged = true;
      res.reason = "trust radius below " + std::to_string(rho_end);
      break;
    }
    rho = std::max(rho_end, 0.5 * rho);
  }
  if (!res.converged) res.reason = "evaluation budget exhausted";
  res.recommended = res.best_params;
  return res;
}

/// Gaussian process regression with a Matern-5/2 ARD kernel on [0,1]^d inputs.
class GaussianProcess {
 public:
  struct Hyper {
    Eigen::VectorXd log_length;
    double log_signal = 0.0;  // log variance, standardized units
    double log_noise = -4.0;  // log variance, standardized units
  };

  static constexpr double kNoiseFloor = 1e-10;

  void set_data(std::vector<Eigen::VectorXd> x, std::vector<double> y) {
    x_ = std::move(x);
    y_raw_ = std::move(y);
    const double n = static_cast<double>(y_raw_.size());
    mean_ = 0.0;
    for (double v : y_raw_) mean_ += v / n;
    double var = 0.0;
    for (double v : y_raw_) var += (v - mean_) * (v - mean_) / n;
    scale_ = var > 1e-300 ? std::sqrt(var) : 1.0;
    ys_ = Eigen::VectorXd(static_cast<Eigen::Index>(y_raw_.size()));
    for (std::size_t i = 0; i < y_raw_.size(); ++i) ys_(static_cast<Eigen::Index>(i)) = (y_raw_[i] - mean_) / scale_;
  }

  static double matern52(double r) {
    const double s = std::sqrt(5.0) * r;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
  }

  double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Hyper& h) const {
    const Eigen::VectorXd diff = (a - b).cwiseQuotient(h.log_length.array().exp().matrix());
    return std::exp(h.log_signal) * matern52(diff.norm());
  }

  /// Negative log marginal likelihood; +inf when the Gram matrix is not PD.
  double neg_log_likelihood(const Hyper& h) const {
    const auto n = static_cast<Eigen::Index>(x_.size());
    Eigen::MatrixXd k(n, n);
    const double noise = std::max(kNoiseFloor, std::exp(h.log_noise));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = kernel(x_[i], x_[j], h);
      k(i, i) += noise;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd alpha = llt.solve(ys_);
    const Eigen::MatrixXd l = llt.matrixL();
    return 0.5 * ys_.dot(alpha) + l.diagonal().array().log().sum() + 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  }

  /// Refits hyperparameters by maximizing the marginal likelihood from `start`.
  Hyper fit(const Hyper& start, std::size_t max_evals) const {
    const auto d = start.log_length.size();
    auto unpack = [d](const std::vector<double>& v) {
      Hyper h;
      h.log_length = Eigen::Map<const Eigen::VectorXd>(v.data(), d);
      h.log_signal = v[static_cast<std::size_t>(d)];
      h.log_noise = v[static_cast<std::size_t>(d) + 1];
      return h;
    };
    std::vector<double> v0(start.log_length.data(), start.log_length.data() + d);
    v0.push_back(start.log_signal);
    v0.push_back(start.log_noise);
    OptimizerBudget b;
    b.max_evals = max_evals;
    b.tol = 1e-6;
    b.rho_begin = 0.5;
    for (Eigen::Index i = 0; i < d; ++i) b.bounds.push_back({std::log(0.02), std::log(5.0)});
    b.bounds.push_back({std::log(0.05), std::log(20.0)});
    b.bounds.push_back({std::log(kNoiseFloor), std::log(2.0)});
    auto f = [&](const std::vector<double>& v) {
      const double nll = neg_log_likelihood(unpack(v));
      return std::isfinite(nll) ? nll : 1e30;
    };
    const auto r = cobyla_minimize(f, v0, b);
    return unpack(r.best_params);
  }

  void condition(const Hyper& h) {
    hyper_ = h;
    const auto n = static_cast<Eigen::Index>(x_.size());
    Eigen::MatrixXd k(n, n);
    const double noise = std::max(kNoiseFloor, std::exp(h.log_noise));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = kernel(x_[i], x_[j], h);
      k(i, i) += noise;
    }
    // Jitter until the factorization succeeds.
    double jitter = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      llt_.compute(k + jitter * Eigen::MatrixXd::Identity(n, n));
      if (llt_.info() == Eigen::Success) break;
      jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    }
    if (llt_.info() != Eigen::Success) throw std::runtime_error("GaussianProcess: Gram matrix not positive definite");
    alpha_ = llt_.solve(ys_);
  }

  /// Posterior mean and standard deviation of the latent function (raw units).
  std::pair<double, double> predict(const Eigen::VectorXd& x) const {
    const auto n = static_cast<Eigen::Index>(x_.size());
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks(i) = kernel(x, x_[i], hyper_);
    const double mu = ks.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(ks);
    const double var = std::max(0.0, std::exp(hyper_.log_signal) - v.squaredNorm());
    return {mean_ + scale_ * mu, scale_ * std::sqrt(var)};
  }

  const Hyper& hyper() const { return hyper_; }

 private:
  std::vector<Eigen::VectorXd> x_;
  std::vector<double> y_raw_;
  Eigen::VectorXd ys_;
  double mean_ = 0.0;
  double scale_ = 1.0;
  Hyper hyper_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

enum class Acquisition : std::uint8_t { kExpectedImprovement, kLowerConfidenceBound };

struct BayesOptions {
  std::optional<std::vector<double>> x0;  // evaluated first when given
  std::size_t n_initial = 0;              // 0 = max(5, 2 * n_arg)
  Acquisition acquisition = Acquisition::kExpectedImprovement;
  double xi = 0.0;      // EI exploration margin, as a fraction of the observed range
  double kappa = 1.96;  // LCB width
  std::size_t n_candidates = 500;
  std::size_t n_local = 3;
  std::size_t hyper_evals = 40;
  std::size_t refit_every = 4;   // once more than 40 observations exist
};

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double expected_improvement(double mu, double sigma, double best, double xi) {
  if (sigma <= 1e-15) return std::max(0.0, best - mu - xi);
  const double z = (best - mu - xi) / sigma;
  return (best - mu - xi) * normal_cdf(z) + sigma * normal_pdf(z);
}

/// n_arg x 22 evaluations.
inline std::size_t default_bayes_evals(std::size_t n_arg) { return std::max<std::size_t>(1, 22 * n_arg); }

/**
 * Ask/tell Bayesian minimization inside box bounds.
 *
 * Each round refits the GP (Matern-5/2, fitted noise) to every observation,
 * then evaluates the acquisition maximizer found by random search followed
 * by local linear-model refinement from the best candidates.
 */
inline OptResult bayes_minimize(const Objective& objective, const OptimizerBudget& budget, std::uint64_t seed, const BayesOptions& opt = {}) {
  budget.validate();
  const std::size_t d = budget.bounds.size();
  if (d == 0) throw std::invalid_argument("bayes_minimize: bounds are required for every parameter");
  for (const auto& b : budget.bounds) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.hi > b.lo)) throw std::invalid_argument("bayes_minimize: bounds must be finite with hi > lo");
  }
  OptResult res;
  detail::Evaluator eval(objective, budget.max_evals, res);
  Rng rng(seed);
  auto to_x = [&](const Eigen::VectorXd& u) {
    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = budget.bounds[i].lo + std::clamp(u(static_cast<Eigen::Index>(i)), 0.0, 1.0) * (budget.bounds[i].hi - budget.bounds[i].lo);
    return x;
  };
  auto to_u = [&](const std::vector<double>& x) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) u(static_cast<Eigen::Index>(i)) = std::clamp((x[i] - budget.bounds[i].lo) / (budget.bounds[i].hi - budget.bounds[i].lo), 0.0, 1.0);
    return u;
  };

  std::vector<Eigen::VectorXd> us;
  std::vector<double> ys;
  auto observe = [&](const Eigen::VectorXd& u) {
    const auto x = to_x(u);
    ys.push_back(eval(x));
    us.push_back(to_u(x));
  };

  const std::size_t n_init = std::min(budget.max_evals, opt.n_initial ? opt.n_initial : std::max<std::size_t>(5, 2 * d));
  if (opt.x0) {
    if (opt.x0->size() != d) throw std::invalid_argument("bayes_minimize: x0 size mismatch");
    observe(to_u(*opt.x0));
  }
  // Stratified (Latin hypercube) initial design.
  const std::size_t n_lhs = n_init - us.size();
  if (n_lhs > 0) {
    std::vector<std::vector<std::size_t>> perm(d);
    for (auto& p : perm) {
      p.resize(n_lhs);
      for (std::size_t i = 0; i < n_lhs; ++i) p[i] = i;
      for (std::size_t i = n_lhs; i-- > 1;) std::swap(p[i], p[rng.below(i + 1)]);
    }
    for (std::size_t k = 0; k < n_lhs && !eval.exhausted(); ++k) {
      Eigen::VectorXd u(static_cast<Eigen::Index>(d));
      for (std::size_t i = 0; i < d; ++i) u(static_cast<Eigen::Index>(i)) = (static_cast<double>(perm[i][k]) + rng.uniform()) / static_cast<double>(n_lhs);
      observe(u);
    }
  }

  GaussianProcess gp;
  GaussianProcess::Hyper hyper;
  hyper.log_length = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), std::log(0.3));
  hyper.log_signal = 0.0;
  hyper.log_noise = std::log(1e-2);

  auto posterior_best = [&] {
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < us.size(); ++i) {
      const double m = gp.predict(us[i]).first;
      if (m < best) {
        best = m;
        arg = i;
      }
    }
    return std::pair{arg, best};
  };

  std::size_t round = 0;
  while (!eval.exhausted()) {
    gp.set_data(us, ys);
    if (us.size() <= 40 || round % std::max<std::size_t>(1, opt.refit_every) == 0) hyper = gp.fit(hyper, opt.hyper_evals);
    ++round;
    gp.condition(hyper);
    const auto [inc_index, incumbent] = posterior_best();
    const double yscale = [&] {
      double mx = *std::max_element(ys.begin(), ys.end()), mn = *std::min_element(ys.begin(), ys.end());
      return std::max(mx - mn, 1e-12);
    }();
    auto acq = [&](const Eigen::VectorXd& u) {
      const auto [mu, sigma] = gp.predict(u);
      if (opt.acquisition == Acquisition::kLowerConfidenceBound) return -(mu - opt.kappa * sigma);
      return expected_improvement(mu, sigma, incumbent, opt.xi * yscale);
    };
    std::vector<std::pair<double, Eigen::VectorXd>> cands;
    cands.reserve(opt.n_candidates);
    // Uniform candidates plus a quarter drawn near the incumbent.
    const double width = 0.1 * std::exp(hyper.log_length.minCoeff());
    for (std::size_t c = 0; c < opt.n_candidates; ++c) {
      Eigen::VectorXd u(static_cast<Eigen::Index>(d));
      const bool local = 4 * c < opt.n_candidates;
      for (std::size_t i = 0; i < d; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        u(k) = local ? std::clamp(us[inc_index](k) + width * (2.0 * rng.uniform() - 1.0), 0.0, 1.0) : rng.uniform();
      }
      cands.emplace_back(acq(u), std::move(u));
    }
    const std::size_t n_keep = std::min(opt.n_local, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(n_keep), cands.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    Eigen::VectorXd next = cands.front().second;
    double next_val = cands.front().first;
    for (std::size_t s = 0; s < n_keep; ++s) {
      OptimizerBudget lb;
      lb.max_evals = 30;
      lb.tol = 1e-8;
      lb.rho_begin = 0.05;
      lb.bounds.assign(d, Bound{0.0, 1.0});
      const auto& start = cands[s].second;
      const auto r = cobyla_minimize([&](const std::vector<double>& v) { return -acq(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(d))); },
                                     std::vector<double>(start.data(), start.data() + d), lb);
      if (-r.best_value > next_val) {
        next_val = -r.best_value;
        next = Eigen::Map<const Eigen::VectorXd>(r.best_params.data(), static_cast<Eigen::Index>(d));
      }
    }
    observe(next);
  }
  gp.set_data(us, ys);
  gp.condition(hyper);
  res.recommended = to_x(us[posterior_best().first]);
  res.converged = true;
  res.reason = "evaluation budget used";
  return res;
}

}  // namespace vqesa
