#include "hypolab/stats/logistic.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "hypolab/common/error.hpp"
#include "hypolab/stats/distributions.hpp"

namespace hypolab::stats {
namespace {

constexpr double kSeparationBeta = 15.0;

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + e^eta) computed without overflow
    const double e = eta[i];
    const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += y[i] * e - softplus;
  }
  return ll;
}

double sigmoid(double e) {
  if (e >= 0) return 1.0 / (1.0 + std::exp(-e));
  const double z = std::exp(e);
  return z / (1.0 + z);
}

}  // namespace

RegressionResult logistic_regression(const DesignMatrix& x, std::span<const double> y,
                                     const LogisticOptions& options) {
  if (x.names.size() != x.columns.size()) throw InvalidArgument("logistic_regression: names and columns differ");
  const std::size_t n = y.size();
  for (const auto& c : x.columns) {
    if (c.size() != n) throw InvalidArgument("logistic_regression: column length does not match outcome");
  }
  bool has0 = false, has1 = false;
  for (double v : y) {
    if (v == 0.0) has0 = true;
    else if (v == 1.0) has1 = true;
    else throw InvalidArgument("logistic_regression: outcome must be 0/1");
  }
  if (!has0 || !has1) throw InvalidArgument("logistic_regression: outcome contains a single class");

  const Eigen::Index p = static_cast<Eigen::Index>(x.columns.size()) + 1;
  if (static_cast<Eigen::Index>(n) < p) throw InvalidArgument("logistic_regression: fewer rows than parameters");
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), p);
  design.col(0).setOnes();
  for (Eigen::Index k = 1; k < p; ++k) {
    const auto& c = x.columns[static_cast<std::size_t>(k - 1)];
    for (std::size_t i = 0; i < n; ++i) design(static_cast<Eigen::Index>(i), k) = c[i];
  }
  Eigen::VectorXd yv(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) yv[static_cast<Eigen::Index>(i)] = y[i];

  // Penalty applies to slopes only.
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, options.ridge_penalty);
  penalty[0] = 0.0;
  auto objective = [&](const Eigen::VectorXd& beta) {
    return log_likelihood(design * beta, yv) - 0.5 * (penalty.array() * beta.array().square()).sum();
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double current = objective(beta);
  RegressionResult result;
  result.n = n;
  Eigen::MatrixXd info(p, p);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd mu(eta.size()), w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      mu[i] = sigmoid(eta[i]);
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    const Eigen::VectorXd grad = design.transpose() * (yv - mu) - penalty.cwiseProduct(beta);
    info = design.transpose() * w.asDiagonal() * design;
    info.diagonal() += penalty;
    Eigen::LDLT<Eigen::MatrixXd> solver(info);
    if (solver.info() != Eigen::Success || !solver.isPositive()) {
      throw Error("logistic_regression: singular information matrix");
    }
    Eigen::VectorXd step = solver.solve(grad);

    Eigen::VectorXd candidate = beta + step;
    double value = objective(candidate);
    for (int halving = 0; halving < 30 && !(value >= current - 1e-12 * std::fabs(current)); ++halving) {
      step *= 0.5;
      candidate = beta + step;
      value = objective(candidate);
    }
    beta = candidate;
    current = value;
    result.iterations = iter;
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      result.converged = true;
      break;
    }
    if (options.ridge_penalty == 0.0 && beta.tail(p - 1).cwiseAbs().maxCoeff() > 2.0 * kSeparationBeta) break;
  }

  // Information at the final estimate.
  {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double m = sigmoid(eta[i]);
      w[i] = m * (1.0 - m);
    }
    info = design.transpose() * w.asDiagonal() * design;
    info.diagonal() += penalty;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (!lu.isInvertible()) throw Error("logistic_regression: singular information matrix");
  const Eigen::MatrixXd cov = lu.inverse();

  result.log_likelihood = log_likelihood(design * beta, yv);
  if (options.ridge_penalty == 0.0 && p > 1 && beta.tail(p - 1).cwiseAbs().maxCoeff() > kSeparationBeta) {
    result.converged = false;
    result.warnings.push_back("separation");
  } else if (!result.converged) {
    result.warnings.push_back("did not converge");
  }

  for (Eigen::Index k = 0; k < p; ++k) {
    Coefficient c;
    c.name = k == 0 ? "(intercept)" : x.names[static_cast<std::size_t>(k - 1)];
    c.beta = beta[k];
    c.std_err = std::sqrt(std::max(cov(k, k), 0.0));
    c.wald_z = c.std_err > 0.0 ? c.beta / c.std_err : 0.0;
    c.p = normal_two_sided_p(c.wald_z);
    result.coefficients.push_back(std::move(c));
  }
  return result;
}

}  // namespace hypolab::stats
