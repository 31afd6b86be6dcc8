#pragma once

// Gaussian-process surrogate on the unit hypercube with a Matern-5/2 kernel and
// expected improvement. Kernel length scale and noise are picked from a fixed
// grid by marginal likelihood, so the fit is deterministic.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <vector>

#include "songemb/error.hpp"
#include "songemb/stats.hpp"

namespace songemb {

class GaussianProcess {
 public:
  using Matrix = Eigen::MatrixXd;
  using Vector = Eigen::VectorXd;

  // Rows of x are points in [0,1]^dim.
  void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    require(!x.empty() && x.size() == y.size(), "gp: need matching non-empty inputs");
    n_ = x.size();
    dim_ = x.front().size();
    x_.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = 0; k < dim_; ++k) x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = x[i][k];

    y_mean_ = 0.0;
    for (double v : y) y_mean_ += v;
    y_mean_ /= static_cast<double>(n_);
    double var = 0.0;
    for (double v : y) var += (v - y_mean_) * (v - y_mean_);
    y_scale_ = n_ > 1 ? std::sqrt(var / static_cast<double>(n_ - 1)) : 0.0;
    if (!(y_scale_ > 1e-12)) y_scale_ = 1.0;
    Vector ys(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) ys(static_cast<Eigen::Index>(i)) = (y[i] - y_mean_) / y_scale_;

    static constexpr double kLengths[] = {0.05, 0.1, 0.15, 0.2, 0.3, 0.45, 0.7, 1.0, 1.5, 2.5};
    static constexpr double kNoises[] = {1e-6, 1e-4, 1e-3, 1e-2, 5e-2, 0.2};
    double best = -std::numeric_limits<double>::infinity();
    for (double l : kLengths) {
      for (double s : kNoises) {
        Eigen::LLT<Matrix> llt(gram(l, s));
        if (llt.info() != Eigen::Success) continue;
        const Vector alpha = llt.solve(ys);
        const Matrix L = llt.matrixL();
        const double logdet = 2.0 * L.diagonal().array().log().sum();
        const double lml = -0.5 * ys.dot(alpha) - 0.5 * logdet;
        if (lml > best) {
          best = lml;
          length_ = l;
          noise_ = s;
          llt_ = llt;
          alpha_ = alpha;
        }
      }
    }
    require(std::isfinite(best), "gp: kernel matrix not positive definite for any grid setting");
    fitted_ = true;
  }

  double length_scale() const { return length_; }
  double noise() const { return noise_; }

  // Posterior mean and variance in the original objective units.
  std::pair<double, double> predict(const std::vector<double>& p) const {
    require(fitted_, "gp: predict before fit");
    Vector kx(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) kx(static_cast<Eigen::Index>(i)) = kernel(distance(p, i), length_);
    const double mu = kx.dot(alpha_);
    const Vector v = llt_.matrixL().solve(kx);
    const double var = std::max(1.0 - v.squaredNorm(), 1e-12);
    return {y_mean_ + y_scale_ * mu, y_scale_ * y_scale_ * var};
  }

  // E[max(f(p) - incumbent, 0)] under the posterior.
  double expected_improvement(const std::vector<double>& p, double incumbent) const {
    const auto [mu, var] = predict(p);
    const double sigma = std::sqrt(var);
    const double delta = mu - incumbent;
    const double z = delta / sigma;
    return delta * normal_cdf(z) + sigma * normal_pdf(z);
  }

  static double kernel(double r, double length) {
    const double a = std::sqrt(5.0) * r / length;
    return (1.0 + a + a * a / 3.0) * std::exp(-a);
  }

 private:
  double distance(const std::vector<double>& p, std::size_t i) const {
    double s = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      const double d = p[k] - x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      s += d * d;
    }
    return std::sqrt(s);
  }

  Matrix gram(double length, double noise) const {
    Matrix K(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) {
          const double d = x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) - x_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
          s += d * d;
        }
        const double v = kernel(std::sqrt(s), length);
        K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        K(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += noise + 1e-9;
    }
    return K;
  }

  std::size_t n_ = 0, dim_ = 0;
  Matrix x_;
  Vector alpha_;
  Eigen::LLT<Matrix> llt_;
  double y_mean_ = 0.0, y_scale_ = 1.0;
  double length_ = 0.3, noise_ = 1e-6;
  bool fitted_ = false;
};

}  // namespace songemb
