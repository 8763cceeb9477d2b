#pragma once

// Direct-from-definition statistic implementations used as test oracles.
// Written for clarity over speed; intended for n <= a few dozen.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cigen/numerics.hpp"

namespace cigen::oracle {

inline double euclid(const Matrix& m, Index i, Index j) {
  double s = 0.0;
  for (Index c = 0; c < m.cols(); ++c) s += (m(i, c) - m(j, c)) * (m(i, c) - m(j, c));
  return std::sqrt(s);
}

inline Eigen::MatrixXd double_centred(const Matrix& m) {
  const Index n = m.rows();
  Eigen::MatrixXd a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = euclid(m, i, j);
  Eigen::MatrixXd out(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      double ri = 0.0, cj = 0.0, all = 0.0;
      for (Index k = 0; k < n; ++k) {
        ri += a(i, k);
        cj += a(k, j);
        for (Index l = 0; l < n; ++l) all += a(k, l);
      }
      out(i, j) = a(i, j) - ri / n - cj / n + all / (static_cast<double>(n) * n);
    }
  }
  return out;
}

inline double dcor(const Matrix& x, const Matrix& y) {
  const auto a = double_centred(x);
  const auto b = double_centred(y);
  const double n2 = static_cast<double>(x.rows()) * x.rows();
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      xy += a(i, j) * b(i, j);
      xx += a(i, j) * a(i, j);
      yy += b(i, j) * b(i, j);
    }
  }
  xy /= n2;
  xx /= n2;
  yy /= n2;
  if (xx <= 0.0 || yy <= 0.0) return 0.0;
  return std::sqrt(std::max(xy, 0.0) / std::sqrt(xx * yy));
}

inline double abs_pearson(const Vector& x, const Vector& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (Index i = 0; i < x.size(); ++i) {
    sx += x(i);
    sy += y(i);
  }
  const double mx = sx / n, my = sy / n;
  for (Index i = 0; i < x.size(); ++i) {
    sxx += (x(i) - mx) * (x(i) - mx);
    syy += (y(i) - my) * (y(i) - my);
    sxy += (x(i) - mx) * (y(i) - my);
  }
  return std::abs(sxy) / std::sqrt(sxx * syy);
}

inline double median_distance(const Matrix& m) {
  std::vector<double> d;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = i + 1; j < m.rows(); ++j) d.push_back(euclid(m, i, j));
  std::sort(d.begin(), d.end());
  const std::size_t k = d.size();
  return k % 2 == 1 ? d[k / 2] : 0.5 * (d[k / 2 - 1] + d[k / 2]);
}

inline double gaussian_mmd2(const Matrix& a, const Matrix& b, double h) {
  auto k = [&](const Matrix& p, Index i, const Matrix& q, Index j) {
    double s = 0.0;
    for (Index c = 0; c < p.cols(); ++c) s += (p(i, c) - q(j, c)) * (p(i, c) - q(j, c));
    return std::exp(-s / (2.0 * h * h));
  };
  double aa = 0, bb = 0, ab = 0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.rows(); ++j) aa += k(a, i, a, j);
  for (Index i = 0; i < b.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) bb += k(b, i, b, j);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) ab += k(a, i, b, j);
  const double na = static_cast<double>(a.rows()), nb = static_cast<double>(b.rows());
  return std::max(aa / (na * na) + bb / (nb * nb) - 2.0 * ab / (na * nb), 0.0);
}

// MMD^2 between rows (x_i, y_i) and (x_i, y_perm(i)) at the median-distance bandwidth of the paired rows.
inline double mmd_dependence(const Matrix& x, const Matrix& y, const std::vector<std::size_t>& perm) {
  const Index n = x.rows();
  Matrix paired(n, x.cols() + y.cols()), decoupled(n, x.cols() + y.cols());
  for (Index i = 0; i < n; ++i) {
    paired.row(i) << x.row(i), y.row(i);
    decoupled.row(i) << x.row(i), y.row(static_cast<Index>(perm[static_cast<std::size_t>(i)]));
  }
  return gaussian_mmd2(paired, decoupled, median_distance(paired));
}

// Largest |F_xy(s, t) - F_x(s) F_y(t)| over all sample points s, t.
inline double ks_dependence(const Vector& x, const Vector& y) {
  const Index n = x.size();
  double best = 0.0;
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      double joint = 0, fx = 0, fy = 0;
      for (Index i = 0; i < n; ++i) {
        const bool bx = x(i) <= x(a), by = y(i) <= y(b);
        joint += bx && by;
        fx += bx;
        fy += by;
      }
      best = std::max(best, std::abs(joint / n - (fx / n) * (fy / n)));
    }
  }
  return best;
}

inline Eigen::MatrixXd copula(const Matrix& m) {
  Eigen::MatrixXd u(m.rows(), m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index i = 0; i < m.rows(); ++i) {
      double count = 0;
      for (Index j = 0; j < m.rows(); ++j) count += m(j, c) <= m(i, c);
      u(i, c) = count / static_cast<double>(m.rows());
    }
  }
  return u;
}

inline Eigen::MatrixXd centred_sine_features(const Matrix& m, const Matrix& w) {
  const Eigen::MatrixXd u = copula(m);
  Eigen::MatrixXd f(m.rows(), w.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index k = 0; k < w.cols(); ++k) {
      double s = w(m.cols(), k);
      for (Index c = 0; c < m.cols(); ++c) s += u(i, c) * w(c, k);
      f(i, k) = std::sin(s);
    }
  }
  return f.rowwise() - f.colwise().mean();
}

// Largest canonical correlation from covariance blocks: the square root of
// the top eigenvalue of Cxx^-1 Cxy Cyy^-1 Cyx.
inline double rdc(const Matrix& x, const Matrix& y, const Matrix& wx, const Matrix& wy) {
  const auto fx = centred_sine_features(x, wx);
  const auto fy = centred_sine_features(y, wy);
  const Eigen::MatrixXd cxx = fx.transpose() * fx;
  const Eigen::MatrixXd cyy = fy.transpose() * fy;
  const Eigen::MatrixXd cxy = fx.transpose() * fy;
  const Eigen::MatrixXd m = cxx.ldlt().solve(cxy) * cyy.ldlt().solve(cxy.transpose());
  const double top = m.eigenvalues().real().maxCoeff();
  return std::sqrt(std::clamp(top, 0.0, 1.0));
}

}  // namespace cigen::oracle
