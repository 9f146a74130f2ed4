#include <Eigen/Eigenvalues>

#include <cmath>

#include "traitlens/detail/rng.hpp"
#include "traitlens/interpret.hpp"

namespace traitlens {

namespace {

// Conditional-probability row for one point: binary search on the bandwidth
// until the entropy matches log(perplexity).
void fit_row(const Vector& dist_sq, Index self, double perplexity, Vector& p) {
  double beta = 1.0, beta_min = 0.0, beta_max = -1.0;
  const double target = std::log(perplexity);
  for (int iter = 0; iter < 64; ++iter) {
    double sum = 0.0, weighted = 0.0;
    for (Index j = 0; j < dist_sq.size(); ++j) {
      if (j == self) {
        p[j] = 0.0;
        continue;
      }
      p[j] = std::exp(-beta * dist_sq[j]);
      sum += p[j];
      weighted += dist_sq[j] * p[j];
    }
    if (sum <= 0.0) sum = 1e-300;
    const double entropy = std::log(sum) + beta * weighted / sum;
    p /= sum;
    const double diff = entropy - target;
    if (std::abs(diff) < 1e-5) break;
    if (diff > 0) {
      beta_min = beta;
      beta = beta_max < 0 ? beta * 2.0 : 0.5 * (beta + beta_max);
    } else {
      beta_max = beta;
      beta = beta_min <= 0 && beta_max < 0 ? beta / 2.0 : 0.5 * (beta + beta_min);
    }
  }
}

}  // namespace

Embedded2D project_2d(const Matrix& points, const std::vector<Index>& labels,
                      uint64_t seed) {
  const Index n = points.rows();
  if (n < 3) throw InputError("project_2d needs at least 3 points");
  if (!labels.empty() && static_cast<Index>(labels.size()) != n) {
    throw InputError("labels length must match point count");
  }

  // Pairwise squared distances.
  Matrix dist_sq(n, n);
  const Vector sq = points.rowwise().squaredNorm();
  dist_sq = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
            2.0 * points * points.transpose();
  dist_sq = dist_sq.cwiseMax(0.0);

  const double perplexity =
      std::min(30.0, std::max(2.0, static_cast<double>(n - 1) / 3.0));
  Matrix p(n, n);
  Vector row(n);
  for (Index i = 0; i < n; ++i) {
    fit_row(dist_sq.row(i).transpose(), i, perplexity, row);
    p.row(i) = row.transpose();
  }
  p = (p + p.transpose()).eval() / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(1e-12);

  // PCA initialization with a deterministic sign convention, plus a seeded
  // jitter that breaks exact symmetries.
  Matrix centered = points.rowwise() - points.colwise().mean();
  Matrix cov = centered.transpose() * centered /
               static_cast<double>(std::max<Index>(1, n - 1));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  Matrix components = eig.eigenvectors().rightCols(2).rowwise().reverse();
  for (Index c = 0; c < 2; ++c) {
    Index arg = 0;
    components.col(c).cwiseAbs().maxCoeff(&arg);
    if (components(arg, c) < 0) components.col(c) *= -1.0;
  }
  Matrix y = centered * components;
  const double y_scale = std::max(1e-12, y.cwiseAbs().maxCoeff());
  y *= 1e-4 / y_scale;
  detail::Rng rng(detail::mix_seed(seed, 0x74534E45ULL));
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < 2; ++c) y(i, c) += 1e-6 * rng.next_gaussian();
  }

  Matrix increment = Matrix::Zero(n, 2);
  Matrix gains = Matrix::Ones(n, 2);
  const int max_iter = 500;
  const double learning_rate = 200.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const double exaggeration = iter < 100 ? 12.0 : 1.0;
    const double momentum = iter < 250 ? 0.5 : 0.8;

    // Student-t affinities in the embedding.
    Matrix num(n, n);
    const Vector ysq = y.rowwise().squaredNorm();
    num = ysq.replicate(1, n) + ysq.transpose().replicate(n, 1) -
          2.0 * y * y.transpose();
    num = (1.0 + num.array()).inverse().matrix();
    num.diagonal().setZero();
    const double qsum = std::max(num.sum(), 1e-300);

    Matrix grad = Matrix::Zero(n, 2);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = std::max(num(i, j) / qsum, 1e-300);
        const double mult = (exaggeration * p(i, j) - q) * num(i, j);
        grad.row(i) += 4.0 * mult * (y.row(i) - y.row(j));
      }
    }

    for (Index i = 0; i < n; ++i) {
      for (Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0) == (increment(i, c) > 0);
        gains(i, c) = same_sign ? std::max(0.01, gains(i, c) * 0.8)
                                : gains(i, c) + 0.2;
        increment(i, c) = momentum * increment(i, c) -
                          learning_rate * gains(i, c) * grad(i, c);
        y(i, c) += increment(i, c);
      }
    }
    y.rowwise() -= y.colwise().mean();
  }

  Embedded2D out;
  out.coords = std::move(y);
  out.labels = labels;
  return out;
}

}  // namespace traitlens
