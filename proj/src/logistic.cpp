#include "traitlens/logistic.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <set>

#include "traitlens/detail/rng.hpp"

namespace traitlens {

namespace {

// Row-wise softmax probabilities for scores S (n x k), numerically stable.
Matrix row_softmax(const Matrix& s) {
  Matrix p = s;
  for (Index i = 0; i < p.rows(); ++i) {
    const double m = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

double mean_cross_entropy(const Matrix& s, const std::vector<Index>& y) {
  double nll = 0.0;
  for (Index i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    const double lse = m + std::log((s.row(i).array() - m).exp().sum());
    nll += lse - s(i, y[static_cast<size_t>(i)]);
  }
  return nll / static_cast<double>(s.rows());
}

void check_labels(const std::vector<Index>& y, Index k, Index n) {
  if (static_cast<Index>(y.size()) != n) {
    throw InputError("label count does not match sample count");
  }
  std::set<Index> seen;
  for (Index v : y) {
    if (v < 0 || v >= k) throw InputError("label index out of range");
    seen.insert(v);
  }
  if (seen.size() < 2) {
    throw DegenerateLabelsError(
        "training data contains fewer than two distinct labels");
  }
}

}  // namespace

double multinomial_objective(const Matrix& x, const std::vector<Index>& y,
                             const Matrix& w, const Vector& b, double lambda) {
  Matrix s = x * w.transpose();
  s.rowwise() += b.transpose();
  return mean_cross_entropy(s, y) + 0.5 * lambda * w.squaredNorm();
}

LogisticFit fit_multinomial(const Matrix& x, const std::vector<Index>& y,
                            Index k, const LogisticFitConfig& cfg) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (n == 0) throw InputError("empty training set");
  check_labels(y, k, n);
  if (cfg.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (cfg.tolerance <= 0.0) throw ConfigError("tolerance must be > 0");

  const Index dp = d + 1;  // per-class parameters incl. bias
  const Index psz = k * dp;
  Matrix w = Matrix::Zero(k, d);
  Vector b = Vector::Zero(k);
  const double inv_n = 1.0 / static_cast<double>(n);

  auto objective = [&](const Matrix& wc, const Vector& bc) {
    return multinomial_objective(x, y, wc, bc, cfg.lambda);
  };

  double grad_norm = 0.0;
  int it = 0;
  for (; it < cfg.max_iter; ++it) {
    Matrix s = x * w.transpose();
    s.rowwise() += b.transpose();
    Matrix p = row_softmax(s);
    Matrix r = p;  // residual P - Y
    for (Index i = 0; i < n; ++i) r(i, y[static_cast<size_t>(i)]) -= 1.0;

    Matrix gw = (r.transpose() * x) * inv_n + cfg.lambda * w;
    Vector gb = r.colwise().sum().transpose() * inv_n;
    grad_norm = std::max(gw.cwiseAbs().maxCoeff(), gb.cwiseAbs().maxCoeff());
    if (grad_norm <= cfg.tolerance) break;

    // Hessian: sum_i (diag(p_i) - p_i p_i^T) kron x~_i x~_i^T / n, plus
    // lambda on the weight block. k(d+1) stays small for probe-sized inputs.
    Matrix hess = Matrix::Zero(psz, psz);
    Vector xt(dp);
    for (Index i = 0; i < n; ++i) {
      xt.head(d) = x.row(i).transpose();
      xt(d) = 1.0;
      const Matrix xx = xt * xt.transpose();
      for (Index c = 0; c < k; ++c) {
        for (Index c2 = c; c2 < k; ++c2) {
          const double a =
              p(i, c) * ((c == c2 ? 1.0 : 0.0) - p(i, c2)) * inv_n;
          if (a == 0.0) continue;
          hess.block(c * dp, c2 * dp, dp, dp) += a * xx;
        }
      }
    }
    // mirror the upper blocks
    for (Index c = 0; c < k; ++c) {
      for (Index c2 = c + 1; c2 < k; ++c2) {
        hess.block(c2 * dp, c * dp, dp, dp) =
            hess.block(c * dp, c2 * dp, dp, dp).transpose();
      }
    }
    for (Index c = 0; c < k; ++c) {
      for (Index j = 0; j < d; ++j) hess(c * dp + j, c * dp + j) += cfg.lambda;
      // softmax leaves a constant-shift null direction across classes; a hair
      // of ridge keeps the solve well-posed without moving the optimum.
      hess(c * dp + d, c * dp + d) += 1e-12;
    }

    Vector grad(psz);
    for (Index c = 0; c < k; ++c) {
      grad.segment(c * dp, d) = gw.row(c).transpose();
      grad(c * dp + d) = gb(c);
    }
    Vector step = hess.ldlt().solve(grad);
    const double descent = grad.dot(step);

    const double j0 = objective(w, b);
    double t = 1.0;
    Matrix w2;
    Vector b2;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      w2 = w;
      b2 = b;
      for (Index c = 0; c < k; ++c) {
        w2.row(c) -= t * step.segment(c * dp, d).transpose();
        b2(c) -= t * step(c * dp + d);
      }
      if (objective(w2, b2) <= j0 - 1e-4 * t * descent) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // stuck at numerical floor; report residual below
    w = std::move(w2);
    b = std::move(b2);
  }

  if (grad_norm > cfg.tolerance) {
    throw ConvergenceError(
        "logistic fit did not reach tolerance " + std::to_string(cfg.tolerance) +
            " within " + std::to_string(cfg.max_iter) + " iterations",
        grad_norm);
  }

  LogisticFit fit;
  fit.w = std::move(w);
  fit.b = std::move(b);
  fit.objective = objective(fit.w, fit.b);
  fit.grad_norm = grad_norm;
  fit.iterations = it;
  return fit;
}

Mlp2Fit fit_mlp2(const Matrix& x, const std::vector<Index>& y, Index k,
                 const Mlp2FitConfig& cfg) {
  const Index n = x.rows();
  const Index d = x.cols();
  const Index h = cfg.hidden;
  if (n == 0) throw InputError("empty training set");
  check_labels(y, k, n);

  detail::Rng rng(detail::mix_seed(cfg.seed, 0x3721ULL));
  Matrix w1(h, d), w2(k, h);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < d; ++j)
      w1(i, j) = rng.next_gaussian() / std::sqrt(static_cast<double>(d));
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < h; ++j)
      w2(i, j) = rng.next_gaussian() / std::sqrt(static_cast<double>(h));
  Vector b1 = Vector::Zero(h), b2 = Vector::Zero(k);

  Matrix mw1 = Matrix::Zero(h, d), vw1 = Matrix::Zero(h, d);
  Matrix mw2 = Matrix::Zero(k, h), vw2 = Matrix::Zero(k, h);
  Vector mb1 = Vector::Zero(h), vb1 = Vector::Zero(h);
  Vector mb2 = Vector::Zero(k), vb2 = Vector::Zero(k);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const double inv_n = 1.0 / static_cast<double>(n);

  auto adam = [&](auto& param, auto& m, auto& v, const auto& g, double lr,
                  int t) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v.array().matrix() + (1.0 - beta2) * g.array().square().matrix();
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };

  auto objective = [&](const Matrix& hw, const Vector& hb, const Matrix& ow,
                       const Vector& ob) {
    Matrix hid = ((x * hw.transpose()).rowwise() + hb.transpose()).array().tanh();
    Matrix s = hid * ow.transpose();
    s.rowwise() += ob.transpose();
    return mean_cross_entropy(s, y) +
           0.5 * cfg.lambda * (hw.squaredNorm() + ow.squaredNorm());
  };

  Mlp2Fit best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int t = 1; t <= cfg.iterations; ++t) {
    Matrix hid = ((x * w1.transpose()).rowwise() + b1.transpose()).array().tanh();
    Matrix s = hid * w2.transpose();
    s.rowwise() += b2.transpose();
    Matrix p = row_softmax(s);
    for (Index i = 0; i < n; ++i) p(i, y[static_cast<size_t>(i)]) -= 1.0;
    p *= inv_n;  // dL/dS

    Matrix gw2 = p.transpose() * hid + cfg.lambda * w2;
    Vector gb2 = p.colwise().sum().transpose();
    Matrix dh = (p * w2).array() * (1.0 - hid.array().square());
    Matrix gw1 = dh.transpose() * x + cfg.lambda * w1;
    Vector gb1 = dh.colwise().sum().transpose();

    adam(w1, mw1, vw1, gw1, cfg.learning_rate, t);
    adam(b1, mb1, vb1, gb1, cfg.learning_rate, t);
    adam(w2, mw2, vw2, gw2, cfg.learning_rate, t);
    adam(b2, mb2, vb2, gb2, cfg.learning_rate, t);

    if (t == cfg.iterations || t % 25 == 0) {
      const double j = objective(w1, b1, w2, b2);
      if (j < best.objective) {
        best.w1 = w1;
        best.b1 = b1;
        best.w2 = w2;
        best.b2 = b2;
        best.objective = j;
        best.iterations = t;
      }
    }
  }
  return best;
}

}  // namespace traitlens
