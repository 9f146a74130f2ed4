#pragma once

#include <cstdint>
#include <vector>

#include "traitlens/types.hpp"

namespace traitlens {

/// Objective shared by the trainer, the probing module and the test oracles:
///   J(W, b) = mean_i CE(softmax(W x_i + b), y_i) + (lambda/2) ||W||_F^2
/// Biases are not penalized.
double multinomial_objective(const Matrix& x, const std::vector<Index>& y,
                             const Matrix& w, const Vector& b, double lambda);

struct LogisticFitConfig {
  double lambda = 1e-4;
  double tolerance = 1e-8;  // gradient inf-norm target
  int max_iter = 200;
};

struct LogisticFit {
  Matrix w;  // k x d
  Vector b;  // k
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

/// Damped-Newton minimizer of the objective above. Convex, started at zero,
/// so the result is deterministic. Throws DegenerateLabelsError when fewer
/// than two labels appear in y, and ConvergenceError (carrying the residual
/// gradient norm) when the tolerance is not reached within max_iter.
LogisticFit fit_multinomial(const Matrix& x, const std::vector<Index>& y,
                            Index k, const LogisticFitConfig& cfg);

struct Mlp2FitConfig {
  Index hidden = 512;
  double lambda = 1e-4;
  double learning_rate = 5e-3;
  int iterations = 400;
  uint64_t seed = 0;
};

struct Mlp2Fit {
  Matrix w1;  // h x d
  Vector b1;  // h
  Matrix w2;  // k x h
  Vector b2;  // k
  double objective = 0.0;
  int iterations = 0;
};

/// Full-batch Adam on a tanh two-layer network, seeded init, fixed iteration
/// budget. Deterministic given the seed.
Mlp2Fit fit_mlp2(const Matrix& x, const std::vector<Index>& y, Index k,
                 const Mlp2FitConfig& cfg);

}  // namespace traitlens
