#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>

#include "cccov/error.hpp"

namespace cccov {

// One estimation sample. Each row observes the outcome y, the possibly
// censored covariate w = min(x, c), the censoring indicator delta
// (1 = x observed), and p fully observed covariates z. Rows with delta = 0
// may carry w = NaN when the censoring value itself was never recorded.
// Simulated samples additionally carry the latent x_true, c and eps.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::VectorXd w;
  Eigen::VectorXi delta;
  Eigen::MatrixXd z;  // n x p
  std::optional<Eigen::VectorXd> x_true;
  std::optional<Eigen::VectorXd> c;
  std::optional<Eigen::VectorXd> eps;

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(z.cols()); }

  int n_complete() const {
    int s = 0;
    for (int i = 0; i < delta.size(); ++i) s += delta[i];
    return s;
  }

  // Cross-field invariants. Throws ArgumentError naming the first bad row.
  void validate() const {
    const int nn = n();
    if (nn < 1) throw ArgumentError("dataset is empty");
    auto bad_len = [&](const char* what, long got) {
      throw ArgumentError(std::string("dataset column ") + what + " has length " +
                          std::to_string(got) + ", expected " + std::to_string(nn));
    };
    if (w.size() != nn) bad_len("w", w.size());
    if (delta.size() != nn) bad_len("delta", delta.size());
    if (z.rows() != nn) bad_len("z", z.rows());
    if (x_true && x_true->size() != nn) bad_len("x_true", x_true->size());
    if (c && c->size() != nn) bad_len("c", c->size());
    if (eps && eps->size() != nn) bad_len("eps", eps->size());

    for (int i = 0; i < nn; ++i) {
      const std::string row = "row " + std::to_string(i + 1);
      if (delta[i] != 0 && delta[i] != 1)
        throw ArgumentError(row + ": delta must be 0 or 1");
      if (!std::isfinite(y[i])) throw ArgumentError(row + ": y is not finite");
      for (int j = 0; j < z.cols(); ++j)
        if (!std::isfinite(z(i, j)))
          throw ArgumentError(row + ": z" + std::to_string(j + 1) +
                              " is not finite");
      if (delta[i] == 1 && !std::isfinite(w[i]))
        throw ArgumentError(row + ": w is missing but delta = 1");
      if (x_true && delta[i] == 1 && w[i] != (*x_true)[i])
        throw ArgumentError(row + ": w != x_true on a complete case");
      if (x_true && c) {
        int expect = ((*x_true)[i] <= (*c)[i]) ? 1 : 0;
        if (delta[i] != expect)
          throw ArgumentError(row + ": delta inconsistent with x_true <= c");
        double mn = std::min((*x_true)[i], (*c)[i]);
        if (w[i] != mn)
          throw ArgumentError(row + ": w != min(x_true, c)");
      }
    }
  }
};

}  // namespace cccov
