#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace domainrank {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double fmin = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// Downhill simplex in n dimensions. Non-finite objective values are treated
// as +inf so box transforms can simply reject out-of-range points.
inline NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, double initial_step = 0.5,
    int max_iterations = 600, double f_tolerance = 1e-12) {
  const auto n = static_cast<int>(x0.size());
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  auto safe_f = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1][i] += initial_step;
  for (int i = 0; i <= n; ++i) vals[i] = safe_f(pts[i]);

  std::vector<int> order(n + 1);
  NelderMeadResult result;
  int it = 0;
  for (; it < max_iterations; ++it) {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order[0], worst = order[n], second_worst = order[n - 1];

    if (std::abs(vals[worst] - vals[best]) <=
        f_tolerance * (std::abs(vals[best]) + f_tolerance)) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + alpha * (centroid - pts[worst]);
    const double f_ref = safe_f(reflected);
    if (f_ref < vals[best]) {
      const Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
      const double f_exp = safe_f(expanded);
      if (f_exp < f_ref) {
        pts[worst] = expanded;
        vals[worst] = f_exp;
      } else {
        pts[worst] = reflected;
        vals[worst] = f_ref;
      }
    } else if (f_ref < vals[second_worst]) {
      pts[worst] = reflected;
      vals[worst] = f_ref;
    } else {
      const Eigen::VectorXd contracted = centroid + rho * (pts[worst] - centroid);
      const double f_con = safe_f(contracted);
      if (f_con < vals[worst]) {
        pts[worst] = contracted;
        vals[worst] = f_con;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + sigma * (pts[i] - pts[best]);
          vals[i] = safe_f(pts[i]);
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (vals[i] < vals[best]) best = i;
  result.x = pts[best];
  result.fmin = vals[best];
  result.iterations = it;
  return result;
}

}  // namespace domainrank
