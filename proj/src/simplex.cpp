#include "sps/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace sps {

namespace {

struct Simplex {
  std::vector<Eigen::VectorXd> vertices;
  std::vector<double> values;

  void sort() {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Eigen::VectorXd> v;
    std::vector<double> f;
    for (std::size_t k : order) {
      v.push_back(vertices[k]);
      f.push_back(values[k]);
    }
    vertices = std::move(v);
    values = std::move(f);
  }

  [[nodiscard]] double diameter() const {
    double d = 0.0;
    for (std::size_t k = 1; k < vertices.size(); ++k) d = std::max(d, (vertices[k] - vertices[0]).lpNorm<Eigen::Infinity>());
    return d;
  }
};

}  // namespace

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective, const Eigen::VectorXd& x0,
                          const SimplexOptions& options) {
  const Eigen::Index dim = x0.size();
  SimplexResult result;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++result.evaluations;
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  Eigen::VectorXd start = x0;
  double start_value = eval(start);
  for (int round = 0; round <= options.restarts; ++round) {
    Simplex s;
    s.vertices.push_back(start);
    s.values.push_back(start_value);
    for (Eigen::Index k = 0; k < dim; ++k) {
      Eigen::VectorXd v = start;
      v[k] += options.initial_step;
      s.vertices.push_back(v);
      s.values.push_back(eval(v));
    }
    bool converged = false;
    while (result.evaluations < options.max_evals) {
      s.sort();
      const double spread = s.values.back() - s.values.front();
      if (s.diameter() <= options.x_tol || (std::isfinite(spread) && spread <= options.f_rel * std::abs(s.values.front()))) {
        converged = true;
        break;
      }
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
      for (Eigen::Index k = 0; k < dim; ++k) centroid += s.vertices[static_cast<std::size_t>(k)];
      centroid /= static_cast<double>(dim);

      const Eigen::VectorXd& worst = s.vertices.back();
      const Eigen::VectorXd reflected = centroid + (centroid - worst);
      const double f_reflected = eval(reflected);
      const double f_best = s.values.front();
      const double f_second_worst = s.values[s.values.size() - 2];

      if (f_reflected < f_best) {
        const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - worst);
        const double f_expanded = eval(expanded);
        if (f_expanded < f_reflected) {
          s.vertices.back() = expanded;
          s.values.back() = f_expanded;
        } else {
          s.vertices.back() = reflected;
          s.values.back() = f_reflected;
        }
        continue;
      }
      if (f_reflected < f_second_worst) {
        s.vertices.back() = reflected;
        s.values.back() = f_reflected;
        continue;
      }
      const bool outside = f_reflected < s.values.back();
      const Eigen::VectorXd contracted =
          outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid)) : Eigen::VectorXd(centroid + 0.5 * (worst - centroid));
      const double f_contracted = eval(contracted);
      if (f_contracted < (outside ? f_reflected : s.values.back())) {
        s.vertices.back() = contracted;
        s.values.back() = f_contracted;
        continue;
      }
      for (std::size_t k = 1; k < s.vertices.size(); ++k) {
        s.vertices[k] = s.vertices[0] + 0.5 * (s.vertices[k] - s.vertices[0]);
        s.values[k] = eval(s.vertices[k]);
      }
    }
    s.sort();
    start = s.vertices.front();
    start_value = s.values.front();
    result.converged = converged;
    if (result.evaluations >= options.max_evals) break;
  }
  result.x = start;
  result.f = start_value;
  return result;
}

}  // namespace sps
