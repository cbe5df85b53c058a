#include "sps/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sps {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

double isotropic_from_distance(KernelTag tag, double h, double range) {
  switch (tag) {
    case KernelTag::SquaredExponential:
      return std::exp(-(h * h) / (range * range));
    case KernelTag::Matern32: {
      const double s = kSqrt3 * h / range;
      return (1.0 + s) * std::exp(-s);
    }
    case KernelTag::Exponential:
      return std::exp(-h / range);
    case KernelTag::AnisotropicExponentialDiag:
      break;
  }
  throw std::logic_error("isotropic_from_distance: anisotropic tag");
}

}  // namespace

KernelFamily KernelFamily::isotropic(KernelTag tag) {
  if (tag == KernelTag::AnisotropicExponentialDiag) {
    throw std::invalid_argument("KernelFamily::isotropic: anisotropic tag");
  }
  return KernelFamily{tag, 1};
}

KernelFamily KernelFamily::anisotropic(int dim) {
  if (dim < 1) throw std::invalid_argument("KernelFamily::anisotropic: dim must be >= 1");
  return KernelFamily{KernelTag::AnisotropicExponentialDiag, dim};
}

void KernelFamily::validate(Index dim) const {
  if (is_isotropic() && q != 1) throw std::invalid_argument("isotropic kernel requires q = 1");
  if (!is_isotropic() && q != dim) {
    throw std::invalid_argument("anisotropic kernel requires q equal to the location dimension");
  }
}

std::string_view kernel_token(KernelTag tag) {
  switch (tag) {
    case KernelTag::SquaredExponential: return "se";
    case KernelTag::Matern32: return "matern32";
    case KernelTag::Exponential: return "exponential";
    case KernelTag::AnisotropicExponentialDiag: return "aniso-exp";
  }
  return "unknown";
}

KernelFamily parse_kernel(std::string_view token, Index dim) {
  if (token == "se") return KernelFamily::isotropic(KernelTag::SquaredExponential);
  if (token == "matern32") return KernelFamily::isotropic(KernelTag::Matern32);
  if (token == "exponential") return KernelFamily::isotropic(KernelTag::Exponential);
  if (token == "aniso-exp") return KernelFamily::anisotropic(static_cast<int>(dim));
  throw std::invalid_argument("unknown kernel family '" + std::string(token) + "'");
}

void CovarianceParams::validate() const {
  if (theta_rho.size() != family.q) {
    throw std::invalid_argument("theta_rho length does not match the kernel family");
  }
  for (Index k = 0; k < theta_rho.size(); ++k) {
    if (!(theta_rho[k] > 0.0) || !std::isfinite(theta_rho[k])) {
      throw std::invalid_argument("theta_rho components must be finite and > 0");
    }
  }
  if (!(theta_v >= 0.0) || !std::isfinite(theta_v)) throw std::invalid_argument("theta_v must be >= 0");
  if (!(theta_0 >= 0.0) || !std::isfinite(theta_0)) throw std::invalid_argument("theta_0 must be >= 0");
}

Eigen::VectorXd CovarianceParams::flat() const {
  Eigen::VectorXd out(theta_rho.size() + 2);
  out << theta_rho, theta_v, theta_0;
  return out;
}

LocationSet::LocationSet(Points coords) : coords_(std::move(coords)) {
  const Index n = coords_.rows();
  const Index d = coords_.cols();
  if (n < 1 || d < 1) throw std::invalid_argument("LocationSet: need at least one location and one dimension");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto row_less = [&](Index a, Index b) {
    for (Index k = 0; k < d; ++k) {
      if (coords_(a, k) != coords_(b, k)) return coords_(a, k) < coords_(b, k);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), row_less);
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (!row_less(order[i - 1], order[i])) {
      throw std::invalid_argument("LocationSet: duplicate location at rows " + std::to_string(order[i - 1]) +
                                  " and " + std::to_string(order[i]));
    }
  }
}

LocationSet LocationSet::subset(std::span<const Index> indices) const {
  Points sub(static_cast<Index>(indices.size()), dim());
  for (std::size_t k = 0; k < indices.size(); ++k) sub.row(static_cast<Index>(k)) = coords_.row(indices[k]);
  LocationSet out;
  out.coords_ = std::move(sub);  // rows of a distinct set stay distinct
  return out;
}

double LocationSet::diameter() const {
  double best = 0.0;
  for (Index i = 0; i < size(); ++i) {
    for (Index j = i + 1; j < size(); ++j) best = std::max(best, distance(coords_.row(i), coords_.row(j)));
  }
  return best;
}

double distance(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  double acc = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

double correlation_unchecked(KernelTag tag, const double* x, const double* x2, Index dim,
                             const double* theta_rho) {
  if (tag == KernelTag::AnisotropicExponentialDiag) {
    double quad = 0.0;
    for (Index k = 0; k < dim; ++k) {
      const double diff = x[k] - x2[k];
      quad += theta_rho[k] * diff * diff;
    }
    return std::exp(-quad);
  }
  double acc = 0.0;
  for (Index k = 0; k < dim; ++k) {
    const double diff = x[k] - x2[k];
    acc += diff * diff;
  }
  return isotropic_from_distance(tag, std::sqrt(acc), theta_rho[0]);
}

double correlation(const KernelFamily& family, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                   const Eigen::Ref<const Eigen::RowVectorXd>& x2, const Eigen::VectorXd& theta_rho) {
  if (x.size() != x2.size()) throw std::invalid_argument("correlation: dimension mismatch");
  family.validate(x.size());
  if (theta_rho.size() != family.q) throw std::invalid_argument("correlation: theta_rho length mismatch");
  for (Index k = 0; k < theta_rho.size(); ++k) {
    if (!(theta_rho[k] > 0.0)) throw std::invalid_argument("correlation: theta_rho must be > 0");
  }
  const Eigen::RowVectorXd a = x;
  const Eigen::RowVectorXd b = x2;
  return correlation_unchecked(family.tag, a.data(), b.data(), a.size(), theta_rho.data());
}

Eigen::MatrixXd correlation_matrix(const LocationSet& locs, const KernelFamily& family,
                                   const Eigen::VectorXd& theta_rho) {
  CovarianceParams params{family, theta_rho, 1.0, 0.0};
  family.validate(locs.dim());
  params.validate();
  return covariance_matrix(locs, params);
}

Eigen::MatrixXd covariance_matrix(const LocationSet& locs, const CovarianceParams& params) {
  params.family.validate(locs.dim());
  params.validate();
  const Index n = locs.size();
  const Index d = locs.dim();
  const Points& X = locs.coords();
  Eigen::MatrixXd C(n, n);
  for (Index j = 0; j < n; ++j) {
    C(j, j) = params.theta_v + params.theta_0;
    for (Index i = j + 1; i < n; ++i) {
      const double value =
          params.theta_v * correlation_unchecked(params.family.tag, X.row(i).data(), X.row(j).data(), d,
                                                 params.theta_rho.data());
      C(i, j) = value;
      C(j, i) = value;
    }
  }
  return C;
}

Eigen::MatrixXd cross_covariance(const Points& queries, const LocationSet& locs, const CovarianceParams& params) {
  if (queries.cols() != locs.dim()) throw std::invalid_argument("cross_covariance: dimension mismatch");
  params.family.validate(locs.dim());
  params.validate();
  const Points& X = locs.coords();
  Eigen::MatrixXd K(queries.rows(), locs.size());
  for (Index i = 0; i < locs.size(); ++i) {
    for (Index k = 0; k < queries.rows(); ++k) {
      K(k, i) = params.theta_v * correlation_unchecked(params.family.tag, queries.row(k).data(), X.row(i).data(),
                                                       locs.dim(), params.theta_rho.data());
    }
  }
  return K;
}

}  // namespace sps
