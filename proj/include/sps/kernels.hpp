#ifndef SPS_KERNELS_HPP
#define SPS_KERNELS_HPP

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sps {

using Index = Eigen::Index;
/// Row-major point storage: row i is the i-th location.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class KernelTag { SquaredExponential, Matern32, Exponential, AnisotropicExponentialDiag };

/// A covariance family and the length q of its correlation parameter vector.
struct KernelFamily {
  KernelTag tag = KernelTag::SquaredExponential;
  int q = 1;

  static KernelFamily isotropic(KernelTag tag);
  static KernelFamily anisotropic(int dim);

  [[nodiscard]] bool is_isotropic() const { return tag != KernelTag::AnisotropicExponentialDiag; }
  /// Throws if q is inconsistent with the tag (q = 1 isotropic, q = dim anisotropic).
  void validate(Index dim) const;

  friend bool operator==(const KernelFamily&, const KernelFamily&) = default;
};

/// CLI tokens: se, matern32, exponential, aniso-exp.
std::string_view kernel_token(KernelTag tag);
KernelFamily parse_kernel(std::string_view token, Index dim);

/// theta = (theta_rho, theta_v, theta_0).
struct CovarianceParams {
  KernelFamily family;
  Eigen::VectorXd theta_rho;
  double theta_v = 1.0;
  double theta_0 = 0.0;

  void validate() const;
  /// Flattened (theta_rho..., theta_v, theta_0).
  [[nodiscard]] Eigen::VectorXd flat() const;
};

/// n pairwise distinct locations in R^d.
class LocationSet {
 public:
  LocationSet() = default;
  /// Throws std::invalid_argument on duplicate rows (exact equality) or an empty set.
  explicit LocationSet(Points coords);

  [[nodiscard]] const Points& coords() const { return coords_; }
  [[nodiscard]] Index size() const { return coords_.rows(); }
  [[nodiscard]] Index dim() const { return coords_.cols(); }
  [[nodiscard]] auto point(Index i) const { return coords_.row(i); }

  [[nodiscard]] LocationSet subset(std::span<const Index> indices) const;
  /// Largest pairwise Euclidean distance (0 for a single point).
  [[nodiscard]] double diameter() const;

 private:
  Points coords_;
};

double distance(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b);

/// r(x, x2; theta_rho) in (0, 1]; exactly 1 when x == x2.
double correlation(const KernelFamily& family, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                   const Eigen::Ref<const Eigen::RowVectorXd>& x2, const Eigen::VectorXd& theta_rho);

/// Unchecked hot-path evaluation; parameters must already be validated.
double correlation_unchecked(KernelTag tag, const double* x, const double* x2, Index dim,
                             const double* theta_rho);

/// Correlation matrix R(theta_rho) over the locations (unit diagonal).
Eigen::MatrixXd correlation_matrix(const LocationSet& locs, const KernelFamily& family,
                                   const Eigen::VectorXd& theta_rho);

/// C(theta) = theta_v R(theta_rho) + theta_0 I.
Eigen::MatrixXd covariance_matrix(const LocationSet& locs, const CovarianceParams& params);

/// m x n matrix of theta_v r(query_k, x_i) (no nugget).
Eigen::MatrixXd cross_covariance(const Points& queries, const LocationSet& locs, const CovarianceParams& params);

}  // namespace sps

#endif  // SPS_KERNELS_HPP
