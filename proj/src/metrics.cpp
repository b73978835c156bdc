#include "vda/metrics.hpp"

#include "vda/error.hpp"

namespace vda {

double da_mse(const Eigen::VectorXd& x_da, const Eigen::VectorXd& x_obs) {
  require(x_da.size() == x_obs.size(), ErrorCode::ShapeMismatch, "da_mse: size mismatch");
  const double denom = x_obs.norm();
  require(denom > 0.0, ErrorCode::InvalidArgument, "da_mse: observed state has zero norm");
  return (x_da - x_obs).norm() / denom;
}

double ref_mse(const Eigen::VectorXd& x_b, const Eigen::VectorXd& x_obs) { return da_mse(x_b, x_obs); }

}  // namespace vda
