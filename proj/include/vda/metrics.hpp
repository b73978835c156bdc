#pragma once

#include <Eigen/Dense>

namespace vda {

/// ||x_da - x_obs||_2 / ||x_obs||_2. Called "MSE" by convention, but it is a
/// relative L2 error. Throws InvalidArgument when x_obs is zero.
double da_mse(const Eigen::VectorXd& x_da, const Eigen::VectorXd& x_obs);

/// The same ratio for the background state.
double ref_mse(const Eigen::VectorXd& x_b, const Eigen::VectorXd& x_obs);

}  // namespace vda
