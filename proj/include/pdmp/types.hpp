#pragma once

#include <Eigen/Dense>

namespace pdmp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace pdmp
