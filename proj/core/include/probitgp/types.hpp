#pragma once

#include <Eigen/Dense>

namespace probitgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace probitgp
