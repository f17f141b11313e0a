#pragma once

#include <Eigen/Dense>

namespace rombo {

/// Mass-normalized mode shapes (columns) with ascending angular frequencies.
struct ModalBasis {
    Eigen::MatrixXd Phi;
    Eigen::VectorXd omegas;  // rad/s

    Eigen::Index size() const { return omegas.size(); }
};

}  // namespace rombo
