#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace testing {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Small deterministic generator helpers; every property test owns one.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }

    VectorXd vector(Index n, double scale = 1.0) {
        VectorXd v(n);
        for (Index i = 0; i < n; ++i) v(i) = scale * normal();
        return v;
    }

    MatrixXd matrix(Index r, Index c) {
        MatrixXd A(r, c);
        for (Index j = 0; j < c; ++j)
            for (Index i = 0; i < r; ++i) A(i, j) = normal();
        return A;
    }

    // SPD with eigenvalues spread over [1, cond].
    MatrixXd spd(Index n, double cond = 10.0) {
        Eigen::HouseholderQR<MatrixXd> qr(matrix(n, n));
        MatrixXd Q = qr.householderQ();
        VectorXd d(n);
        for (Index i = 0; i < n; ++i) d(i) = std::exp(uniform(0.0, std::log(cond)));
        MatrixXd A = Q * d.asDiagonal() * Q.transpose();
        return 0.5 * (A + A.transpose());
    }
};

// LCP 0 <= x  _|_  G x + c >= 0 by enumeration of all 2^n complementary bases.
inline std::optional<VectorXd> lcp_enumerate(const MatrixXd& G, const VectorXd& c, double tol = 1e-10) {
    const Index n = c.size();
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<Index> set;
        for (Index i = 0; i < n; ++i)
            if (mask & (1u << i)) set.push_back(i);
        VectorXd x = VectorXd::Zero(n);
        if (!set.empty()) {
            MatrixXd A(set.size(), set.size());
            VectorXd b(set.size());
            for (size_t a = 0; a < set.size(); ++a) {
                b(a) = -c(set[a]);
                for (size_t bb = 0; bb < set.size(); ++bb) A(a, bb) = G(set[a], set[bb]);
            }
            VectorXd xs = A.partialPivLu().solve(b);
            for (size_t a = 0; a < set.size(); ++a) x(set[a]) = xs(a);
        }
        VectorXd w = G * x + c;
        if (x.minCoeff() >= -tol && w.minCoeff() >= -tol * (1.0 + c.cwiseAbs().maxCoeff())) return x;
    }
    return std::nullopt;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
