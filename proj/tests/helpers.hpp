#pragma once

#include "mixgen/hypothesis.hpp"
#include "mixgen/process.hpp"
#include "mixgen/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace testing {

inline Eigen::MatrixXd two_state(double p, double q) {
    Eigen::MatrixXd t(2, 2);
    t << 1.0 - p, p, q, 1.0 - q;
    return t;
}

inline Eigen::MatrixXd indicator_losses() {
    Eigen::MatrixXd l(2, 2);
    l << 1.0, 0.0, 0.0, 1.0;
    return l;
}

/// Random row-stochastic matrix with strictly positive entries.
inline Eigen::MatrixXd random_stochastic(std::size_t m, mixgen::CounterRng& rng) {
    Eigen::MatrixXd t(static_cast<Eigen::Index>(m), Eigen::Index(m));
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = 0.05 + rng.uniform();
        t.row(i) /= t.row(i).sum();
    }
    return t;
}

inline Eigen::MatrixXd random_losses(std::size_t w, std::size_t a, mixgen::CounterRng& rng) {
    Eigen::MatrixXd l(static_cast<Eigen::Index>(w), Eigen::Index(a));
    for (Eigen::Index i = 0; i < l.rows(); ++i)
        for (Eigen::Index j = 0; j < l.cols(); ++j) l(i, j) = rng.uniform();
    return l;
}

inline Eigen::VectorXd random_costs(std::size_t w, mixgen::CounterRng& rng) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(w));
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = 2.0 * rng.uniform() - 1.0;
    return c;
}

}  // namespace testing
