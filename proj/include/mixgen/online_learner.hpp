#pragma once

#include "mixgen/hypothesis.hpp"

#include <Eigen/Dense>

#include <cstddef>

namespace mixgen {

/// Delayed-feedback online learner over the hypothesis simplex.
///
/// Protocol, rounds numbered from 1: before act(t) is called the learner has
/// received feedback(s, c_s) for exactly s = 1..t-d, in increasing order,
/// where d is the game's delay.
class OnlineLearner {
public:
    virtual ~OnlineLearner() = default;

    /// Return to the state before any feedback.
    virtual void reset() = 0;
    /// Distribution played at `round`.
    virtual PosteriorDist act(std::size_t round) = 0;
    /// Full cost vector of `round`.
    virtual void feedback(std::size_t round, const Eigen::VectorXd& cost) = 0;
    virtual std::size_t size() const = 0;
};

}  // namespace mixgen
