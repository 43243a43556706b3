#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace giht {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Design matrices are stored one sample per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised for malformed inputs: bad dimensions, out-of-range budgets, invalid layouts.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An exhaustive oracle was asked to enumerate more groups than its guard allows.
class GuardError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// The requested object does not exist (uncoverable support, impossible synthetic recipe).
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A solver produced a non-finite objective or gradient.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, int iteration)
        : std::runtime_error(what), iteration_(iteration) {}

    [[nodiscard]] int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

} // namespace giht
