#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace mastl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Small stack-allocated buffers used when evaluating predicates.
inline constexpr int kMaxPredicateDim = 16;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxPredicateDim, 1>;

// =======================================================================
// Errors
// =======================================================================

// Malformed arguments: dimension mismatch, empty inputs, invalid configs.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Trajectory too short for the formula horizon at the requested time.
class LengthError : public std::length_error {
public:
    using std::length_error::length_error;
};

// Ill-formed STL specification (bad cliques, unsupported negation, ...).
class SpecificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Syntax errors in formula sources and scenario files. Line and column are 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line, int column)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ", column "
                             + std::to_string(column) + ")"),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

} // namespace mastl
