// core.hpp: shared scalar/matrix aliases, error types and warning carrier.

#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ionlc {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Bad caller input: dimensions, labels, non-positive physical scalars.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Operands that live on different composite spaces.
class LayoutMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Integrator or solver could not meet its contract.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what, double at_time = 0.0)
        : std::runtime_error(what), time_(at_time) {}
    double time() const { return time_; }

private:
    double time_;
};

// A value plus non-fatal diagnostics (truncation overflow, regime violations).
template <class T>
struct Checked {
    T value;
    std::vector<std::string> warnings;

    bool clean() const { return warnings.empty(); }
};

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline void require(bool cond, const std::string& message) {
    if (!cond) throw InvalidArgument(message);
}

}  // namespace ionlc
