/// @file core.hpp
/// @brief Scalar aliases, basis tags and error types shared by every module.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qlab {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Electronic representation of a wavefunction or density field.
enum class Basis { diabatic, adiabatic };

inline std::string to_string(Basis b) { return b == Basis::diabatic ? "diabatic" : "adiabatic"; }

inline Basis basis_from_string(const std::string& s)
{
    if (s == "diabatic") return Basis::diabatic;
    if (s == "adiabatic") return Basis::adiabatic;
    throw std::invalid_argument("unknown basis tag: " + s);
}

/// Rejected input (bad parameters, wrong basis, grid mismatch).
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A wavepacket came too close to the edge of the periodic box.
struct BoundaryViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical corruption or non-convergence (trace drift, imaginary trace, ...).
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw InvalidInput(what);
}

inline double sqr(double x) { return x * x; }

/// Normal density N(x; x0; sigma).
inline double normal_pdf(double x, double x0, double sigma)
{
    const double z = (x - x0) / sigma;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * pi) * sigma);
}

} // namespace qlab
