// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_TYPES_HPP
#define PFCRACK_TYPES_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace pfcrack {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MeshError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

/// Raised when the path-following control equation has no admissible root.
class ControlEquationError : public SolverError {
public:
    using SolverError::SolverError;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Symmetric 2x2 tensor stored by its independent components (xy is the tensor,
/// not the engineering, shear component).
struct SymTensor2 {
    double xx = 0.0;
    double yy = 0.0;
    double xy = 0.0;

    SymTensor2 operator*(double s) const { return {xx * s, yy * s, xy * s}; }
    SymTensor2 operator-(const SymTensor2& o) const { return {xx - o.xx, yy - o.yy, xy - o.xy}; }
    SymTensor2 operator+(const SymTensor2& o) const { return {xx + o.xx, yy + o.yy, xy + o.xy}; }

    double max_eigenvalue() const
    {
        const double mean = 0.5 * (xx + yy);
        const double half = 0.5 * (xx - yy);
        return mean + std::sqrt(half * half + xy * xy);
    }
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw Error(message);
    }
}

} // namespace pfcrack

#endif
