#pragma once

// Shared vocabulary for the quasi-stationary Monte Carlo library: the point
// type, axis-aligned boxes used for searches and quadrature, and the error
// taxonomy thrown by the numerical layers.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsmc {

using Vec = std::vector<double>;

// A field/drift evaluation produced a non-finite value or was handed an
// invalid argument.
struct evaluation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A user-visible configuration (scheme selection, grid, JSON document, ...)
// is inconsistent.
struct configuration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Building a derived object (e.g. a killing rate) failed validation.
struct construction_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A documented precondition was violated at runtime (negative rate, ...).
struct contract_violation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative numerical routine failed to converge.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A formula was invoked outside its domain of validity (e.g. a bound that
// requires a finite reference measure).
struct inapplicability_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A fit window contains unusable data (too few points, nonpositive values).
struct window_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model parameters violate a structural requirement.
struct parameter_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Axis-aligned box  [lo_1,hi_1] x ... x [lo_d,hi_d].
struct Box {
    Vec lo;
    Vec hi;

    Box() = default;
    Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (lo.size() != hi.size() || lo.empty())
            throw configuration_error("Box: lo/hi dimension mismatch or empty");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i]))
                throw configuration_error("Box: requires lo < hi on every axis");
    }
    Box(double lo1, double hi1) : Box(Vec{lo1}, Vec{hi1}) {}

    int dim() const { return static_cast<int>(lo.size()); }

    // Box scaled by `factor` about its center, axis by axis.
    Box enlarged(double factor) const {
        Box out = *this;
        for (std::size_t i = 0; i < lo.size(); ++i) {
            const double c = 0.5 * (lo[i] + hi[i]);
            const double r = 0.5 * (hi[i] - lo[i]) * factor;
            out.lo[i] = c - r;
            out.hi[i] = c + r;
        }
        return out;
    }
};

inline std::string format_point(const Vec& y) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < y.size(); ++i)
        os << (i ? ", " : "") << y[i];
    os << ")";
    return os.str();
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace qsmc
