#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <type_traits>

#include "ccgrav/field.hpp"

namespace ccgrav {

template <typename F>
concept field_type = std::is_base_of_v<detail::FieldBase, std::remove_cvref_t<F>>;

// ---------------------------------------------------------------- norms

template <field_type F>
double linf(const F& f) {
    double m = 0.0;
    for (double x : f.values()) m = std::max(m, std::abs(x));
    return m;
}

/// Relative max-norm of (a - b) against max(1, |b|_inf). All tolerance
/// comparisons in the suite use this.
template <field_type F>
double rel_diff(const F& a, const F& b) {
    require_same_grid(a.grid(), b.grid(), "rel_diff");
    const double scale = std::max(1.0, linf(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m / scale;
}

template <field_type F>
double mean(const F& f) {
    double s = 0.0;
    for (double x : f.values()) s += x;
    return s / static_cast<double>(f.size());
}

// ---------------------------------------------------- elementwise arithmetic

namespace detail {
template <field_type F>
F combine(const F& a, const F& b, double ca, double cb, const char* where) {
    require_same_grid(a.grid(), b.grid(), where);
    F out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values()[i] = ca * a.values()[i] + cb * b.values()[i];
    return out;
}
}  // namespace detail

template <field_type F>
F operator+(const F& a, const F& b) { return detail::combine(a, b, 1.0, 1.0, "operator+"); }
template <field_type F>
F operator-(const F& a, const F& b) { return detail::combine(a, b, 1.0, -1.0, "operator-"); }

template <field_type F>
F scaled(const F& a, double c) {
    F out = a;
    for (auto& x : out.values()) x *= c;
    return out;
}

inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid(), b.grid(), "ScalarField operator*");
    ScalarField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

/// Multiplies every component of a tensor field by a scalar field, pointwise.
template <field_type F>
F scaled_by(const F& a, const ScalarField& s) {
    require_same_grid(a.grid(), s.grid(), "scaled_by");
    F out = a;
    const std::size_t nc = a.num_components();
    for (std::size_t p = 0; p < a.grid().num_points(); ++p)
        for (std::size_t c = 0; c < nc; ++c) out.values()[p * nc + c] = a.values()[p * nc + c] * s[p];
    return out;
}

/// Pointwise power of a positive scalar field. Throws if the base is not
/// strictly positive, naming the first offending point.
inline ScalarField pow_field(const ScalarField& f, double a) {
    ScalarField out = f;
    for (std::size_t p = 0; p < f.size(); ++p) {
        if (!(f[p] > 0.0))
            throw numeric_error("pow_field: nonpositive value " + std::to_string(f[p]) +
                                " at point " + std::to_string(p));
        out[p] = std::pow(f[p], a);
    }
    return out;
}

inline ScalarField exp_field(const ScalarField& f) {
    ScalarField out = f;
    for (auto& x : out.values()) x = std::exp(x);
    return out;
}

inline ScalarField reciprocal(const ScalarField& f) {
    ScalarField out = f;
    for (std::size_t p = 0; p < f.size(); ++p) out[p] = 1.0 / f[p];
    return out;
}

inline void require_variance(const Rank1Field& f, Variance v, const char* where) {
    if (f.variance() != v)
        throw variance_error(std::string(where) + ": expected " + variance_name(v) +
                             " rank-1 field, got " + variance_name(f.variance()));
}
inline void require_variance(const SymTensor2Field& f, Variance v, const char* where) {
    if (f.variance() != v)
        throw variance_error(std::string(where) + ": expected " + variance_name(v) +
                             " rank-2 field, got " + variance_name(f.variance()));
}

}  // namespace ccgrav
