#pragma once

#include <fftw3.h>

#include <atomic>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "ccgrav/errors.hpp"
#include "ccgrav/field.hpp"
#include "ccgrav/grid.hpp"

namespace ccgrav::spectral {

using cvec = std::vector<std::complex<double>>;

namespace detail {

struct PlanKey {
    std::vector<std::size_t> shape;
    int sign;
    bool operator<(const PlanKey& o) const {
        if (sign != o.sign) return sign < o.sign;
        return shape < o.shape;
    }
};

// Cached in-place c2c plans, FFTW_UNALIGNED so they run on any buffer.
// Planning is serialized by the mutex; executing cached plans on distinct
// buffers is thread-safe per FFTW.
class PlanCache {
public:
    fftw_plan get(const Grid& grid, int sign) {
        PlanKey key{grid.shape(), sign};
        std::lock_guard<std::mutex> lock(mu_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<int> dims(grid.shape().begin(), grid.shape().end());
        fftw_complex* scratch = fftw_alloc_complex(grid.num_points());
        fftw_plan p = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), scratch,
                                    scratch, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(scratch);
        if (!p) throw numeric_error("fftw plan creation failed");
        plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mu_;
    std::map<PlanKey, fftw_plan> plans_;
};

inline PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

inline std::atomic<bool>& dealias_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

}  // namespace detail

/// Global 2/3-rule toggle (off by default). When on, differentiation routines
/// low-pass their input spectrum before applying the derivative multiplier,
/// so aliased content from pointwise products never enters a derivative.
inline void set_dealias(bool on) { detail::dealias_flag() = on; }
inline bool dealias_enabled() { return detail::dealias_flag().load(); }

inline void execute(const Grid& grid, std::complex<double>* data, int sign) {
    fftw_plan p = detail::plan_cache().get(grid, sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data),
                     reinterpret_cast<fftw_complex*>(data));
}

/// Forward transform of strided real samples (unnormalized).
inline cvec forward(const Grid& grid, const double* src, std::size_t stride) {
    cvec spec(grid.num_points());
    for (std::size_t p = 0; p < spec.size(); ++p) spec[p] = src[p * stride];
    execute(grid, spec.data(), FFTW_FORWARD);
    return spec;
}

/// Inverse transform; normalizes by 1/npts and keeps the real part.
inline void backward_real(const Grid& grid, cvec spec, double* dst, std::size_t stride) {
    execute(grid, spec.data(), FFTW_BACKWARD);
    const double norm = 1.0 / static_cast<double>(grid.num_points());
    for (std::size_t p = 0; p < spec.size(); ++p) dst[p * stride] = spec[p].real() * norm;
}

/// Physical wavenumber 2*pi*s/L of position j along an axis; the Nyquist
/// mode maps to 0 (standard choice for real data under odd-order operators).
inline double wavenumber(const Grid& grid, int axis, std::size_t j) {
    const std::size_t m = grid.extent(axis);
    if (j == m / 2) return 0.0;
    const long s = Grid::signed_mode(j, m);
    return 2.0 * std::numbers::pi * static_cast<double>(s) / grid.period(axis);
}

/// Visits every spectrum entry with its per-axis mode positions.
template <typename Fn>
void for_each_mode(const Grid& grid, Fn&& fn) {
    const int n = grid.dim();
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    const std::size_t npts = grid.num_points();
    for (std::size_t p = 0; p < npts; ++p) {
        fn(p, std::span<const std::size_t>(idx));
        for (int a = n - 1; a >= 0; --a) {
            auto& ia = idx[static_cast<std::size_t>(a)];
            if (++ia < grid.extent(a)) break;
            ia = 0;
        }
    }
}

/// Zeroes all modes with |s_a| > floor(m_a/3) on any axis (the 2/3 rule).
inline void truncate_top_third(const Grid& grid, cvec& spec) {
    const int n = grid.dim();
    for_each_mode(grid, [&](std::size_t p, std::span<const std::size_t> idx) {
        for (int a = 0; a < n; ++a) {
            const std::size_t m = grid.extent(a);
            const long s = Grid::signed_mode(idx[static_cast<std::size_t>(a)], m);
            if (std::labs(s) > static_cast<long>(m / 3)) {
                spec[p] = 0.0;
                break;
            }
        }
    });
}

/// Multiplies the spectrum by (i * kappa_axis) in place.
inline void apply_partial_multiplier(const Grid& grid, cvec& spec, int axis) {
    for_each_mode(grid, [&](std::size_t p, std::span<const std::size_t> idx) {
        const double k = wavenumber(grid, axis, idx[static_cast<std::size_t>(axis)]);
        spec[p] *= std::complex<double>(0.0, k);
    });
}

inline void require_finite(const ::ccgrav::detail::FieldBase& f, const char* where) {
    const auto& v = f.values();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]))
            throw numeric_error(std::string(where) + ": non-finite value at flat index " +
                                std::to_string(i) + " (point " +
                                std::to_string(i / f.num_components()) + ")");
}

/// Spectral partial derivative of strided real data along one axis.
inline void partial_strided(const Grid& grid, const double* src, std::size_t stride, int axis,
                            double* dst, std::size_t dst_stride) {
    cvec spec = forward(grid, src, stride);
    if (dealias_enabled()) truncate_top_third(grid, spec);
    apply_partial_multiplier(grid, spec, axis);
    backward_real(grid, std::move(spec), dst, dst_stride);
}

/// Fourier-collocation partial derivative; exact on band-limited fields.
inline ScalarField partial(const ScalarField& f, int axis) {
    if (axis < 0 || axis >= f.grid().dim())
        throw validation_error("spectral::partial: axis " + std::to_string(axis) +
                               " out of range for dimension " + std::to_string(f.grid().dim()));
    require_finite(f, "spectral::partial");
    ScalarField out(f.grid());
    partial_strided(f.grid(), f.data(), 1, axis, out.data(), 1);
    return out;
}

/// All n partial derivatives of one strided component, sharing a single
/// forward transform. dst[a] receives d/dx_a with stride dst_stride.
inline void partials_all_axes(const Grid& grid, const double* src, std::size_t stride,
                              const std::vector<double*>& dst, std::size_t dst_stride) {
    cvec spec = forward(grid, src, stride);
    if (dealias_enabled()) truncate_top_third(grid, spec);
    for (int a = 0; a < grid.dim(); ++a) {
        cvec tmp = spec;
        apply_partial_multiplier(grid, tmp, a);
        backward_real(grid, std::move(tmp), dst[static_cast<std::size_t>(a)], dst_stride);
    }
}

}  // namespace ccgrav::spectral
