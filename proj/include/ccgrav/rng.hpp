#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "ccgrav/fft.hpp"
#include "ccgrav/field.hpp"
#include "ccgrav/field_ops.hpp"
#include "ccgrav/grid.hpp"
#include "ccgrav/metric.hpp"

namespace ccgrav {

/// Smooth random fields: Gaussian Fourier coefficients with amplitude decay
/// exp(-|k|^2/k0^2) and a hard band limit, reality-symmetrized, normalized so
/// the max-norm is bounded by `amplitude` (sum of coefficient moduli).
///
/// Coefficients are seeded per mode vector, so the same seed and an absolute
/// band limit (cutoff_modes/decay_k0) reproduce the *same continuum field* at
/// every resolution -- which is what the refinement suites compare. With the
/// default fractional band limit the spectrum widens with the grid
/// (cutoff = m/6, k0 = m/6).
struct BandLimitOptions {
    double amplitude = 0.1;
    double cutoff_fraction = 1.0 / 6.0;  // used when cutoff_modes == 0
    int cutoff_modes = 0;                // absolute per-axis |s| bound (0 = fractional)
    double decay_fraction = 1.0 / 6.0;   // used when decay_k0 == 0
    double decay_k0 = 0.0;               // absolute decay scale (0 = fractional)
    bool zero_mean = true;
};

inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 step
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline ScalarField random_band_limited_scalar(const Grid& grid, std::uint64_t seed,
                                              const BandLimitOptions& opt = {}) {
    const int n = grid.dim();
    std::vector<long> cut(static_cast<std::size_t>(n));
    std::vector<double> k0(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        const auto m = static_cast<double>(grid.extent(a));
        cut[static_cast<std::size_t>(a)] =
            opt.cutoff_modes > 0
                ? opt.cutoff_modes
                : std::max<long>(1, static_cast<long>(opt.cutoff_fraction * m));
        // keep the band strictly below Nyquist
        cut[static_cast<std::size_t>(a)] =
            std::min(cut[static_cast<std::size_t>(a)], static_cast<long>(grid.extent(a) / 2 - 1));
        k0[static_cast<std::size_t>(a)] =
            opt.decay_k0 > 0.0 ? opt.decay_k0 : std::max(1.0, opt.decay_fraction * m);
    }

    spectral::cvec spec(grid.num_points(), 0.0);
    std::vector<long> s(static_cast<std::size_t>(n), 0);
    for (std::size_t a = 0; a < static_cast<std::size_t>(n); ++a) s[a] = -cut[a];
    double coeff_sum = 0.0;

    auto mode_index = [&](bool negate) {
        std::size_t p = 0;
        for (int a = 0; a < n; ++a) {
            const long m = static_cast<long>(grid.extent(a));
            long j = (negate ? -s[static_cast<std::size_t>(a)] : s[static_cast<std::size_t>(a)]) % m;
            if (j < 0) j += m;
            p = p * static_cast<std::size_t>(m) + static_cast<std::size_t>(j);
        }
        return p;
    };

    bool done = false;
    while (!done) {
        // canonical representative of {s, -s}: first nonzero entry positive
        int first_nonzero = -1;
        for (int a = 0; a < n; ++a)
            if (s[static_cast<std::size_t>(a)] != 0) {
                first_nonzero = a;
                break;
            }
        const bool is_zero = first_nonzero < 0;
        const bool canonical = is_zero || s[static_cast<std::size_t>(first_nonzero)] > 0;
        if (canonical && !(is_zero && opt.zero_mean)) {
            std::uint64_t h = seed;
            double k2 = 0.0;
            for (int a = 0; a < n; ++a) {
                const long sa = s[static_cast<std::size_t>(a)];
                h = derived_seed(h, static_cast<std::uint64_t>(sa + (1L << 20)));
                k2 += static_cast<double>(sa * sa) /
                      (k0[static_cast<std::size_t>(a)] * k0[static_cast<std::size_t>(a)]);
            }
            std::mt19937_64 gen(h);
            std::normal_distribution<double> normal(0.0, 1.0);
            const double w = std::exp(-k2);
            const double re = w * normal(gen);
            const double im = is_zero ? 0.0 : w * normal(gen);
            spec[mode_index(false)] += std::complex<double>(re, im);
            if (!is_zero) spec[mode_index(true)] += std::complex<double>(re, -im);
            coeff_sum += (is_zero ? 1.0 : 2.0) * std::hypot(re, im);
        }
        // advance the mode counter
        done = true;
        for (int a = n - 1; a >= 0; --a) {
            auto& sa = s[static_cast<std::size_t>(a)];
            if (++sa <= cut[static_cast<std::size_t>(a)]) {
                done = false;
                break;
            }
            sa = -cut[static_cast<std::size_t>(a)];
        }
    }

    if (coeff_sum > 0.0) {
        const double scale = opt.amplitude / coeff_sum;
        for (auto& c : spec) c *= scale;
    }
    // unnormalized inverse DFT synthesizes sum c_k e^{i k.x} exactly, making
    // the sampled values independent of the resolution
    ScalarField out(grid);
    spectral::execute(grid, spec.data(), FFTW_BACKWARD);
    for (std::size_t p = 0; p < grid.num_points(); ++p) out[p] = spec[p].real();
    return out;
}

inline Rank1Field random_band_limited_rank1(const Grid& grid, std::uint64_t seed, Variance var,
                                            const BandLimitOptions& opt = {}) {
    Rank1Field out(grid, var);
    const int n = grid.dim();
    for (int i = 0; i < n; ++i) {
        ScalarField c = random_band_limited_scalar(grid, derived_seed(seed, static_cast<std::uint64_t>(i)), opt);
        for (std::size_t p = 0; p < grid.num_points(); ++p) out.at(p, i) = c[p];
    }
    return out;
}

inline SymTensor2Field random_band_limited_sym2(const Grid& grid, std::uint64_t seed, Variance var,
                                                const BandLimitOptions& opt = {}) {
    SymTensor2Field out(grid, var);
    const int n = grid.dim();
    std::uint64_t salt = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            ScalarField c = random_band_limited_scalar(grid, derived_seed(seed, salt++), opt);
            for (std::size_t p = 0; p < grid.num_points(); ++p) out.at(p, i, j) = c[p];
        }
    return out;
}

/// Conformally flat metric g = exp(2*omega) * delta.
inline MetricField conformal_flat_metric(const ScalarField& omega) {
    const Grid& grid = omega.grid();
    const int n = grid.dim();
    SymTensor2Field g(grid, Variance::covariant);
    for (std::size_t p = 0; p < grid.num_points(); ++p) {
        const double e = std::exp(2.0 * omega[p]);
        for (int i = 0; i < n; ++i) g.at(p, i, i) = e;
    }
    return MetricField(std::move(g));
}

inline MetricField random_conformal_metric(const Grid& grid, std::uint64_t seed,
                                           double omega_amplitude,
                                           const BandLimitOptions& base = {}) {
    BandLimitOptions opt = base;
    opt.amplitude = omega_amplitude;
    return conformal_flat_metric(random_band_limited_scalar(grid, seed, opt));
}

/// Positive conformal factor psi = exp(u) with |u| <= amplitude.
inline ScalarField random_positive_factor(const Grid& grid, std::uint64_t seed, double amplitude,
                                          const BandLimitOptions& base = {}) {
    BandLimitOptions opt = base;
    opt.amplitude = amplitude;
    return exp_field(random_band_limited_scalar(grid, seed, opt));
}

}  // namespace ccgrav
