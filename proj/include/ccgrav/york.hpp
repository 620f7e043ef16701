#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ccgrav/fft.hpp"
#include "ccgrav/geometry.hpp"

namespace ccgrav {

// York split h = sigma + cko_g(W) of a trace-free symmetric 2-tensor: W
// solves the elliptic vector equation div_g(cko_g W) = div_g h, then
// sigma := h - cko_g W is transverse-traceless.
//
// On the torus cko_g has a nontrivial kernel (the translations the compact
// no-conformal-Killing-field hypothesis excludes), so uniqueness is restored
// by the zero-mean gauge: constant one-form components are projected out of
// the right-hand side and of every Krylov iterate.

struct YorkOptions {
    double tol = 1e-10;
    int max_iter = 500;
    bool strict_trace = false;   // error out instead of removing a g-trace
    double trace_tol = 1e-10;
};

struct YorkSplit {
    SymTensor2Field sigma;
    OneFormField w;
    int iterations = 0;
    double final_residual = 0.0;   // CG residual at exit, relative
    double kernel_norm = 0.0;      // mean (kernel-direction) content of the RHS
    double removed_trace = 0.0;    // relative norm of the g-trace removed from h
};

/// g-weighted L2 inner product of covariant symmetric 2-tensors,
/// sum_x sqrt(det g) dV g^ia g^jb A_ij B_ab.
inline double weighted_inner_sym2(const MetricField& g, const SymTensor2Field& a,
                                  const SymTensor2Field& b) {
    require_variance(a, Variance::covariant, "weighted_inner_sym2");
    require_variance(b, Variance::covariant, "weighted_inner_sym2");
    const int n = g.dim();
    const double dv = g.grid().cell_volume();
    double s = 0.0;
    for (std::size_t p = 0; p < g.grid().num_points(); ++p) {
        double t = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int ia = 0; ia < n; ++ia)
                    for (int jb = 0; jb < n; ++jb)
                        t += g.up(p, i, ia) * g.up(p, j, jb) * a.at(p, i, j) * b.at(p, ia, jb);
        s += g.sqrt_det()[p] * dv * t;
    }
    return s;
}

namespace detail {

// per-component zero-mean projection (the discrete kernel gauge)
inline void remove_component_means(OneFormField& u) {
    const int n = u.grid().dim();
    const std::size_t npts = u.grid().num_points();
    for (int i = 0; i < n; ++i) {
        double m = 0.0;
        for (std::size_t p = 0; p < npts; ++p) m += u.at(p, i);
        m /= static_cast<double>(npts);
        for (std::size_t p = 0; p < npts; ++p) u.at(p, i) -= m;
    }
}

/// Zeroes every mode annihilated by the spectral derivative on all axes
/// (each axis index 0 or Nyquist). These "corner" modes are the full discrete
/// null space of flat-metric differential operators on rank-1 fields.
inline void remove_flat_null_modes(OneFormField& u) {
    const Grid& grid = u.grid();
    const int n = grid.dim();
    for (int c = 0; c < n; ++c) {
        spectral::cvec spec = spectral::forward(grid, u.data() + c, static_cast<std::size_t>(n));
        spectral::for_each_mode(grid, [&](std::size_t p, std::span<const std::size_t> idx) {
            for (int a = 0; a < n; ++a) {
                const std::size_t j = idx[static_cast<std::size_t>(a)];
                if (j != 0 && j != grid.extent(a) / 2) return;
            }
            spec[p] = 0.0;
        });
        spectral::backward_real(grid, std::move(spec), u.data() + c, static_cast<std::size_t>(n));
    }
}

inline double plain_dot(const OneFormField& a, const OneFormField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
    return s;
}

// (G u)_i = sqrt(det g) dV g^ij u_j : makes G o (div cko) plainly symmetric
inline OneFormField apply_mass(const MetricField& g, const OneFormField& u) {
    const int n = g.dim();
    const double dv = g.grid().cell_volume();
    OneFormField out(g.grid(), Variance::covariant);
    for (std::size_t p = 0; p < g.grid().num_points(); ++p) {
        const double w = g.sqrt_det()[p] * dv;
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += g.up(p, i, j) * u.at(p, j);
            out.at(p, i) = w * s;
        }
    }
    return out;
}

/// Preconditioner wavenumber: like spectral::wavenumber but nonzero at the
/// Nyquist mode, so the flat inverse stays definite off k = 0.
inline double precond_wavenumber(const Grid& grid, int axis, std::size_t j) {
    const long s = Grid::signed_mode(j, grid.extent(axis));
    return 2.0 * std::numbers::pi * static_cast<double>(s) / grid.period(axis);
}

/// Exact inverse of the flat-metric div(cko .) operator on nonzero modes:
/// symbol K I + (1 - 2/n) kappa kappa^T with K = |kappa|^2.
inline OneFormField flat_vector_inverse(const Grid& grid, const OneFormField& r) {
    const int n = grid.dim();
    const double beta = 1.0 - 2.0 / static_cast<double>(n);
    std::vector<spectral::cvec> spec;
    spec.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        spec.push_back(spectral::forward(grid, r.data() + i, static_cast<std::size_t>(n)));

    std::vector<double> kap(static_cast<std::size_t>(n));
    spectral::for_each_mode(grid, [&](std::size_t p, std::span<const std::size_t> idx) {
        double K = 0.0;
        for (int a = 0; a < n; ++a) {
            kap[static_cast<std::size_t>(a)] = precond_wavenumber(grid, a, idx[static_cast<std::size_t>(a)]);
            K += kap[static_cast<std::size_t>(a)] * kap[static_cast<std::size_t>(a)];
        }
        if (K == 0.0) {
            for (int i = 0; i < n; ++i) spec[static_cast<std::size_t>(i)][p] = 0.0;
            return;
        }
        std::complex<double> kr = 0.0;
        for (int i = 0; i < n; ++i) kr += kap[static_cast<std::size_t>(i)] * spec[static_cast<std::size_t>(i)][p];
        const double c = beta / (K * (1.0 + beta));
        for (int i = 0; i < n; ++i)
            spec[static_cast<std::size_t>(i)][p] =
                (spec[static_cast<std::size_t>(i)][p] - c * kr * kap[static_cast<std::size_t>(i)]) / K;
    });

    OneFormField out(grid, Variance::covariant);
    for (int i = 0; i < n; ++i)
        spectral::backward_real(grid, std::move(spec[static_cast<std::size_t>(i)]), out.data() + i,
                                static_cast<std::size_t>(n));
    return out;
}

}  // namespace detail

/// Fourier-space transverse-traceless projector for the flat metric. Output
/// is divergence- and trace-free to machine precision and the map is
/// idempotent; modes whose derivative multiplier vanishes on every axis keep
/// only their trace-free part (constants are genuinely TT on the torus).
inline SymTensor2Field tt_project_flat(const SymTensor2Field& h) {
    require_variance(h, Variance::covariant, "tt_project_flat");
    const Grid& grid = h.grid();
    const int n = grid.dim();
    const std::size_t nc = sym2_count(n);

    std::vector<spectral::cvec> spec;
    spec.reserve(nc);
    for (std::size_t c = 0; c < nc; ++c) spec.push_back(spectral::forward(grid, h.data() + c, nc));

    std::vector<double> kap(static_cast<std::size_t>(n));
    std::vector<std::complex<double>> hm(static_cast<std::size_t>(n * n)),
        tm(static_cast<std::size_t>(n * n));
    spectral::for_each_mode(grid, [&](std::size_t p, std::span<const std::size_t> idx) {
        double K = 0.0;
        for (int a = 0; a < n; ++a) {
            kap[static_cast<std::size_t>(a)] = spectral::wavenumber(grid, a, idx[static_cast<std::size_t>(a)]);
            K += kap[static_cast<std::size_t>(a)] * kap[static_cast<std::size_t>(a)];
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                hm[static_cast<std::size_t>(i * n + j)] = spec[sym2_index(i, j, n)][p];

        if (K == 0.0) {
            // flat-divergence-free automatically; remove the trace part
            std::complex<double> tr = 0.0;
            for (int i = 0; i < n; ++i) tr += hm[static_cast<std::size_t>(i * n + i)];
            tr /= static_cast<double>(n);
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j)
                    spec[sym2_index(i, j, n)][p] =
                        hm[static_cast<std::size_t>(i * n + j)] -
                        (i == j ? tr : std::complex<double>(0.0));
            return;
        }
        // transverse projector P = I - khat khat^T; TT part = P h P - tr(P h)/(n-1) P
        auto P = [&](int i, int j) {
            return (i == j ? 1.0 : 0.0) - kap[static_cast<std::size_t>(i)] * kap[static_cast<std::size_t>(j)] / K;
        };
        std::complex<double> trPh = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                std::complex<double> s = 0.0;
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        s += P(i, a) * hm[static_cast<std::size_t>(a * n + b)] * P(b, j);
                tm[static_cast<std::size_t>(i * n + j)] = s;
                if (i == j) trPh += s;  // tr(PhP) = tr(Ph)
            }
        trPh /= static_cast<double>(n - 1);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                spec[sym2_index(i, j, n)][p] = tm[static_cast<std::size_t>(i * n + j)] - trPh * P(i, j);
    });

    SymTensor2Field out(grid, Variance::covariant);
    for (std::size_t c = 0; c < nc; ++c)
        spectral::backward_real(grid, std::move(spec[c]), out.data() + c, nc);
    return out;
}

inline YorkSplit york_decompose(const MetricField& g, const SymTensor2Field& h,
                                const YorkOptions& opt = {},
                                const OneFormField* initial_guess = nullptr) {
    require_same_grid(g.grid(), h.grid(), "york_decompose");
    require_variance(h, Variance::covariant, "york_decompose");
    const Grid& grid = g.grid();

    // enforce trace-freeness (remove and report, or reject in strict mode)
    const ScalarField tr = trace(g, h);
    const double trace_norm = linf(tr) / std::max(1.0, linf(h));
    if (opt.strict_trace && trace_norm > opt.trace_tol)
        throw validation_error("york_decompose: input g-trace " + std::to_string(trace_norm) +
                               " exceeds " + std::to_string(opt.trace_tol) + " (strict mode)");
    const SymTensor2Field h0 = detrace(g, h);

    const ChristoffelField gam = christoffel(g);
    auto apply_op = [&](const OneFormField& wf) {
        OneFormField q = detail::apply_mass(g, divergence(g, conformal_killing_op(g, wf, gam), gam));
        detail::remove_component_means(q);
        return q;
    };

    OneFormField rhs = detail::apply_mass(g, divergence(g, h0, gam));
    OneFormField rhs_proj = rhs;
    detail::remove_component_means(rhs_proj);
    const double kernel_norm = linf(rhs - rhs_proj);

    // PCG on the plainly-symmetric operator G(div(cko .)), zero-mean gauge
    OneFormField w(grid, Variance::covariant);
    OneFormField r = rhs_proj;
    if (initial_guess) {
        require_same_grid(grid, initial_guess->grid(), "york_decompose[initial_guess]");
        w = *initial_guess;
        detail::remove_component_means(w);
        const OneFormField aw = apply_op(w);
        for (std::size_t i = 0; i < r.size(); ++i) r.values()[i] -= aw.values()[i];
    }
    const double r0 = std::sqrt(detail::plain_dot(r, r));
    const double target = opt.tol * std::max(1.0, r0);
    std::vector<double> history;
    int iters = 0;
    double rnorm = r0;
    if (rnorm > target) {
        OneFormField z = detail::flat_vector_inverse(grid, r);
        detail::remove_component_means(z);
        OneFormField p = z;
        double rz = detail::plain_dot(r, z);
        for (; iters < opt.max_iter; ++iters) {
            const OneFormField q = apply_op(p);
            const double pq = detail::plain_dot(p, q);
            if (!(pq > 0.0))
                throw solve_error("york_decompose: preconditioned operator lost positivity (p.Ap = " +
                                      std::to_string(pq) + ")",
                                  history);
            const double alpha = rz / pq;
            for (std::size_t i = 0; i < w.size(); ++i) w.values()[i] += alpha * p.values()[i];
            for (std::size_t i = 0; i < r.size(); ++i) r.values()[i] -= alpha * q.values()[i];
            rnorm = std::sqrt(detail::plain_dot(r, r));
            history.push_back(rnorm);
            if (rnorm <= target) {
                ++iters;
                break;
            }
            z = detail::flat_vector_inverse(grid, r);
            detail::remove_component_means(z);
            const double rz_new = detail::plain_dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < p.size(); ++i)
                p.values()[i] = z.values()[i] + beta * p.values()[i];
        }
        if (rnorm > target)
            throw solve_error("york_decompose: no convergence after " +
                                  std::to_string(opt.max_iter) + " iterations (residual " +
                                  std::to_string(rnorm) + ", target " + std::to_string(target) + ")",
                              history);
    }

    YorkSplit out{h0 - conformal_killing_op(g, w, gam), std::move(w), iters,
                  rnorm / std::max(1.0, r0), kernel_norm, trace_norm};
    return out;
}

inline YorkSplit york_decompose(const MetricField& g, const SymTensor2Field& h, double tol,
                                int max_iter) {
    YorkOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    return york_decompose(g, h, opt);
}

}  // namespace ccgrav
