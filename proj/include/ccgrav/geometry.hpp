#pragma once

#include <cstddef>
#include <vector>

#include "ccgrav/errors.hpp"
#include "ccgrav/fft.hpp"
#include "ccgrav/field.hpp"
#include "ccgrav/field_ops.hpp"
#include "ccgrav/grid.hpp"
#include "ccgrav/metric.hpp"
#include "ccgrav/parallel.hpp"

namespace ccgrav {

// Sign and index conventions used throughout (fixed; audited by the
// conformally flat closed forms in the test suite):
//   Gamma^k_ij  = (1/2) g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
//   R^a_bcd     = d_c Gamma^a_db - d_d Gamma^a_cb
//                 + Gamma^a_cm Gamma^m_db - Gamma^a_dm Gamma^m_cb
//   R_abcd      = g_ae R^e_bcd,   Ric_bd = g^ac R_abcd,   R = g^bd Ric_bd
//   (div_g h)_i = - g^kl nabla_l h_ki        <- the minus sign is load-bearing
//   (cko_g W)_ij = nabla_i W_j + nabla_j W_i - (2/n) nabla^k W_k g_ij

/// Levi-Civita connection coefficients, full n^3 per point.
class ChristoffelField {
public:
    explicit ChristoffelField(Grid grid)
        : grid_(std::move(grid)), n_(grid_.dim()),
          v_(grid_.num_points() * static_cast<std::size_t>(n_ * n_ * n_), 0.0) {}
    const Grid& grid() const { return grid_; }
    double& at(std::size_t p, int k, int i, int j) {
        return v_[p * static_cast<std::size_t>(n_ * n_ * n_) +
                  static_cast<std::size_t>((k * n_ + i) * n_ + j)];
    }
    double at(std::size_t p, int k, int i, int j) const {
        return v_[p * static_cast<std::size_t>(n_ * n_ * n_) +
                  static_cast<std::size_t>((k * n_ + i) * n_ + j)];
    }
    const std::vector<double>& values() const { return v_; }
    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

private:
    Grid grid_;
    int n_;
    std::vector<double> v_;
};

namespace detail {

/// Partial derivatives of every component of a multi-component field.
/// Layout: d[(p*n + a)*ncomp + c] = d_a (comp c) at point p.
inline std::vector<double> all_partials(const Grid& grid, const double* base, std::size_t ncomp) {
    const int n = grid.dim();
    const std::size_t npts = grid.num_points();
    std::vector<double> d(npts * static_cast<std::size_t>(n) * ncomp);
    std::vector<double*> dst(static_cast<std::size_t>(n));
    for (std::size_t c = 0; c < ncomp; ++c) {
        for (int a = 0; a < n; ++a)
            dst[static_cast<std::size_t>(a)] = d.data() + static_cast<std::size_t>(a) * ncomp + c;
        spectral::partials_all_axes(grid, base + c, ncomp, dst,
                                    static_cast<std::size_t>(n) * ncomp);
    }
    return d;
}

}  // namespace detail

inline ChristoffelField christoffel(const MetricField& g) {
    const Grid& grid = g.grid();
    const int n = grid.dim();
    const std::size_t nc = sym2_count(n);
    // dg[(p*n + a)*nc + c] = d_a g_c
    const std::vector<double> dg = detail::all_partials(grid, g.components().data(), nc);

    ChristoffelField gam(grid);
    parallel_for(grid.num_points(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double* dgp = dg.data() + p * static_cast<std::size_t>(n) * nc;
            auto dgv = [&](int a, int i, int j) {
                return dgp[static_cast<std::size_t>(a) * nc + sym2_index(i, j, n)];
            };
            for (int k = 0; k < n; ++k)
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j) {
                        double s = 0.0;
                        for (int l = 0; l < n; ++l)
                            s += g.up(p, k, l) * (dgv(i, j, l) + dgv(j, i, l) - dgv(l, i, j));
                        gam.at(p, k, i, j) = 0.5 * s;
                        gam.at(p, k, j, i) = 0.5 * s;
                    }
        }
    });
    return gam;
}

struct CurvatureBundle {
    Riemann4Field riemann;
    SymTensor2Field ricci;
    ScalarField scalar;
};

/// Riemann, Ricci and scalar curvature in one pass; Ricci and the scalar are
/// contractions of the stored (lowered) Riemann tensor.
inline CurvatureBundle full_curvature(const MetricField& g, const ChristoffelField& gam) {
    const Grid& grid = g.grid();
    const int n = grid.dim();
    const auto nn = static_cast<std::size_t>(n);
    const std::size_t nc3 = nn * nn * nn;
    // dG[(p*n + a)*n^3 + comp] = d_a Gamma_comp
    const std::vector<double> dG = detail::all_partials(grid, gam.data(), nc3);

    CurvatureBundle out{Riemann4Field(grid), SymTensor2Field(grid, Variance::covariant),
                        ScalarField(grid)};
    parallel_for(grid.num_points(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> rup(nn * nn * nn * nn);  // R^a_bcd scratch
        for (std::size_t p = lo; p < hi; ++p) {
            const double* dGp = dG.data() + p * nn * nc3;
            auto dgam = [&](int a, int k, int i, int j) {
                return dGp[static_cast<std::size_t>(a) * nc3 +
                           static_cast<std::size_t>((k * n + i) * n + j)];
            };
            auto R = [&](int a, int b, int c, int d) -> double& {
                return rup[((static_cast<std::size_t>(a) * nn + static_cast<std::size_t>(b)) * nn +
                            static_cast<std::size_t>(c)) * nn +
                           static_cast<std::size_t>(d)];
            };
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c)
                        for (int d = 0; d < n; ++d) {
                            double s = dgam(c, a, d, b) - dgam(d, a, c, b);
                            for (int m = 0; m < n; ++m)
                                s += gam.at(p, a, c, m) * gam.at(p, m, d, b) -
                                     gam.at(p, a, d, m) * gam.at(p, m, c, b);
                            R(a, b, c, d) = s;
                        }
            // lower the first index into canonical packed storage
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b)
                    for (int c = 0; c < n; ++c)
                        for (int d = c + 1; d < n; ++d) {
                            if (pair_index(a, b, n) > pair_index(c, d, n)) continue;
                            double s = 0.0;
                            for (int e = 0; e < n; ++e) s += g.lo(p, a, e) * R(e, b, c, d);
                            out.riemann.canonical(p, a, b, c, d) = s;
                        }
            double scal = 0.0;
            for (int b = 0; b < n; ++b)
                for (int d = b; d < n; ++d) {
                    double s = 0.0;
                    for (int a = 0; a < n; ++a)
                        for (int c = 0; c < n; ++c)
                            s += g.up(p, a, c) * out.riemann.get(p, a, b, c, d);
                    out.ricci.at(p, b, d) = s;
                }
            for (int b = 0; b < n; ++b)
                for (int d = 0; d < n; ++d) scal += g.up(p, b, d) * out.ricci.at(p, b, d);
            out.scalar[p] = scal;
        }
    });
    return out;
}

inline CurvatureBundle full_curvature(const MetricField& g) {
    return full_curvature(g, christoffel(g));
}

inline Riemann4Field riemann(const MetricField& g) { return full_curvature(g).riemann; }
inline SymTensor2Field ricci(const MetricField& g) { return full_curvature(g).ricci; }
inline ScalarField scalar_curvature(const MetricField& g) { return full_curvature(g).scalar; }

// ------------------------------------------------------------ index algebra

inline ScalarField trace(const MetricField& g, const SymTensor2Field& h) {
    require_same_grid(g.grid(), h.grid(), "trace");
    const int n = g.dim();
    ScalarField out(g.grid());
    const bool cov = h.variance() == Variance::covariant;
    for (std::size_t p = 0; p < g.grid().num_points(); ++p) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                s += (cov ? g.up(p, i, j) : g.lo(p, i, j)) * h.at(p, i, j);
        out[p] = s;
    }
    return out;
}

/// h - (tr_g h / n) g for covariant h (pointwise, no differentiation).
inline SymTensor2Field detrace(const MetricField& g, const SymTensor2Field& h) {
    require_variance(h, Variance::covariant, "detrace");
    const ScalarField tr = trace(g, h);
    const int n = g.dim();
    SymTensor2Field out = h;
    for (std::size_t p = 0; p < g.grid().num_points(); ++p) {
        const double t = tr[p] / static_cast<double>(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) out.at(p, i, j) = h.at(p, i, j) - t * g.lo(p, i, j);
    }
    return out;
}

inline Rank1Field raise_index(const MetricField& g, const Rank1Field& w) {
    require_same_grid(g.grid(), w.grid(), "raise_index");
    require_variance(w, Variance::covariant, "raise_index");
    Rank1Field out(g.grid(), Variance::contravariant);
    const int n = g.dim();
    for (std::size_t p = 0; p < g.grid().num_points(); ++p)
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += g.up(p, i, j) * w.at(p, j);
            out.at(p, i) = s;
        }
    return out;
}

inline Rank1Field lower_index(const MetricField& g, const Rank1Field& v) {
    require_same_grid(g.grid(), v.grid(), "lower_index");
    require_variance(v, Variance::contravariant, "lower_index");
    Rank1Field out(g.grid(), Variance::covariant);
    const int n = g.dim();
    for (std::size_t p = 0; p < g.grid().num_points(); ++p)
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += g.lo(p, i, j) * v.at(p, j);
            out.at(p, i) = s;
        }
    return out;
}

inline SymTensor2Field raise_sym2(const MetricField& g, const SymTensor2Field& h) {
    require_same_grid(g.grid(), h.grid(), "raise_sym2");
    require_variance(h, Variance::covariant, "raise_sym2");
    SymTensor2Field out(g.grid(), Variance::contravariant);
    const int n = g.dim();
    for (std::size_t p = 0; p < g.grid().num_points(); ++p)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) s += g.up(p, i, k) * g.up(p, j, l) * h.at(p, k, l);
                out.at(p, i, j) = s;
            }
    return out;
}

inline SymTensor2Field lower_sym2(const MetricField& g, const SymTensor2Field& h) {
    require_same_grid(g.grid(), h.grid(), "lower_sym2");
    require_variance(h, Variance::contravariant, "lower_sym2");
    SymTensor2Field out(g.grid(), Variance::covariant);
    const int n = g.dim();
    for (std::size_t p = 0; p < g.grid().num_points(); ++p)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) s += g.lo(p, i, k) * g.lo(p, j, l) * h.at(p, k, l);
                out.at(p, i, j) = s;
            }
    return out;
}

/// A_ij B^ij for two covariant symmetric 2-tensors (e.g. K_ij K^ij).
inline ScalarField full_contraction(const MetricField& g, const SymTensor2Field& a,
                                    const SymTensor2Field& b) {
    require_same_grid(g.grid(), a.grid(), "full_contraction");
    require_same_grid(g.grid(), b.grid(), "full_contraction");
    require_variance(a, Variance::covariant, "full_contraction");
    require_variance(b, Variance::covariant, "full_contraction");
    const int n = g.dim();
    ScalarField out(g.grid());
    for (std::size_t p = 0; p < g.grid().num_points(); ++p) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l)
                        s += g.up(p, i, k) * g.up(p, j, l) * a.at(p, i, j) * b.at(p, k, l);
        out[p] = s;
    }
    return out;
}

// ---------------------------------------------------- covariant derivatives

/// Gradient of a scalar (= covariant derivative; connection-free).
inline OneFormField grad(const ScalarField& u) {
    spectral::require_finite(u, "grad");
    const Grid& grid = u.grid();
    OneFormField out(grid, Variance::covariant);
    const int n = grid.dim();
    std::vector<double*> dst(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) dst[static_cast<std::size_t>(a)] = out.data() + a;
    spectral::partials_all_axes(grid, u.data(), 1, dst, static_cast<std::size_t>(n));
    return out;
}

/// nabla_i W_j for a covariant W; optionally reuses precomputed Christoffels.
inline Rank2Field cov_deriv_one_form(const MetricField& g, const OneFormField& w,
                                     const ChristoffelField& gam) {
    require_same_grid(g.grid(), w.grid(), "cov_deriv_one_form");
    require_variance(w, Variance::covariant, "cov_deriv_one_form");
    const Grid& grid = g.grid();
    const int n = grid.dim();
    const auto nn = static_cast<std::size_t>(n);
    const std::vector<double> dw = detail::all_partials(grid, w.data(), nn);
    Rank2Field out(grid, Variance::covariant);
    parallel_for(grid.num_points(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double* dwp = dw.data() + p * nn * nn;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = dwp[static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(j)];
                    for (int k = 0; k < n; ++k) s -= gam.at(p, k, i, j) * w.at(p, k);
                    out.at(p, i, j) = s;
                }
        }
    });
    return out;
}
inline Rank2Field cov_deriv_one_form(const MetricField& g, const OneFormField& w) {
    return cov_deriv_one_form(g, w, christoffel(g));
}

/// nabla_a K_ij for covariant symmetric K.
inline Rank3Field cov_deriv_sym2(const MetricField& g, const SymTensor2Field& k,
                                 const ChristoffelField& gam) {
    require_same_grid(g.grid(), k.grid(), "cov_deriv_sym2");
    require_variance(k, Variance::covariant, "cov_deriv_sym2");
    const Grid& grid = g.grid();
    const int n = grid.dim();
    const std::size_t nc = sym2_count(n);
    const std::vector<double> dk = detail::all_partials(grid, k.data(), nc);
    Rank3Field out(grid, Variance::covariant);
    parallel_for(grid.num_points(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double* dkp = dk.data() + p * static_cast<std::size_t>(n) * nc;
            for (int a = 0; a < n; ++a)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        double s = dkp[static_cast<std::size_t>(a) * nc + sym2_index(i, j, n)];
                        for (int m = 0; m < n; ++m)
                            s -= gam.at(p, m, a, i) * k.at(p, m, j) +
                                 gam.at(p, m, a, j) * k.at(p, i, m);
                        out.at(p, a, i, j) = s;
                    }
        }
    });
    return out;
}
inline Rank3Field cov_deriv_sym2(const MetricField& g, const SymTensor2Field& k) {
    return cov_deriv_sym2(g, k, christoffel(g));
}

// --------------------------------------------------------------- operators

/// (div_g h)_i = - g^kl nabla_l h_ki. The minus sign is part of the operator
/// definition here and everything downstream (York, constraints) assumes it.
inline OneFormField divergence(const MetricField& g, const SymTensor2Field& h,
                               const ChristoffelField& gam) {
    require_variance(h, Variance::covariant, "divergence");
    const Rank3Field dh = cov_deriv_sym2(g, h, gam);
    const Grid& grid = g.grid();
    const int n = grid.dim();
    OneFormField out(grid, Variance::covariant);
    parallel_for(grid.num_points(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p)
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) s += g.up(p, k, l) * dh.at(p, l, k, i);
                out.at(p, i) = -s;
            }
    });
    return out;
}
inline OneFormField divergence(const MetricField& g, const SymTensor2Field& h) {
    return divergence(g, h, christoffel(g));
}

/// Conformal Killing operator: symmetric, g-trace-free by construction.
inline SymTensor2Field conformal_killing_op(const MetricField& g, const OneFormField& w,
                                            const ChristoffelField& gam) {
    require_variance(w, Variance::covariant, "conformal_killing_op");
    const Rank2Field dw = cov_deriv_one_form(g, w, gam);
    const Grid& grid = g.grid();
    const int n = grid.dim();
    SymTensor2Field out(grid, Variance::covariant);
    parallel_for(grid.num_points(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            double div = 0.0;
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) div += g.up(p, k, l) * dw.at(p, k, l);
            const double c = 2.0 * div / static_cast<double>(n);
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j)
                    out.at(p, i, j) = dw.at(p, i, j) + dw.at(p, j, i) - c * g.lo(p, i, j);
        }
    });
    return out;
}
inline SymTensor2Field conformal_killing_op(const MetricField& g, const OneFormField& w) {
    return conformal_killing_op(g, w, christoffel(g));
}

/// Laplace-Beltrami operator, Delta u = g^ij (d_i d_j u - Gamma^k_ij d_k u).
inline ScalarField laplacian(const MetricField& g, const ScalarField& u,
                             const ChristoffelField& gam) {
    require_same_grid(g.grid(), u.grid(), "laplacian");
    spectral::require_finite(u, "laplacian");
    const Grid& grid = g.grid();
    const int n = grid.dim();
    spectral::cvec spec = spectral::forward(grid, u.data(), 1);
    if (spectral::dealias_enabled()) spectral::truncate_top_third(grid, spec);

    // first derivatives
    std::vector<ScalarField> du;
    du.reserve(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        spectral::cvec tmp = spec;
        spectral::apply_partial_multiplier(grid, tmp, a);
        ScalarField f(grid);
        spectral::backward_real(grid, std::move(tmp), f.data(), 1);
        du.push_back(std::move(f));
    }
    // Hessian components d_i d_j u
    std::vector<ScalarField> hess;
    hess.reserve(sym2_count(n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            spectral::cvec tmp = spec;
            spectral::apply_partial_multiplier(grid, tmp, i);
            spectral::apply_partial_multiplier(grid, tmp, j);
            ScalarField f(grid);
            spectral::backward_real(grid, std::move(tmp), f.data(), 1);
            hess.push_back(std::move(f));
        }

    ScalarField out(grid);
    for (std::size_t p = 0; p < grid.num_points(); ++p) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double hij = hess[sym2_index(i, j, n)][p];
                for (int k = 0; k < n; ++k) hij -= gam.at(p, k, i, j) * du[static_cast<std::size_t>(k)][p];
                s += g.up(p, i, j) * hij;
            }
        out[p] = s;
    }
    return out;
}
inline ScalarField laplacian(const MetricField& g, const ScalarField& u) {
    return laplacian(g, u, christoffel(g));
}

}  // namespace ccgrav
