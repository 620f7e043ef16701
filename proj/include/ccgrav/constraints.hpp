#pragma once

#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ccgrav/geometry.hpp"

namespace ccgrav {

// Hamiltonian/momentum constraint operators rho(g,K), J(g,K) for general
// relativity, Einstein-Gauss-Bonnet, and f(R) gravity. All models return the
// momentum one-form J itself (the -1/2 and 1/2 prefactors of the block forms
// are folded in); the GR normalization is J_i = -2 N_i.

struct GrModel {};

struct EgbModel {
    double alpha = 0.0;  // Gauss-Bonnet coupling; 0 recovers GR
};

/// f(R) model: f is a polynomial sum c_k x^k; the spacetime scalar-curvature
/// datum scal_r and its time derivative scal_r_dot are free data.
struct FofRModel {
    std::vector<double> coeffs;
    ScalarField scal_r;
    ScalarField scal_r_dot;
    double fprime_floor = 1e-10;
    /// If set, requires f' > 0 everywhere (the literal domain of ln f');
    /// otherwise the ln-derivative term is evaluated as (d f')/f', which
    /// extends to f' < 0 and agrees wherever f' > 0.
    bool strict_log_domain = false;
};

using GravityModel = std::variant<GrModel, EgbModel, FofRModel>;

inline double poly_eval(const std::vector<double>& c, double x) {
    double r = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) r = r * x + c[k];
    return r;
}
inline std::vector<double> poly_derivative(const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
    return d;
}

inline std::string model_tag(const GravityModel& model) {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GrModel>) {
                return "gr";
            } else if constexpr (std::is_same_v<T, EgbModel>) {
                std::ostringstream os;
                os << "egb(alpha=" << m.alpha << ")";
                return os.str();
            } else {
                std::ostringstream os;
                os << "fofr(coeffs=";
                for (std::size_t k = 0; k < m.coeffs.size(); ++k)
                    os << (k ? "," : "") << m.coeffs[k];
                os << ")";
                return os.str();
            }
        },
        model);
}

// --------------------------------------------------------------- EGB blocks

/// The curvature/extrinsic blocks of the Gauss-Bonnet constraints:
///   M_ijkl = R_ijkl + K_ik K_jl - K_il K_jk
///   M_ij   = R_ij + (tr K) K_ij - K_il K^l_j
///   M      = R + (tr K)^2 - K_ij K^ij
///   N_ijk  = nabla_i K_jk - nabla_j K_ik      (antisymmetric in (i,j))
///   N_i    = nabla_j K^j_i - nabla_i tr K
struct EgbBlocks {
    Riemann4Field m4;
    SymTensor2Field m2;
    ScalarField m0;
    Rank3Field n3;
    OneFormField n1;
};

namespace detail {

inline ScalarField m0_field(const MetricField& g, const SymTensor2Field& k,
                            const CurvatureBundle& curv) {
    const ScalarField trk = trace(g, k);
    const ScalarField k2 = full_contraction(g, k, k);
    ScalarField out(g.grid());
    for (std::size_t p = 0; p < out.size(); ++p)
        out[p] = curv.scalar[p] + trk[p] * trk[p] - k2[p];
    return out;
}

inline OneFormField n1_field(const MetricField& g, const SymTensor2Field& k,
                             const ChristoffelField& gam) {
    // N_i = nabla_j K^j_i - nabla_i tr K = -(div_g K)_i - d(tr K)_i
    const OneFormField divk = divergence(g, k, gam);
    const OneFormField dtrk = grad(trace(g, k));
    OneFormField out(g.grid(), Variance::covariant);
    const int n = g.dim();
    for (std::size_t p = 0; p < g.grid().num_points(); ++p)
        for (int i = 0; i < n; ++i) out.at(p, i) = -divk.at(p, i) - dtrk.at(p, i);
    return out;
}

}  // namespace detail

inline EgbBlocks egb_blocks(const MetricField& g, const SymTensor2Field& k,
                            const ChristoffelField& gam) {
    require_same_grid(g.grid(), k.grid(), "egb_blocks");
    require_variance(k, Variance::covariant, "egb_blocks");
    const Grid& grid = g.grid();
    const int n = grid.dim();

    const CurvatureBundle curv = full_curvature(g, gam);
    const ScalarField trk = trace(g, k);
    const Rank3Field dk = cov_deriv_sym2(g, k, gam);

    EgbBlocks out{Riemann4Field(grid), SymTensor2Field(grid, Variance::covariant),
                  detail::m0_field(g, k, curv), Rank3Field(grid, Variance::covariant),
                  detail::n1_field(g, k, gam)};

    parallel_for(grid.num_points(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    for (int a = 0; a < n; ++a)
                        for (int b = a + 1; b < n; ++b) {
                            if (pair_index(i, j, n) > pair_index(a, b, n)) continue;
                            out.m4.canonical(p, i, j, a, b) =
                                curv.riemann.get(p, i, j, a, b) +
                                k.at(p, i, a) * k.at(p, j, b) - k.at(p, i, b) * k.at(p, j, a);
                        }
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    double kk = 0.0;
                    for (int l = 0; l < n; ++l)
                        for (int m = 0; m < n; ++m)
                            kk += k.at(p, i, l) * g.up(p, l, m) * k.at(p, m, j);
                    out.m2.at(p, i, j) = curv.ricci.at(p, i, j) + trk[p] * k.at(p, i, j) - kk;
                }
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int c = 0; c < n; ++c)
                        out.n3.at(p, i, j, c) = dk.at(p, i, j, c) - dk.at(p, j, i, c);
        }
    });
    return out;
}

inline EgbBlocks egb_blocks(const MetricField& g, const SymTensor2Field& k) {
    return egb_blocks(g, k, christoffel(g));
}

// ------------------------------------------------------------- Hamiltonian

namespace detail {

inline void check_fprime(const ScalarField& fp, double floor, const char* where) {
    double worst = std::numeric_limits<double>::infinity();
    std::size_t worst_p = 0;
    for (std::size_t p = 0; p < fp.size(); ++p)
        if (std::abs(fp[p]) < worst) {
            worst = std::abs(fp[p]);
            worst_p = p;
        }
    if (worst < floor)
        throw numeric_error(std::string(where) + ": |f'(R)| = " + std::to_string(worst) +
                            " below floor " + std::to_string(floor) + " at point " +
                            std::to_string(worst_p));
}

inline ScalarField apply_poly(const std::vector<double>& c, const ScalarField& x) {
    ScalarField out = x;
    for (std::size_t p = 0; p < x.size(); ++p) out[p] = poly_eval(c, x[p]);
    return out;
}

/// Raises all indices of the per-point Riemann-symmetric block by sequential
/// contraction; src/dst are full n^4 scratch arrays.
inline void raise4_inplace(int n, const double* up /* n*n row-major */, std::vector<double>& a,
                           std::vector<double>& b) {
    const auto nn = static_cast<std::size_t>(n);
    auto id4 = [nn](int i, int j, int k, int l) {
        return ((static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(j)) * nn +
                static_cast<std::size_t>(k)) * nn +
               static_cast<std::size_t>(l);
    };
    for (int slot = 0; slot < 4; ++slot) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        double s = 0.0;
                        for (int m = 0; m < n; ++m) {
                            int idx[4] = {i, j, k, l};
                            const int keep = idx[slot];
                            idx[slot] = m;
                            s += up[static_cast<std::size_t>(keep) * nn +
                                    static_cast<std::size_t>(m)] *
                                 a[id4(idx[0], idx[1], idx[2], idx[3])];
                        }
                        b[id4(i, j, k, l)] = s;
                    }
        std::swap(a, b);
    }
}

/// rho for EGB with given alpha (alpha = 0 is GR).
inline ScalarField rho_egb(double alpha, const MetricField& g, const SymTensor2Field& k,
                           const ChristoffelField& gam) {
    if (alpha == 0.0) return m0_field(g, k, full_curvature(g, gam));
    const EgbBlocks b = egb_blocks(g, k, gam);
    const Grid& grid = g.grid();
    const int n = grid.dim();
    const auto nn = static_cast<std::size_t>(n);
    const ScalarField m2m2 = full_contraction(g, b.m2, b.m2);
    ScalarField out(grid);
    parallel_for(grid.num_points(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> up(nn * nn), t0(nn * nn * nn * nn), t1(nn * nn * nn * nn);
        for (std::size_t p = lo; p < hi; ++p) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) up[static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(j)] = g.up(p, i, j);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int c = 0; c < n; ++c)
                        for (int d = 0; d < n; ++d)
                            t0[((static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(j)) * nn +
                                static_cast<std::size_t>(c)) * nn + static_cast<std::size_t>(d)] =
                                b.m4.get(p, i, j, c, d);
            std::vector<double> lowered = t0;  // keep M_ijcd
            raise4_inplace(n, up.data(), t0, t1);
            double m4m4 = 0.0;
            for (std::size_t q = 0; q < lowered.size(); ++q) m4m4 += lowered[q] * t0[q];
            const double m = b.m0[p];
            out[p] = m + alpha * (m * m - 4.0 * m2m2[p] + m4m4);
        }
    });
    return out;
}

}  // namespace detail

/// Hamiltonian constraint residual field rho(g, K).
inline ScalarField rho(const GravityModel& model, const MetricField& g,
                       const SymTensor2Field& k, const ChristoffelField& gam) {
    require_same_grid(g.grid(), k.grid(), "rho");
    require_variance(k, Variance::covariant, "rho");
    return std::visit(
        [&](const auto& m) -> ScalarField {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GrModel>) {
                return detail::rho_egb(0.0, g, k, gam);
            } else if constexpr (std::is_same_v<T, EgbModel>) {
                return detail::rho_egb(m.alpha, g, k, gam);
            } else {
                // f(R):  rho = R - K_ij K^ij + (tr K)^2
                //        - f'(R)^{-1} [ 2 Lap_g f'(R) + 2 tr K f''(R) Rdot
                //                       - f(R) - R f'(R) ]
                // implemented verbatim, including the bracket's sign pattern
                require_same_grid(g.grid(), m.scal_r.grid(), "rho[fofr]");
                require_same_grid(g.grid(), m.scal_r_dot.grid(), "rho[fofr]");
                const std::vector<double> dc = poly_derivative(m.coeffs);
                const std::vector<double> ddc = poly_derivative(dc);
                const ScalarField fR = detail::apply_poly(m.coeffs, m.scal_r);
                const ScalarField fp = detail::apply_poly(dc, m.scal_r);
                const ScalarField fpp = detail::apply_poly(ddc, m.scal_r);
                detail::check_fprime(fp, m.fprime_floor, "rho[fofr]");

                const CurvatureBundle curv = full_curvature(g, gam);
                const ScalarField trk = trace(g, k);
                const ScalarField k2 = full_contraction(g, k, k);
                const ScalarField lap_fp = laplacian(g, fp, gam);

                ScalarField out(g.grid());
                for (std::size_t p = 0; p < out.size(); ++p) {
                    const double bracket = 2.0 * lap_fp[p] +
                                           2.0 * trk[p] * fpp[p] * m.scal_r_dot[p] -
                                           fR[p] - m.scal_r[p] * fp[p];
                    out[p] = curv.scalar[p] - k2[p] + trk[p] * trk[p] - bracket / fp[p];
                }
                return out;
            }
        },
        model);
}

inline ScalarField rho(const GravityModel& model, const MetricField& g,
                       const SymTensor2Field& k) {
    return rho(model, g, k, christoffel(g));
}

// ----------------------------------------------------------------- momentum

/// Momentum constraint residual one-form J(g, K).
inline OneFormField momentum(const GravityModel& model, const MetricField& g,
                             const SymTensor2Field& k, const ChristoffelField& gam) {
    require_same_grid(g.grid(), k.grid(), "momentum");
    require_variance(k, Variance::covariant, "momentum");
    const Grid& grid = g.grid();
    const int n = grid.dim();
    return std::visit(
        [&](const auto& m) -> OneFormField {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GrModel>) {
                return scaled(detail::n1_field(g, k, gam), -2.0);
            } else if constexpr (std::is_same_v<T, EgbModel>) {
                if (m.alpha == 0.0) return scaled(detail::n1_field(g, k, gam), -2.0);
                // J_i = -2 [ N_i + 2 alpha ( M N_i - 2 M_i^j N_j
                //            + 2 M^kl N_ikl - M_i^jkl N_klj ) ]
                // with M_i^jkl = g^jp g^kq g^lr M_ipqr
                const EgbBlocks b = egb_blocks(g, k, gam);
                const SymTensor2Field m2up = raise_sym2(g, b.m2);
                OneFormField out(grid, Variance::covariant);
                const double alpha = m.alpha;
                const auto nn = static_cast<std::size_t>(n);
                parallel_for(grid.num_points(), [&](std::size_t lo, std::size_t hi) {
                    std::vector<double> up(nn * nn), t0(nn * nn * nn * nn), t1(nn * nn * nn * nn);
                    auto id4 = [nn](int a, int bq, int c, int d) {
                        return ((static_cast<std::size_t>(a) * nn + static_cast<std::size_t>(bq)) * nn +
                                static_cast<std::size_t>(c)) * nn + static_cast<std::size_t>(d);
                    };
                    for (std::size_t p = lo; p < hi; ++p) {
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < n; ++j)
                                up[static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(j)] =
                                    g.up(p, i, j);
                        // t0 <- M_i^{jkl}: raise the last three slots
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < n; ++j)
                                for (int c = 0; c < n; ++c)
                                    for (int d = 0; d < n; ++d) t0[id4(i, j, c, d)] = b.m4.get(p, i, j, c, d);
                        for (int slot = 1; slot < 4; ++slot) {
                            for (int i = 0; i < n; ++i)
                                for (int j = 0; j < n; ++j)
                                    for (int c = 0; c < n; ++c)
                                        for (int d = 0; d < n; ++d) {
                                            double s = 0.0;
                                            for (int q = 0; q < n; ++q) {
                                                int idx[4] = {i, j, c, d};
                                                const int keep = idx[slot];
                                                idx[slot] = q;
                                                s += up[static_cast<std::size_t>(keep) * nn +
                                                        static_cast<std::size_t>(q)] *
                                                     t0[id4(idx[0], idx[1], idx[2], idx[3])];
                                            }
                                            t1[id4(i, j, c, d)] = s;
                                        }
                            std::swap(t0, t1);
                        }
                        for (int i = 0; i < n; ++i) {
                            double minj = 0.0;  // M_i^j N_j
                            for (int j = 0; j < n; ++j)
                                for (int l = 0; l < n; ++l)
                                    minj += up[static_cast<std::size_t>(j) * nn + static_cast<std::size_t>(l)] *
                                            b.m2.at(p, i, l) * b.n1.at(p, j);
                            double mkl_nikl = 0.0;  // M^kl N_ikl
                            for (int kk = 0; kk < n; ++kk)
                                for (int l = 0; l < n; ++l)
                                    mkl_nikl += m2up.at(p, kk, l) * b.n3.at(p, i, kk, l);
                            double m4n = 0.0;  // M_i^jkl N_klj
                            for (int j = 0; j < n; ++j)
                                for (int kk = 0; kk < n; ++kk)
                                    for (int l = 0; l < n; ++l)
                                        m4n += t0[id4(i, j, kk, l)] * b.n3.at(p, kk, l, j);
                            const double inner =
                                b.m0[p] * b.n1.at(p, i) - 2.0 * minj + 2.0 * mkl_nikl - m4n;
                            out.at(p, i) = -2.0 * (b.n1.at(p, i) + 2.0 * alpha * inner);
                        }
                    }
                });
                return out;
            } else {
                // f(R):  J_j = 2 [ -nabla^i K_ij + nabla_j tr K
                //                  - f'^{-1} nabla_j (f'' Rdot) - K^i_j (nabla_i f')/f' ]
                require_same_grid(g.grid(), m.scal_r.grid(), "momentum[fofr]");
                require_same_grid(g.grid(), m.scal_r_dot.grid(), "momentum[fofr]");
                const std::vector<double> dc = poly_derivative(m.coeffs);
                const std::vector<double> ddc = poly_derivative(dc);
                const ScalarField fp = detail::apply_poly(dc, m.scal_r);
                const ScalarField fpp = detail::apply_poly(ddc, m.scal_r);
                detail::check_fprime(fp, m.fprime_floor, "momentum[fofr]");
                if (m.strict_log_domain)
                    for (std::size_t p = 0; p < fp.size(); ++p)
                        if (!(fp[p] > 0.0))
                            throw numeric_error("momentum[fofr]: f'(R) = " + std::to_string(fp[p]) +
                                                " at point " + std::to_string(p) +
                                                " outside the ln f' domain (strict mode)");

                const OneFormField divk = divergence(g, k, gam);
                const OneFormField dtrk = grad(trace(g, k));
                const OneFormField dsrc = grad(fpp * m.scal_r_dot);
                const OneFormField dfp = grad(fp);

                OneFormField out(grid, Variance::covariant);
                for (std::size_t p = 0; p < grid.num_points(); ++p)
                    for (int j = 0; j < n; ++j) {
                        // -nabla^i K_ij = (div_g K)_j by the sign convention
                        double kdf = 0.0;  // K^i_j nabla_i f'
                        for (int i = 0; i < n; ++i)
                            for (int l = 0; l < n; ++l)
                                kdf += g.up(p, i, l) * k.at(p, l, j) * dfp.at(p, i);
                        out.at(p, j) = 2.0 * (divk.at(p, j) + dtrk.at(p, j) -
                                              dsrc.at(p, j) / fp[p] - kdf / fp[p]);
                    }
                return out;
            }
        },
        model);
}

inline OneFormField momentum(const GravityModel& model, const MetricField& g,
                             const SymTensor2Field& k) {
    return momentum(model, g, k, christoffel(g));
}

// ------------------------------------------------------------------ report

/// Norms of the constraint residuals. L2 norms use the flat cell measure
/// (grid-weighted); for the one-form, the component-stacked L2.
struct ResidualReport {
    double rho_linf = 0.0;
    double rho_l2 = 0.0;
    double j_linf = 0.0;
    double j_l2 = 0.0;
    std::string model;
    std::string grid;
    std::map<std::string, std::string> provenance;
};

inline ResidualReport report_from_fields(const GravityModel& model, const ScalarField& r,
                                         const OneFormField& j) {
    const double w = r.grid().cell_volume();
    ResidualReport rep;
    rep.model = model_tag(model);
    rep.grid = r.grid().describe();
    rep.rho_linf = linf(r);
    rep.j_linf = linf(j);
    double s = 0.0;
    for (double x : r.values()) s += x * x;
    rep.rho_l2 = std::sqrt(w * s);
    s = 0.0;
    for (double x : j.values()) s += x * x;
    rep.j_l2 = std::sqrt(w * s);
    return rep;
}

inline ResidualReport residual_report(const GravityModel& model, const MetricField& g,
                                      const SymTensor2Field& k) {
    const ChristoffelField gam = christoffel(g);
    return report_from_fields(model, rho(model, g, k, gam), momentum(model, g, k, gam));
}

}  // namespace ccgrav
