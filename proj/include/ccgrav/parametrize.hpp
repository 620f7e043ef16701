#pragma once

#include <string>
#include <variant>

#include "ccgrav/conformal.hpp"
#include "ccgrav/constraints.hpp"
#include "ccgrav/geometry.hpp"

namespace ccgrav {

// Conformal parametrizations assembling physical data (g_hat, K_hat) from
// free data (g, tau, sigma, phi, W):
//   g_hat = phi^{N-2} g
//   K_hat = (tau/n) g_hat + phi^{-2} (sigma + psi_eff^N cko_g W)
// where psi_eff distinguishes the schemes: method A (psi = 1), method B
// (psi = phi), conformal thin sandwich (psi fixed), and the one-parameter
// power family psi = phi^s.

struct MethodA {};
struct MethodB {};
struct ThinSandwich {
    ScalarField psi;
};
struct PowerRule {
    double s = 1.0;
};
using Scheme = std::variant<MethodA, MethodB, ThinSandwich, PowerRule>;

inline std::string scheme_tag(const Scheme& s) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, MethodA>) return "method-a";
            else if constexpr (std::is_same_v<T, MethodB>) return "method-b";
            else if constexpr (std::is_same_v<T, ThinSandwich>) return "thin-sandwich";
            else return "power-rule(s=" + std::to_string(v.s) + ")";
        },
        s);
}

struct SeedTolerances {
    double trace_tol = 1e-10;
    double div_tol = 1e-8;
};

/// Validated free data. sigma must be trace-free and divergence-free with
/// respect to g (within the stated tolerances), phi > 0 pointwise.
struct Seed {
    MetricField g;
    ScalarField tau;
    SymTensor2Field sigma;
    ScalarField phi;
    OneFormField w;
    Scheme scheme;
};

inline Seed make_seed(MetricField g, ScalarField tau, SymTensor2Field sigma, ScalarField phi,
                      OneFormField w, Scheme scheme, const SeedTolerances& tol = {}) {
    require_same_grid(g.grid(), tau.grid(), "make_seed[tau]");
    require_same_grid(g.grid(), sigma.grid(), "make_seed[sigma]");
    require_same_grid(g.grid(), phi.grid(), "make_seed[phi]");
    require_same_grid(g.grid(), w.grid(), "make_seed[w]");
    require_variance(sigma, Variance::covariant, "make_seed[sigma]");
    require_variance(w, Variance::covariant, "make_seed[w]");
    if (!tau.all_finite()) throw numeric_error("make_seed: non-finite tau");
    for (std::size_t p = 0; p < phi.size(); ++p)
        if (!(phi[p] > 0.0))
            throw numeric_error("make_seed: phi = " + std::to_string(phi[p]) + " at point " +
                                std::to_string(p) + " (must be > 0)");
    if (const auto* ts = std::get_if<ThinSandwich>(&scheme)) {
        require_same_grid(g.grid(), ts->psi.grid(), "make_seed[psi]");
        for (std::size_t p = 0; p < ts->psi.size(); ++p)
            if (!(ts->psi[p] > 0.0))
                throw numeric_error("make_seed: thin-sandwich psi nonpositive at point " +
                                    std::to_string(p));
    }
    const double scale = std::max(1.0, linf(sigma));
    const double trace_norm = linf(trace(g, sigma)) / scale;
    if (trace_norm > tol.trace_tol)
        throw validation_error("make_seed: sigma has g-trace " + std::to_string(trace_norm) +
                               " (tolerance " + std::to_string(tol.trace_tol) + ")");
    const double div_norm = linf(divergence(g, sigma)) / scale;
    if (div_norm > tol.div_tol)
        throw validation_error("make_seed: sigma has g-divergence " + std::to_string(div_norm) +
                               " (tolerance " + std::to_string(tol.div_tol) + ")");
    return Seed{std::move(g), std::move(tau), std::move(sigma), std::move(phi), std::move(w),
                std::move(scheme)};
}

/// The effective factor multiplying cko_g W inside the assembly.
inline ScalarField psi_eff(const Seed& seed) {
    return std::visit(
        [&](const auto& v) -> ScalarField {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, MethodA>) return ScalarField(seed.g.grid(), 1.0);
            else if constexpr (std::is_same_v<T, MethodB>) return seed.phi;
            else if constexpr (std::is_same_v<T, ThinSandwich>) return v.psi;
            else return pow_field(seed.phi, v.s);
        },
        seed.scheme);
}

struct PhysicalData {
    MetricField g_hat;
    SymTensor2Field k_hat;
};

inline PhysicalData assemble(const Seed& seed) {
    const int n = seed.g.dim();
    const double N = conformal_weight(n).N;
    MetricField g_hat = rescale_metric(seed.g, seed.phi);

    const SymTensor2Field lw = conformal_killing_op(seed.g, seed.w);
    const ScalarField psiN = pow_field(psi_eff(seed), N);
    const ScalarField phi_m2 = pow_field(seed.phi, -2.0);

    SymTensor2Field k_hat(seed.g.grid(), Variance::covariant);
    for (std::size_t p = 0; p < seed.g.grid().num_points(); ++p) {
        const double t = seed.tau[p] / static_cast<double>(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                k_hat.at(p, i, j) = t * g_hat.lo(p, i, j) +
                                    phi_m2[p] * (seed.sigma.at(p, i, j) + psiN[p] * lw.at(p, i, j));
    }
    return PhysicalData{std::move(g_hat), std::move(k_hat)};
}

/// The composed systems (S)/(S'): constraint residuals of the assembled data.
/// No expanded Lichnerowicz/vector formulas -- composition keeps all three
/// gravity models consistent automatically.
inline ResidualReport system_residual(const Seed& seed, const GravityModel& model) {
    const PhysicalData pd = assemble(seed);
    ResidualReport rep = residual_report(model, pd.g_hat, pd.k_hat);
    rep.provenance["scheme"] = scheme_tag(seed.scheme);
    return rep;
}

/// The conformal gauge action on method-B free data:
///   g~ = psi^{N-2} g,  sigma~ = psi^{-2} sigma,  phi~ = psi^{-1} phi,
///   W~ = psi^{N-2} W,  tau unchanged.
/// The transformed seed assembles to the same physical (g_hat, K_hat), which
/// is the covariance of the system (S') -- model-independent by composition.
inline Seed gauge_transform(const Seed& seed, const ScalarField& psi,
                            const SeedTolerances& tol = {}) {
    if (!std::holds_alternative<MethodB>(seed.scheme))
        throw validation_error("gauge_transform: seed scheme must be method-b, got " +
                               scheme_tag(seed.scheme));
    require_same_grid(seed.g.grid(), psi.grid(), "gauge_transform");
    for (std::size_t p = 0; p < psi.size(); ++p)
        if (!(psi[p] > 0.0))
            throw numeric_error("gauge_transform: psi = " + std::to_string(psi[p]) +
                                " at point " + std::to_string(p) + " (must be > 0)");
    const double N = conformal_weight(seed.g.dim()).N;
    return make_seed(rescale_metric(seed.g, psi), seed.tau,
                     scaled_by(seed.sigma, pow_field(psi, -2.0)),
                     seed.phi * pow_field(psi, -1.0), scaled_by(seed.w, pow_field(psi, N - 2.0)),
                     MethodB{}, tol);
}

}  // namespace ccgrav
