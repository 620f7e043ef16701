#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "ccgrav/field_ops.hpp"
#include "ccgrav/geometry.hpp"
#include "ccgrav/metric.hpp"
#include "ccgrav/rng.hpp"

namespace ccgrav {

/// Conformal weight N = 2n/(n-2): the exponent governing g_hat = phi^{N-2} g.
struct ConformalWeight {
    int n;
    double N;
};

inline ConformalWeight conformal_weight(int n) {
    if (n < 3) throw validation_error("conformal_weight: dimension must be >= 3");
    return {n, 2.0 * static_cast<double>(n) / (static_cast<double>(n) - 2.0)};
}

namespace detail {
inline void require_positive(const ScalarField& psi, const char* where) {
    for (std::size_t p = 0; p < psi.size(); ++p)
        if (!(psi[p] > 0.0))
            throw numeric_error(std::string(where) + ": conformal factor is " +
                                std::to_string(psi[p]) + " at point " + std::to_string(p) +
                                " (must be > 0)");
}
}  // namespace detail

/// g with every component scaled by psi^c (pointwise); SPD is preserved for
/// psi > 0 and the inverse/determinant caches are rebuilt.
inline MetricField scale_metric(const MetricField& g, const ScalarField& psi, double c) {
    require_same_grid(g.grid(), psi.grid(), "scale_metric");
    detail::require_positive(psi, "scale_metric");
    const int n = g.dim();
    SymTensor2Field s(g.grid(), Variance::covariant);
    for (std::size_t p = 0; p < g.grid().num_points(); ++p) {
        const double f = std::pow(psi[p], c);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) s.at(p, i, j) = f * g.lo(p, i, j);
    }
    return MetricField(std::move(s));
}

/// The conformal rescaling g_tilde = psi^{N-2} g.
inline MetricField rescale_metric(const MetricField& g, const ScalarField& psi) {
    return scale_metric(g, psi, conformal_weight(g.dim()).N - 2.0);
}

/// Relative residual of  div_{g~} h  -  psi^{-N} div_g(psi^2 h)  with
/// g~ = psi^{N-2} g. The identity holds for g-trace-free h, so the trace
/// part of h is removed (pointwise) before checking.
inline double check_divergence_covariance(const MetricField& g, const ScalarField& psi,
                                          const SymTensor2Field& h) {
    require_variance(h, Variance::covariant, "check_divergence_covariance");
    detail::require_positive(psi, "check_divergence_covariance");
    const double N = conformal_weight(g.dim()).N;
    const SymTensor2Field h0 = detrace(g, h);
    const MetricField gt = rescale_metric(g, psi);
    const OneFormField lhs = divergence(gt, h0);
    const OneFormField rhs =
        scaled_by(divergence(g, scaled_by(h0, pow_field(psi, 2.0))), pow_field(psi, -N));
    return rel_diff(lhs, rhs);
}

/// Relative residual of  cko_{g~} W  -  psi^{N-2} cko_g(psi^{2-N} W).
inline double check_cko_covariance(const MetricField& g, const ScalarField& psi,
                                   const OneFormField& w) {
    require_variance(w, Variance::covariant, "check_cko_covariance");
    detail::require_positive(psi, "check_cko_covariance");
    const double N = conformal_weight(g.dim()).N;
    const MetricField gt = rescale_metric(g, psi);
    const SymTensor2Field lhs = conformal_killing_op(gt, w);
    const SymTensor2Field rhs = scaled_by(
        conformal_killing_op(g, scaled_by(w, pow_field(psi, 2.0 - N))), pow_field(psi, N - 2.0));
    return rel_diff(lhs, rhs);
}

// ------------------------------------------------- generic covariance check
//
// An operator P_g is conformally covariant with weights (a, b, c) when
//   psi^b (.) P_{psi^c (.) g}(psi^a (.) e) = P_g(e)
// for every positive psi, where psi^a acts slotwise by multiplication.

enum class SectionKind { scalar, one_form, sym2_trace_free };

using FieldVariant = std::variant<ScalarField, Rank1Field, SymTensor2Field>;

struct RegisteredOperator {
    std::vector<SectionKind> inputs;
    std::function<FieldVariant(const MetricField&, const std::vector<FieldVariant>&)> apply;
};

inline const std::map<std::string, RegisteredOperator>& covariant_operator_registry() {
    static const std::map<std::string, RegisteredOperator> registry = [] {
        std::map<std::string, RegisteredOperator> r;
        r["divergence"] = {{SectionKind::sym2_trace_free},
                           [](const MetricField& g, const std::vector<FieldVariant>& in) {
                               return FieldVariant(divergence(g, std::get<SymTensor2Field>(in[0])));
                           }};
        r["conformal_killing"] = {{SectionKind::one_form},
                                  [](const MetricField& g, const std::vector<FieldVariant>& in) {
                                      return FieldVariant(
                                          conformal_killing_op(g, std::get<Rank1Field>(in[0])));
                                  }};
        r["scalar_curvature"] = {{},
                                 [](const MetricField& g, const std::vector<FieldVariant>&) {
                                     return FieldVariant(scalar_curvature(g));
                                 }};
        return r;
    }();
    return registry;
}

/// Weights of the covariance relation. a: one entry per input section,
/// b: one per output, c: one per metric slot (only m = 1 is exercised here).
struct CovarianceSpec {
    std::string op;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;
};

struct CovarianceTrial {
    std::string op;
    std::vector<double> a, b, c;
    std::string grid;
    std::uint64_t seed = 0;
    double residual = 0.0;
};

struct CovarianceRunOptions {
    double metric_amplitude = 0.05;   // omega in g = e^{2 omega} delta
    double psi_amplitude = 0.05;      // u in psi = e^u
    double section_amplitude = 0.5;   // test sections e
};

namespace detail {
inline FieldVariant scale_variant(const FieldVariant& f, const ScalarField& psi, double a) {
    const ScalarField w = pow_field(psi, a);
    return std::visit([&](const auto& x) { return FieldVariant(scaled_by(x, w)); }, f);
}
inline double variant_rel_diff(const FieldVariant& x, const FieldVariant& y) {
    return std::visit(
        [&](const auto& xa) {
            using T = std::decay_t<decltype(xa)>;
            return rel_diff(xa, std::get<T>(y));
        },
        x);
}
}  // namespace detail

/// Draws `trials` random band-limited (g, e, psi) sets and returns the worst
/// relative residual of the covariance relation; per-trial records optional.
inline double check_covariance(const CovarianceSpec& spec, const Grid& grid, int trials,
                               std::uint64_t rng_seed,
                               std::vector<CovarianceTrial>* records = nullptr,
                               const CovarianceRunOptions& opt = {}) {
    const auto& registry = covariant_operator_registry();
    const auto it = registry.find(spec.op);
    if (it == registry.end())
        throw validation_error("check_covariance: unknown operator '" + spec.op + "'");
    const RegisteredOperator& op = it->second;
    if (spec.a.size() != op.inputs.size() || spec.b.size() != 1 || spec.c.size() != 1)
        throw validation_error("check_covariance: weight arity mismatch for '" + spec.op + "'");

    BandLimitOptions sec_opt;
    sec_opt.amplitude = opt.section_amplitude;

    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t ts = derived_seed(rng_seed, static_cast<std::uint64_t>(t));
        const MetricField g = random_conformal_metric(grid, derived_seed(ts, 1), opt.metric_amplitude);
        const ScalarField psi = random_positive_factor(grid, derived_seed(ts, 2), opt.psi_amplitude);

        std::vector<FieldVariant> inputs;
        for (std::size_t s = 0; s < op.inputs.size(); ++s) {
            const std::uint64_t ss = derived_seed(ts, 10 + s);
            switch (op.inputs[s]) {
                case SectionKind::scalar:
                    inputs.emplace_back(random_band_limited_scalar(grid, ss, sec_opt));
                    break;
                case SectionKind::one_form:
                    inputs.emplace_back(
                        random_band_limited_rank1(grid, ss, Variance::covariant, sec_opt));
                    break;
                case SectionKind::sym2_trace_free:
                    inputs.emplace_back(detrace(
                        g, random_band_limited_sym2(grid, ss, Variance::covariant, sec_opt)));
                    break;
            }
        }

        const MetricField g_scaled = scale_metric(g, psi, spec.c[0]);
        std::vector<FieldVariant> scaled_inputs;
        for (std::size_t s = 0; s < inputs.size(); ++s)
            scaled_inputs.push_back(detail::scale_variant(inputs[s], psi, spec.a[s]));

        const FieldVariant lhs =
            detail::scale_variant(op.apply(g_scaled, scaled_inputs), psi, spec.b[0]);
        const FieldVariant rhs = op.apply(g, inputs);
        const double res = detail::variant_rel_diff(lhs, rhs);
        worst = std::max(worst, res);
        if (records)
            records->push_back({spec.op, spec.a, spec.b, spec.c, grid.describe(), ts, res});
    }
    return worst;
}

}  // namespace ccgrav
