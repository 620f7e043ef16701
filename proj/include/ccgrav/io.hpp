#pragma once

#include <bit>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <variant>
#include <vector>

#include "ccgrav/constraints.hpp"
#include "ccgrav/field.hpp"
#include "ccgrav/metric.hpp"
#include "ccgrav/parametrize.hpp"

namespace ccgrav::io {

// GFLD/1: one JSON header line
//   {"magic":"GFLD","version":1,"n":...,"shape":[...],"periods":[...],
//    "rank":0|1|2|4,"variance":"co"|"contra"|"mixed","sym":"none"|"sym2"|"riem4"}
// terminated by '\n', then raw little-endian float64 in row-major point
// order, components innermost. Symmetric ranks store only the independent
// components: sym2 in (i <= j) lexicographic order, riem4 by antisymmetric
// pairs P=(i<j) lexicographic with P <= Q.

static_assert(std::endian::native == std::endian::little,
              "GFLD/1 writes native doubles and assumes a little-endian host");

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

using AnyField = std::variant<ScalarField, Rank1Field, SymTensor2Field, Riemann4Field>;

namespace detail {

inline ordered_json gfld_header(const Grid& grid, int rank, const char* variance,
                                const char* sym) {
    ordered_json h;
    h["magic"] = "GFLD";
    h["version"] = 1;
    h["n"] = grid.dim();
    h["shape"] = grid.shape();
    h["periods"] = grid.periods();
    h["rank"] = rank;
    h["variance"] = variance;
    h["sym"] = sym;
    return h;
}

inline void write_gfld_raw(const std::filesystem::path& path, const ordered_json& header,
                           const std::vector<double>& values) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw validation_error("cannot open for writing: " + path.string());
    const std::string h = header.dump();
    os.write(h.data(), static_cast<std::streamsize>(h.size()));
    os.put('\n');
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!os) throw validation_error("short write: " + path.string());
}

inline const char* variance_str(Variance v) {
    return v == Variance::covariant ? "co" : "contra";
}

}  // namespace detail

inline void write_gfld(const std::filesystem::path& path, const ScalarField& f) {
    detail::write_gfld_raw(path, detail::gfld_header(f.grid(), 0, "co", "none"), f.values());
}
inline void write_gfld(const std::filesystem::path& path, const Rank1Field& f) {
    detail::write_gfld_raw(path, detail::gfld_header(f.grid(), 1, detail::variance_str(f.variance()), "none"),
                           f.values());
}
inline void write_gfld(const std::filesystem::path& path, const SymTensor2Field& f) {
    detail::write_gfld_raw(path, detail::gfld_header(f.grid(), 2, detail::variance_str(f.variance()), "sym2"),
                           f.values());
}
inline void write_gfld(const std::filesystem::path& path, const Riemann4Field& f) {
    detail::write_gfld_raw(path, detail::gfld_header(f.grid(), 4, "co", "riem4"), f.values());
}
inline void write_gfld(const std::filesystem::path& path, const MetricField& g) {
    write_gfld(path, g.components());
}

inline AnyField read_gfld(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw validation_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw validation_error("missing GFLD header: " + path.string());
    json h;
    try {
        h = json::parse(line);
    } catch (const json::exception& e) {
        throw validation_error("bad GFLD header in " + path.string() + ": " + e.what());
    }
    if (h.value("magic", "") != "GFLD" || h.value("version", 0) != 1)
        throw validation_error("not a GFLD/1 file: " + path.string());

    const auto shape = h.at("shape").get<std::vector<std::size_t>>();
    const auto periods = h.at("periods").get<std::vector<double>>();
    if (h.at("n").get<std::size_t>() != shape.size())
        throw validation_error("GFLD header n/shape mismatch: " + path.string());
    Grid grid(shape, periods);

    const int rank = h.at("rank").get<int>();
    const std::string var = h.at("variance").get<std::string>();
    const std::string sym = h.value("sym", "none");
    const Variance variance = var == "contra" ? Variance::contravariant : Variance::covariant;

    auto fill = [&](auto field) {
        auto& v = field.values();
        is.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(double)));
        if (static_cast<std::size_t>(is.gcount()) != v.size() * sizeof(double))
            throw validation_error("truncated GFLD payload: " + path.string());
        if (!field.all_finite())
            throw numeric_error("non-finite values in " + path.string());
        return field;
    };

    if (rank == 0) return AnyField(fill(ScalarField(grid)));
    if (rank == 1) return AnyField(fill(Rank1Field(grid, variance)));
    if (rank == 2 && sym == "sym2") return AnyField(fill(SymTensor2Field(grid, variance)));
    if (rank == 4 && sym == "riem4") return AnyField(fill(Riemann4Field(grid)));
    throw validation_error("unsupported GFLD rank/sym combination in " + path.string());
}

inline ScalarField read_scalar(const std::filesystem::path& path) {
    AnyField f = read_gfld(path);
    if (auto* s = std::get_if<ScalarField>(&f)) return std::move(*s);
    throw validation_error("expected rank-0 field in " + path.string());
}
inline Rank1Field read_one_form(const std::filesystem::path& path) {
    AnyField f = read_gfld(path);
    if (auto* s = std::get_if<Rank1Field>(&f)) {
        require_variance(*s, Variance::covariant, "read_one_form");
        return std::move(*s);
    }
    throw validation_error("expected rank-1 field in " + path.string());
}
inline SymTensor2Field read_sym2(const std::filesystem::path& path) {
    AnyField f = read_gfld(path);
    if (auto* s = std::get_if<SymTensor2Field>(&f)) return std::move(*s);
    throw validation_error("expected rank-2 sym field in " + path.string());
}
inline MetricField read_metric(const std::filesystem::path& path) {
    return MetricField(read_sym2(path));
}

// ----------------------------------------------------------------- reports

inline json report_json(const ResidualReport& rep) {
    json j;
    j["model"] = rep.model;
    j["grid"] = rep.grid;
    j["rho_linf"] = rep.rho_linf;
    j["rho_l2"] = rep.rho_l2;
    j["J_linf"] = rep.j_linf;
    j["J_l2"] = rep.j_l2;
    if (!rep.provenance.empty()) j["provenance"] = rep.provenance;
    return j;
}

// -------------------------------------------------------------------- seeds

/// Seed description file: JSON object with keys
///   g      : path to a GFLD/1 covariant sym2 metric (required)
///   tau    : path or number (constant field)            [default 0]
///   sigma  : path                                       [default zero]
///   phi    : path or number                             [default 1]
///   w      : path                                       [default zero]
///   scheme : {"type":"method-a"|"method-b"|"thin-sandwich"|"power-rule",
///             "psi": path (thin-sandwich), "s": number (power-rule)}
/// Relative paths resolve against the seed file's directory.
inline Seed load_seed(const std::filesystem::path& path, const SeedTolerances& tol = {}) {
    std::ifstream is(path);
    if (!is) throw validation_error("cannot open seed file: " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw validation_error("bad seed JSON in " + path.string() + ": " + e.what());
    }
    const std::filesystem::path base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    if (!j.contains("g")) throw validation_error("seed file missing 'g': " + path.string());
    MetricField g = read_metric(resolve(j.at("g").get<std::string>()));
    const Grid& grid = g.grid();

    auto scalar_or_const = [&](const char* key, double dflt) {
        if (!j.contains(key)) return ScalarField(grid, dflt);
        if (j.at(key).is_number()) return ScalarField(grid, j.at(key).get<double>());
        return read_scalar(resolve(j.at(key).get<std::string>()));
    };
    ScalarField tau = scalar_or_const("tau", 0.0);
    ScalarField phi = scalar_or_const("phi", 1.0);
    SymTensor2Field sigma = j.contains("sigma")
                                ? read_sym2(resolve(j.at("sigma").get<std::string>()))
                                : SymTensor2Field(grid, Variance::covariant);
    OneFormField w = j.contains("w") ? read_one_form(resolve(j.at("w").get<std::string>()))
                                     : OneFormField(grid, Variance::covariant);

    Scheme scheme = MethodA{};
    if (j.contains("scheme")) {
        const json& s = j.at("scheme");
        const std::string type = s.at("type").get<std::string>();
        if (type == "method-a") scheme = MethodA{};
        else if (type == "method-b") scheme = MethodB{};
        else if (type == "thin-sandwich")
            scheme = ThinSandwich{read_scalar(resolve(s.at("psi").get<std::string>()))};
        else if (type == "power-rule") scheme = PowerRule{s.value("s", 1.0)};
        else throw validation_error("unknown scheme type '" + type + "' in " + path.string());
    }
    return make_seed(std::move(g), std::move(tau), std::move(sigma), std::move(phi), std::move(w),
                     std::move(scheme), tol);
}

/// Writes a seed as a JSON file plus companion GFLD files <stem>_*.gfld.
inline void save_seed(const std::filesystem::path& path, const Seed& seed) {
    const std::filesystem::path base = path.parent_path();
    const std::string stem = path.stem().string();
    ordered_json j;
    auto put = [&](const char* key, const auto& field) {
        const std::string fname = stem + "_" + key + ".gfld";
        write_gfld(base / fname, field);
        j[key] = fname;
    };
    put("g", seed.g.components());
    put("tau", seed.tau);
    put("sigma", seed.sigma);
    put("phi", seed.phi);
    put("w", seed.w);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, MethodA>) j["scheme"] = {{"type", "method-a"}};
            else if constexpr (std::is_same_v<T, MethodB>) j["scheme"] = {{"type", "method-b"}};
            else if constexpr (std::is_same_v<T, ThinSandwich>) {
                const std::string fname = stem + "_psi.gfld";
                write_gfld(base / fname, s.psi);
                j["scheme"] = {{"type", "thin-sandwich"}, {"psi", fname}};
            } else {
                j["scheme"] = {{"type", "power-rule"}, {"s", s.s}};
            }
        },
        seed.scheme);
    std::ofstream os(path);
    if (!os) throw validation_error("cannot open for writing: " + path.string());
    os << j.dump(2) << "\n";
}

}  // namespace ccgrav::io
