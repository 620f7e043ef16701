#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ccgrav/errors.hpp"
#include "ccgrav/grid.hpp"

namespace ccgrav {

enum class Variance { covariant, contravariant };

inline const char* variance_name(Variance v) {
    return v == Variance::covariant ? "covariant" : "contravariant";
}

/// Packed index for a symmetric pair (i,j), i<=j, in lexicographic order:
/// (0,0),(0,1),...,(0,n-1),(1,1),... Total n(n+1)/2 slots.
inline std::size_t sym2_index(int i, int j, int n) {
    if (i > j) std::swap(i, j);
    const std::size_t ii = static_cast<std::size_t>(i), nn = static_cast<std::size_t>(n);
    return ii * nn - ii * (ii - 1) / 2 + static_cast<std::size_t>(j - i);
}
inline std::size_t sym2_count(int n) {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1) / 2;
}

/// Packed index for an antisymmetric pair (i,j), i<j, lexicographic:
/// (0,1),(0,2),...,(0,n-1),(1,2),... Total n(n-1)/2 slots.
inline std::size_t pair_index(int i, int j, int n) {
    const std::size_t ii = static_cast<std::size_t>(i);
    return ii * static_cast<std::size_t>(n) - ii * (ii + 1) / 2 +
           static_cast<std::size_t>(j - i) - 1;
}
inline std::size_t pair_count(int n) {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
}

namespace detail {
// Component-innermost storage shared by all field ranks. ncomp may depend on
// the grid dimension, so it is computed from the already-constructed grid_.
class FieldBase {
public:
    using NcompFn = std::size_t (*)(const Grid&);

    FieldBase(Grid grid, NcompFn ncomp_of)
        : grid_(std::move(grid)), ncomp_(ncomp_of(grid_)),
          v_(grid_.num_points() * ncomp_, 0.0) {}

    const Grid& grid() const { return grid_; }
    std::size_t num_components() const { return ncomp_; }
    std::size_t size() const { return v_.size(); }
    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

protected:
    Grid grid_;
    std::size_t ncomp_;
    std::vector<double> v_;
};
}  // namespace detail

class ScalarField : public detail::FieldBase {
public:
    explicit ScalarField(Grid grid)
        : FieldBase(std::move(grid), [](const Grid&) -> std::size_t { return 1; }) {}
    ScalarField(Grid grid, double fill) : ScalarField(std::move(grid)) {
        for (auto& x : v_) x = fill;
    }
    double& operator[](std::size_t p) { return v_[p]; }
    double operator[](std::size_t p) const { return v_[p]; }
};

/// Rank-1 field: one-form (covariant) or vector (contravariant). The variance
/// tag is fixed at construction.
class Rank1Field : public detail::FieldBase {
public:
    Rank1Field(Grid grid, Variance var)
        : FieldBase(std::move(grid),
                    [](const Grid& g) { return static_cast<std::size_t>(g.dim()); }),
          var_(var) {}
    Variance variance() const { return var_; }
    double& at(std::size_t p, int i) { return v_[p * ncomp_ + static_cast<std::size_t>(i)]; }
    double at(std::size_t p, int i) const { return v_[p * ncomp_ + static_cast<std::size_t>(i)]; }

private:
    Variance var_;
};

inline Rank1Field make_one_form(Grid grid) { return Rank1Field(std::move(grid), Variance::covariant); }
inline Rank1Field make_vector(Grid grid) { return Rank1Field(std::move(grid), Variance::contravariant); }

using OneFormField = Rank1Field;
using VectorField = Rank1Field;

/// Full rank-2 field, no symmetry assumed (e.g. nabla_i W_j). Both indices
/// share the variance tag.
class Rank2Field : public detail::FieldBase {
public:
    Rank2Field(Grid grid, Variance var)
        : FieldBase(std::move(grid),
                    [](const Grid& g) {
                        const auto n = static_cast<std::size_t>(g.dim());
                        return n * n;
                    }),
          var_(var), n_(grid_.dim()) {}
    Variance variance() const { return var_; }
    double& at(std::size_t p, int i, int j) {
        return v_[p * ncomp_ + static_cast<std::size_t>(i * n_ + j)];
    }
    double at(std::size_t p, int i, int j) const {
        return v_[p * ncomp_ + static_cast<std::size_t>(i * n_ + j)];
    }

private:
    Variance var_;
    int n_;
};

/// Symmetric rank-2 field with shared (i,j)/(j,i) storage, so h_ij == h_ji
/// holds exactly. Both indices covariant or both contravariant.
class SymTensor2Field : public detail::FieldBase {
public:
    SymTensor2Field(Grid grid, Variance var)
        : FieldBase(std::move(grid), [](const Grid& g) { return sym2_count(g.dim()); }),
          var_(var), n_(grid_.dim()) {}
    Variance variance() const { return var_; }
    double& at(std::size_t p, int i, int j) { return v_[p * ncomp_ + sym2_index(i, j, n_)]; }
    double at(std::size_t p, int i, int j) const { return v_[p * ncomp_ + sym2_index(i, j, n_)]; }
    double& packed(std::size_t p, std::size_t c) { return v_[p * ncomp_ + c]; }
    double packed(std::size_t p, std::size_t c) const { return v_[p * ncomp_ + c]; }

private:
    Variance var_;
    int n_;
};

/// Rank-3 field, fully stored, all indices one variance (e.g. nabla_i K_jk).
class Rank3Field : public detail::FieldBase {
public:
    Rank3Field(Grid grid, Variance var)
        : FieldBase(std::move(grid),
                    [](const Grid& g) {
                        const auto n = static_cast<std::size_t>(g.dim());
                        return n * n * n;
                    }),
          var_(var), n_(grid_.dim()) {}
    Variance variance() const { return var_; }
    double& at(std::size_t p, int i, int j, int k) {
        return v_[p * ncomp_ + static_cast<std::size_t>((i * n_ + j) * n_ + k)];
    }
    double at(std::size_t p, int i, int j, int k) const {
        return v_[p * ncomp_ + static_cast<std::size_t>((i * n_ + j) * n_ + k)];
    }

private:
    Variance var_;
    int n_;
};

/// Rank-4 field with the algebraic Riemann storage symmetries baked in:
/// antisymmetric in (ij) and (kl), symmetric under pair exchange. The first
/// Bianchi identity is *not* imposed by storage. Components are addressed by
/// antisymmetric pairs P=(i<j), Q=(k<l); only P<=Q is stored.
class Riemann4Field : public detail::FieldBase {
public:
    explicit Riemann4Field(Grid grid)
        : FieldBase(std::move(grid),
                    [](const Grid& g) {
                        const std::size_t np = pair_count(g.dim());
                        return np * (np + 1) / 2;
                    }),
          n_(grid_.dim()), np_(pair_count(grid_.dim())) {}

    std::size_t num_pairs() const { return np_; }

    double get(std::size_t p, int i, int j, int k, int l) const {
        if (i == j || k == l) return 0.0;
        double sign = 1.0;
        if (i > j) { std::swap(i, j); sign = -sign; }
        if (k > l) { std::swap(k, l); sign = -sign; }
        std::size_t P = pair_index(i, j, n_), Q = pair_index(k, l, n_);
        if (P > Q) std::swap(P, Q);
        return sign * v_[p * ncomp_ + packed(P, Q)];
    }
    /// Canonical write access: requires i<j, k<l, pair(i,j) <= pair(k,l).
    double& canonical(std::size_t p, int i, int j, int k, int l) {
        return v_[p * ncomp_ + packed(pair_index(i, j, n_), pair_index(k, l, n_))];
    }

private:
    std::size_t packed(std::size_t P, std::size_t Q) const {
        return P * np_ - P * (P - 1) / 2 + (Q - P);  // upper triangle, P<=Q
    }
    int n_;
    std::size_t np_;
};

}  // namespace ccgrav
