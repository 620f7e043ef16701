#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <atomic>
#include <cstddef>
#include <string>
#include <utility>

#include "ccgrav/field.hpp"
#include "ccgrav/field_ops.hpp"
#include "ccgrav/parallel.hpp"

namespace ccgrav {

/// Riemannian metric on the grid: a covariant SymTensor2Field together with a
/// cached pointwise inverse and sqrt(det g). Construction verifies symmetric
/// positive definiteness at every point via a Cholesky factorization; the
/// first failing point index is reported.
class MetricField {
public:
    explicit MetricField(SymTensor2Field g)
        : g_(std::move(g)),
          inv_(g_.grid(), Variance::contravariant),
          sqrt_det_(g_.grid()) {
        require_variance(g_, Variance::covariant, "MetricField");
        if (!g_.all_finite()) throw numeric_error("MetricField: non-finite metric entry");
        const int n = g_.grid().dim();
        const std::size_t npts = g_.grid().num_points();
        std::atomic<std::size_t> bad{npts};
        parallel_for(npts, [&](std::size_t lo, std::size_t hi) {
            Eigen::MatrixXd m(n, n);
            for (std::size_t p = lo; p < hi; ++p) {
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) m(i, j) = g_.at(p, i, j);
                Eigen::LLT<Eigen::MatrixXd> llt(m);
                if (llt.info() != Eigen::Success) {
                    std::size_t cur = bad.load();
                    while (p < cur && !bad.compare_exchange_weak(cur, p)) {}
                    continue;
                }
                Eigen::MatrixXd mi = llt.solve(Eigen::MatrixXd::Identity(n, n));
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j) inv_.at(p, i, j) = 0.5 * (mi(i, j) + mi(j, i));
                double det = 1.0;
                for (int i = 0; i < n; ++i) det *= llt.matrixL()(i, i);
                sqrt_det_[p] = det;  // prod of Cholesky diagonal = sqrt(det g)
            }
        });
        if (bad.load() != npts)
            throw numeric_error("MetricField: metric not positive definite at point " +
                                std::to_string(bad.load()));
    }

    const Grid& grid() const { return g_.grid(); }
    int dim() const { return g_.grid().dim(); }
    const SymTensor2Field& components() const { return g_; }
    const SymTensor2Field& inverse() const { return inv_; }
    const ScalarField& sqrt_det() const { return sqrt_det_; }

    double lo(std::size_t p, int i, int j) const { return g_.at(p, i, j); }
    double up(std::size_t p, int i, int j) const { return inv_.at(p, i, j); }

private:
    SymTensor2Field g_;
    SymTensor2Field inv_;
    ScalarField sqrt_det_;
};

/// The flat (identity) metric on a grid.
inline MetricField flat_metric(const Grid& grid) {
    SymTensor2Field g(grid, Variance::covariant);
    const int n = grid.dim();
    for (std::size_t p = 0; p < grid.num_points(); ++p)
        for (int i = 0; i < n; ++i) g.at(p, i, i) = 1.0;
    return MetricField(std::move(g));
}

}  // namespace ccgrav
