#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ccgrav/errors.hpp"

namespace ccgrav {

/// Uniform periodic lattice on a flat n-torus, n >= 3. Point (i_1..i_n) sits
/// at x_a = i_a * L_a / m_a. Flattened point indices are row-major: the last
/// axis varies fastest.
class Grid {
public:
    Grid(std::vector<std::size_t> shape, std::vector<double> periods)
        : shape_(std::move(shape)), periods_(std::move(periods)) {
        if (shape_.size() < 3)
            throw validation_error("Grid: dimension must be >= 3, got " +
                                   std::to_string(shape_.size()));
        if (periods_.size() != shape_.size())
            throw validation_error("Grid: shape/periods rank mismatch");
        for (std::size_t a = 0; a < shape_.size(); ++a) {
            if (shape_[a] < 4 || shape_[a] % 2 != 0)
                throw validation_error("Grid: axis " + std::to_string(a) +
                                       " extent must be even and >= 4");
            if (!(periods_[a] > 0.0))
                throw validation_error("Grid: axis " + std::to_string(a) +
                                       " period must be positive");
        }
        npts_ = 1;
        for (auto m : shape_) npts_ *= m;
    }

    int dim() const { return static_cast<int>(shape_.size()); }
    std::size_t num_points() const { return npts_; }
    std::size_t extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    double period(int axis) const { return periods_[static_cast<std::size_t>(axis)]; }
    double spacing(int axis) const { return period(axis) / static_cast<double>(extent(axis)); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    const std::vector<double>& periods() const { return periods_; }

    double volume() const {
        double v = 1.0;
        for (double L : periods_) v *= L;
        return v;
    }
    double cell_volume() const { return volume() / static_cast<double>(npts_); }

    std::size_t flatten(std::span<const std::size_t> idx) const {
        std::size_t p = 0;
        for (std::size_t a = 0; a < shape_.size(); ++a) p = p * shape_[a] + idx[a];
        return p;
    }
    void unflatten(std::size_t p, std::span<std::size_t> idx) const {
        for (std::size_t a = shape_.size(); a-- > 0;) {
            idx[a] = p % shape_[a];
            p /= shape_[a];
        }
    }
    double coord(int axis, std::size_t i) const {
        return static_cast<double>(i) * spacing(axis);
    }

    /// Signed Fourier mode index for position j along an axis of extent m:
    /// 0,1,..,m/2,-(m/2-1),..,-1. (j == m/2 is the Nyquist mode.)
    static long signed_mode(std::size_t j, std::size_t m) {
        return j <= m / 2 ? static_cast<long>(j)
                          : static_cast<long>(j) - static_cast<long>(m);
    }

    bool operator==(const Grid& o) const {
        return shape_ == o.shape_ && periods_ == o.periods_;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }

    std::string describe() const {
        std::string s;
        for (std::size_t a = 0; a < shape_.size(); ++a) {
            if (a) s += "x";
            s += std::to_string(shape_[a]);
        }
        return s;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> periods_;
    std::size_t npts_ = 0;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (a != b) throw validation_error(std::string(where) + ": fields live on different grids");
}

}  // namespace ccgrav
