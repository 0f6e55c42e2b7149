// laplace.hpp: 2D finite-difference potential of two coplanar strips.
//
// Cross-section of two long electrodes lying in the plane y = 0 at potentials
// +V/2 (x < 0) and -V/2 (x > 0), separated by a gap s. The problem is odd in
// x, so only x >= 0 is stored with phi = 0 on the symmetry line. Off the
// electrodes the plane y = 0 is a symmetry plane (Neumann). All other edges of
// the box are grounded.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ionlc/core.hpp"

namespace ionlc {

struct StripProblem {
    double island_side;   // R, width of each strip (m)
    double gap;           // s (m)
    double spacing;       // grid step (m)
    double box_factor = 10.0;  // box half-width = box_factor * (2R + s)/2
};

class StripGrid {
public:
    StripGrid(const StripProblem& p) : spacing_(p.spacing) {
        require(p.island_side > 0 && p.gap > 0 && p.spacing > 0, "StripGrid: sizes must be positive");
        const double extent = 2.0 * p.island_side + p.gap;
        const double half = 0.5 * p.box_factor * extent;
        const long n = std::lround(half / p.spacing) + 1;
        require(n >= 8, "StripGrid: box too small for the requested spacing");
        require(n <= 20000, "StripGrid: grid too fine");
        nx_ = static_cast<std::size_t>(n);
        ny_ = nx_;
        phi_.assign(nx_ * ny_, 0.0);
        fixed_.assign(nx_ * ny_, 0);
        electrode_lo_ = static_cast<std::size_t>(std::lround(0.5 * p.gap / p.spacing));
        electrode_hi_ = static_cast<std::size_t>(std::lround((0.5 * p.gap + p.island_side) / p.spacing));
        electrode_hi_ = std::min(electrode_hi_, nx_ - 2);
        require(electrode_lo_ <= electrode_hi_, "StripGrid: electrode narrower than one cell");
        // grounded side walls and lid; phi is already zero there
        for (std::size_t k = 0; k < fixed_.size(); ++k) {
            const std::size_t i = k % nx_;
            if (i == 0 || i == nx_ - 1 || k / nx_ == ny_ - 1) fixed_[k] = 1;
        }
        const auto lo = static_cast<std::ptrdiff_t>(electrode_lo_);
        const auto width = static_cast<std::ptrdiff_t>(electrode_hi_ - electrode_lo_ + 1);
        std::fill_n(phi_.begin() + lo, width, -0.5);
        std::fill_n(fixed_.begin() + lo, width, 1);
    }

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    double spacing() const { return spacing_; }
    double& at(std::size_t i, std::size_t j) { return phi_[j * nx_ + i]; }
    double at(std::size_t i, std::size_t j) const { return phi_[j * nx_ + i]; }
    bool is_fixed(std::size_t i, std::size_t j) const { return fixed_[j * nx_ + i] != 0; }

    // Bilinear sample of phi at physical (x, y), x and y >= 0.
    double sample(double x, double y) const {
        const double fx = std::clamp(x / spacing_, 0.0, static_cast<double>(nx_ - 1));
        const double fy = std::clamp(y / spacing_, 0.0, static_cast<double>(ny_ - 1));
        const auto i = std::min(static_cast<std::size_t>(fx), nx_ - 2);
        const auto j = std::min(static_cast<std::size_t>(fy), ny_ - 2);
        const double u = fx - static_cast<double>(i), v = fy - static_cast<double>(j);
        return (1 - u) * (1 - v) * at(i, j) + u * (1 - v) * at(i + 1, j) + (1 - u) * v * at(i, j + 1) +
               u * v * at(i + 1, j + 1);
    }

    // Gauss-Seidel residual at a free node: |mean(neighbours) - phi|.
    double local_residual(std::size_t i, std::size_t j) const {
        return std::abs(neighbour_mean(i, j) - at(i, j));
    }

    double max_residual() const {
        double r = 0.0;
        for (std::size_t j = 0; j < ny_; ++j)
            for (std::size_t i = 0; i < nx_; ++i)
                if (!is_fixed(i, j)) r = std::max(r, local_residual(i, j));
        return r;
    }

    // One red-black SOR sweep; returns the largest update.
    double sweep(double omega) {
        double biggest = 0.0;
        for (int colour = 0; colour < 2; ++colour) {
            for (std::size_t j = 0; j < ny_; ++j) {
                for (std::size_t i = (j + colour) % 2; i < nx_; i += 2) {
                    if (is_fixed(i, j)) continue;
                    const double delta = neighbour_mean(i, j) - at(i, j);
                    at(i, j) += omega * delta;
                    biggest = std::max(biggest, std::abs(delta));
                }
            }
        }
        return biggest;
    }

    // Initial guess from a coarser solution; boundary values stay pinned.
    void interpolate_from(const StripGrid& coarse) {
        for (std::size_t j = 0; j < ny_; ++j)
            for (std::size_t i = 0; i < nx_; ++i)
                if (!is_fixed(i, j))
                    at(i, j) = coarse.sample(static_cast<double>(i) * spacing_, static_cast<double>(j) * spacing_);
    }

private:
    double neighbour_mean(std::size_t i, std::size_t j) const {
        const double south = j == 0 ? at(i, 1) : at(i, j - 1);  // mirror across y = 0
        return 0.25 * (at(i - 1, j) + at(i + 1, j) + at(i, j + 1) + south);
    }

    double spacing_;
    std::size_t nx_ = 0, ny_ = 0;
    std::size_t electrode_lo_ = 0, electrode_hi_ = 0;
    std::vector<double> phi_;
    std::vector<char> fixed_;
};

struct LaplaceReport {
    double residual = 0.0;
    std::size_t sweeps = 0;
    std::size_t levels = 0;
};

// Nested-iteration SOR: solves on successively finer grids, each seeded with
// the previous level, to a max Gauss-Seidel residual below `tolerance`.
inline StripGrid solve_strips(const StripProblem& p, double tolerance, LaplaceReport* report = nullptr,
                              std::size_t max_sweeps = 200000) {
    std::vector<double> spacings{p.spacing};
    const double half = 0.5 * p.box_factor * (2.0 * p.island_side + p.gap);
    while (half / (spacings.back() * 2.0) >= 48.0) spacings.push_back(spacings.back() * 2.0);
    std::reverse(spacings.begin(), spacings.end());

    LaplaceReport rep;
    std::vector<StripGrid> levels;
    for (std::size_t k = 0; k < spacings.size(); ++k) {
        StripProblem q = p;
        q.spacing = spacings[k];
        StripGrid grid(q);
        if (!levels.empty()) grid.interpolate_from(levels.back());
        const bool finest = k + 1 == spacings.size();
        const double tol = finest ? tolerance : std::max(tolerance, 1e-6);
        const double omega = 2.0 / (1.0 + std::sin(kPi / static_cast<double>(grid.nx())));
        std::size_t n = 0;
        double r = grid.max_residual();
        while (r >= tol) {
            if (n >= max_sweeps)
                throw NumericalFailure("laplace: SOR did not reach residual " + std::to_string(tol) +
                                       " (at " + std::to_string(r) + ")");
            for (int inner = 0; inner < 20; ++inner) grid.sweep(omega);
            n += 20;
            r = grid.max_residual();
        }
        rep.sweeps += n;
        rep.residual = r;
        levels.push_back(std::move(grid));
        if (levels.size() > 1) levels.erase(levels.begin());
    }
    rep.levels = spacings.size();
    if (report) *report = rep;
    return std::move(levels.back());
}

}  // namespace ionlc
