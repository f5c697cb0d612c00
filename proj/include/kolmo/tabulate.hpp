#pragma once

// Two-dimensional densities tabulated at tensor Gauss-Legendre nodes on
// panels of a rectangle, with the masses, marginal distribution functions
// and box probabilities that the goodness-of-fit tests need.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "kolmo/core.hpp"

namespace kolmo::density {

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order) {
    if (order < 1) throw DomainError("gauss_legendre: order must be positive");
    std::vector<double> x(order), w(order);
    for (int i = 0; i < order; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[order - 1 - i] = z;
        w[order - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

class TabulatedDensity {
public:
    /// Tabulates f(u, v) on the panels given by the cut lists.
    template <class F>
    static TabulatedDensity build(F&& f, std::vector<double> u_cuts, std::vector<double> v_cuts, int order = 8) {
        TabulatedDensity t;
        auto check = [](const std::vector<double>& c) {
            if (c.size() < 2) throw DomainError("TabulatedDensity: need at least one panel per axis");
            for (std::size_t i = 1; i < c.size(); ++i)
                if (!(c[i] > c[i - 1])) throw DomainError("TabulatedDensity: cuts must increase strictly");
        };
        check(u_cuts);
        check(v_cuts);
        t.cuts_[0] = std::move(u_cuts);
        t.cuts_[1] = std::move(v_cuts);
        t.order_ = order;
        std::tie(t.gx_, t.gw_) = gauss_legendre(order);
        for (int a = 0; a < 2; ++a) {
            const auto& c = t.cuts_[a];
            for (std::size_t p = 0; p + 1 < c.size(); ++p) {
                const double mid = 0.5 * (c[p] + c[p + 1]), half = 0.5 * (c[p + 1] - c[p]);
                for (int i = 0; i < order; ++i) {
                    t.nodes_[a].push_back(mid + half * t.gx_[i]);
                    t.weights_[a].push_back(half * t.gw_[i]);
                }
            }
        }
        const std::size_t nu = t.nodes_[0].size(), nv = t.nodes_[1].size();
        t.values_.resize(nu * nv);
        for (std::size_t i = 0; i < nu; ++i)
            for (std::size_t j = 0; j < nv; ++j) t.values_[i * nv + j] = f(t.nodes_[0][i], t.nodes_[1][j]);
        t.finish();
        return t;
    }

    /// Integral over the tabulated rectangle.
    double mass() const noexcept { return mass_; }

    const std::vector<double>& cuts(int coord) const { return cuts_.at(coord); }
    const std::vector<double>& nodes(int coord) const { return nodes_.at(coord); }
    double value(std::size_t i, std::size_t j) const { return values_[i * nodes_[1].size() + j]; }

    /// Normalized marginal density of coordinate `coord` at its nodes.
    const std::vector<double>& marginal(int coord) const { return marginal_.at(coord); }

    /// Normalized marginal distribution function of one coordinate.
    double marginal_cdf(int coord, double x) const {
        const auto& c = cuts_.at(coord);
        if (x <= c.front()) return 0.0;
        if (x >= c.back()) return 1.0;
        const std::size_t p = std::upper_bound(c.begin(), c.end(), x) - c.begin() - 1;
        return panel_cdf_[coord][p] + partial(coord, p, x);
    }

    /// Normalized mass of [u0, u1] x [v0, v1]; the edges must be cuts.
    double box_mass(double u0, double u1, double v0, double v1) const {
        const auto iu = panel_range(0, u0, u1), iv = panel_range(1, v0, v1);
        const std::size_t nv = nodes_[1].size();
        double s = 0.0;
        for (std::size_t i = iu.first * order_; i < iu.second * order_; ++i)
            for (std::size_t j = iv.first * order_; j < iv.second * order_; ++j)
                s += weights_[0][i] * weights_[1][j] * values_[i * nv + j];
        return s / mass_;
    }

private:
    void finish() {
        const std::size_t nu = nodes_[0].size(), nv = nodes_[1].size();
        marginal_[0].assign(nu, 0.0);
        marginal_[1].assign(nv, 0.0);
        mass_ = 0.0;
        for (std::size_t i = 0; i < nu; ++i)
            for (std::size_t j = 0; j < nv; ++j) {
                const double f = values_[i * nv + j];
                marginal_[0][i] += weights_[1][j] * f;
                marginal_[1][j] += weights_[0][i] * f;
                mass_ += weights_[0][i] * weights_[1][j] * f;
            }
        if (!(mass_ > 0.0)) throw DomainError("TabulatedDensity: non-positive total mass");
        for (int a = 0; a < 2; ++a) {
            for (double& m : marginal_[a]) m /= mass_;
            panel_cdf_[a].assign(1, 0.0);
            for (std::size_t p = 0; p + 1 < cuts_[a].size(); ++p) {
                double s = 0.0;
                for (int i = 0; i < order_; ++i) s += weights_[a][p * order_ + i] * marginal_[a][p * order_ + i];
                panel_cdf_[a].push_back(panel_cdf_[a].back() + s);
            }
        }
    }

    // Integral of the panel's interpolating polynomial from the panel start to x.
    double partial(int a, std::size_t p, double x) const {
        const double lo = cuts_[a][p], hi = cuts_[a][p + 1];
        const double half = 0.5 * (hi - lo);
        const double xm = (x - lo) / (hi - lo); // fraction of the panel
        double s = 0.0;
        for (int k = 0; k < order_; ++k) {
            const double y = -1.0 + xm * (1.0 + gx_[k]); // node of [-1, -1 + 2 xm]
            s += gw_[k] * xm * interpolate(a, p, y);
        }
        return s * half;
    }

    double interpolate(int a, std::size_t p, double y) const {
        double s = 0.0;
        for (int i = 0; i < order_; ++i) {
            double l = 1.0;
            for (int j = 0; j < order_; ++j)
                if (j != i) l *= (y - gx_[j]) / (gx_[i] - gx_[j]);
            s += l * marginal_[a][p * order_ + i];
        }
        return s;
    }

    std::pair<std::size_t, std::size_t> panel_range(int a, double lo, double hi) const {
        const auto& c = cuts_[a];
        const auto i0 = std::find(c.begin(), c.end(), lo), i1 = std::find(c.begin(), c.end(), hi);
        if (i0 == c.end() || i1 == c.end() || !(i1 > i0))
            throw DomainError("TabulatedDensity::box_mass: box edges must be increasing cut points");
        return {static_cast<std::size_t>(i0 - c.begin()), static_cast<std::size_t>(i1 - c.begin())};
    }

    std::array<std::vector<double>, 2> cuts_, nodes_, weights_, marginal_, panel_cdf_;
    std::vector<double> values_;
    std::vector<double> gx_, gw_;
    int order_ = 8;
    double mass_ = 0.0;
};

} // namespace kolmo::density
