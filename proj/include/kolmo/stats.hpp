#pragma once

// Goodness-of-fit statistics: weighted Kolmogorov-Smirnov distances and a
// two-dimensional Pearson chi-square test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include "json.hpp"

#include "kolmo/core.hpp"

namespace kolmo::stats {

/// A 1-D or 2-D sample with optional importance weights.
struct EmpiricalDist {
    int dimension = 1;
    std::vector<double> x;
    std::vector<double> y;       ///< second coordinate when dimension == 2
    std::vector<double> weights; ///< empty means unit weights

    static EmpiricalDist one_d(std::vector<double> xs, std::vector<double> ws = {}) {
        EmpiricalDist d;
        d.x = std::move(xs);
        d.weights = std::move(ws);
        d.validate();
        return d;
    }
    static EmpiricalDist two_d(std::vector<double> xs, std::vector<double> ys, std::vector<double> ws = {}) {
        EmpiricalDist d;
        d.dimension = 2;
        d.x = std::move(xs);
        d.y = std::move(ys);
        d.weights = std::move(ws);
        d.validate();
        return d;
    }

    std::size_t size() const noexcept { return x.size(); }
    double weight(std::size_t i) const noexcept { return weights.empty() ? 1.0 : weights[i]; }

    /// Kish effective sample size (sum w)^2 / sum w^2.
    double effective_size() const {
        if (weights.empty()) return static_cast<double>(x.size());
        double s = 0.0, s2 = 0.0;
        for (double w : weights) {
            s += w;
            s2 += w * w;
        }
        return s2 > 0.0 ? s * s / s2 : 0.0;
    }

    void validate() const {
        if (dimension == 2 && y.size() != x.size()) throw DomainError("EmpiricalDist: coordinate sizes differ");
        if (!weights.empty() && weights.size() != x.size()) throw DomainError("EmpiricalDist: weight count mismatch");
        for (double w : weights)
            if (!(w >= 0.0)) throw DomainError("EmpiricalDist: weights must be non-negative");
    }
};

struct TestReport {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    std::optional<double> p_value;
    bool pass = false;
    nlohmann::json metadata = nlohmann::json::object();
};

inline void to_json(nlohmann::json& j, const TestReport& r) {
    j = nlohmann::json{{"name", r.name}, {"statistic", r.statistic}, {"threshold", r.threshold}, {"pass", r.pass},
                       {"metadata", r.metadata}};
    j["p_value"] = r.p_value ? nlohmann::json(*r.p_value) : nlohmann::json(nullptr);
}

/// Kolmogorov limit law: P(sqrt(n) D > lambda).
inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// p-value of a KS distance d at effective size n (Stephens' correction).
inline double ks_p_value(double d, double n) {
    const double rn = std::sqrt(n);
    return kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
}

/// Smallest distance rejected at `level` for effective size n.
inline double ks_critical(double n, double level) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ks_p_value(mid, n) > level ? lo : hi) = mid;
    }
    return hi;
}

namespace detail {

inline std::vector<std::pair<double, double>> sorted_weighted(const EmpiricalDist& a) {
    if (a.size() == 0) throw DomainError("ks_distance: empty sample");
    std::vector<std::pair<double, double>> v(a.size());
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        v[i] = {a.x[i], a.weight(i)};
        total += v[i].second;
    }
    if (!(total > 0.0)) throw DomainError("ks_distance: total weight is zero");
    for (auto& p : v) p.second /= total;
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace detail

/// One-sample KS distance against an analytic CDF.
inline TestReport ks_distance(const EmpiricalDist& a, const std::function<double(double)>& cdf, double level = 0.01) {
    const auto v = detail::sorted_weighted(a);
    double acc = 0.0, d = 0.0;
    for (std::size_t i = 0; i < v.size();) {
        const double x = v[i].first;
        const double f = cdf(x);
        d = std::max(d, std::abs(acc - f));
        while (i < v.size() && v[i].first == x) acc += v[i++].second;
        d = std::max(d, std::abs(acc - f));
    }
    TestReport r;
    r.name = "ks_one_sample";
    r.statistic = d;
    const double n = a.effective_size();
    r.p_value = ks_p_value(d, n);
    r.threshold = ks_critical(n, level);
    r.pass = d <= r.threshold;
    r.metadata = {{"effective_n", n}, {"level", level}};
    return r;
}

/// Two-sample KS distance.
inline TestReport ks_distance(const EmpiricalDist& a, const EmpiricalDist& b, double level = 0.01) {
    const auto va = detail::sorted_weighted(a), vb = detail::sorted_weighted(b);
    double fa = 0.0, fb = 0.0, d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < va.size() || j < vb.size()) {
        const double x = j == vb.size() || (i < va.size() && va[i].first <= vb[j].first) ? va[i].first : vb[j].first;
        while (i < va.size() && va[i].first == x) fa += va[i++].second;
        while (j < vb.size() && vb[j].first == x) fb += vb[j++].second;
        d = std::max(d, std::abs(fa - fb));
    }
    const double na = a.effective_size(), nb = b.effective_size();
    const double n = na * nb / (na + nb);
    TestReport r;
    r.name = "ks_two_sample";
    r.statistic = d;
    r.p_value = ks_p_value(d, n);
    r.threshold = ks_critical(n, level);
    r.pass = d <= r.threshold;
    r.metadata = {{"effective_n", n}, {"level", level}};
    return r;
}

/// Rectangular binning; the complement of the grid is one extra cell.
struct BinGrid {
    std::vector<double> x_edges;
    std::vector<double> y_edges;

    void validate() const {
        auto ok = [](const std::vector<double>& e) {
            if (e.size() < 2) return false;
            for (std::size_t i = 1; i < e.size(); ++i)
                if (!(e[i] > e[i - 1])) return false;
            return true;
        };
        if (!ok(x_edges) || !ok(y_edges)) throw DomainError("BinGrid: edges must be strictly increasing, >= 2 each");
    }

    static BinGrid uniform(double x0, double x1, std::size_t nx, double y0, double y1, std::size_t ny) {
        BinGrid g;
        for (std::size_t i = 0; i <= nx; ++i) g.x_edges.push_back(x0 + (x1 - x0) * i / nx);
        for (std::size_t i = 0; i <= ny; ++i) g.y_edges.push_back(y0 + (y1 - y0) * i / ny);
        return g;
    }
};

/// Mass of a normalized density on each grid cell by 8x8 Gauss-Legendre.
inline std::vector<double> cell_masses(const std::function<double(double, double)>& density, const BinGrid& g) {
    static constexpr double xs[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
    static constexpr double ws[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    const std::size_t nx = g.x_edges.size() - 1, ny = g.y_edges.size() - 1;
    std::vector<double> m(nx * ny, 0.0);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) {
            const double cx = 0.5 * (g.x_edges[i] + g.x_edges[i + 1]), hx = 0.5 * (g.x_edges[i + 1] - g.x_edges[i]);
            const double cy = 0.5 * (g.y_edges[j] + g.y_edges[j + 1]), hy = 0.5 * (g.y_edges[j + 1] - g.y_edges[j]);
            double s = 0.0;
            for (int a = 0; a < 8; ++a)
                for (int b = 0; b < 8; ++b) {
                    const double ox = (a < 4 ? -xs[3 - a] : xs[a - 4]), wx = (a < 4 ? ws[3 - a] : ws[a - 4]);
                    const double oy = (b < 4 ? -xs[3 - b] : xs[b - 4]), wy = (b < 4 ? ws[3 - b] : ws[b - 4]);
                    s += wx * wy * density(cx + hx * ox, cy + hy * oy);
                }
            m[i * ny + j] = s * hx * hy;
        }
    return m;
}

/// Pearson chi-square of a 2-D sample against cell probabilities (the
/// outside-the-grid cell receives 1 - sum). Cells with expected count below
/// 5 are merged with their successors in raster order.
inline TestReport chi_square_2d(const EmpiricalDist& s, const std::vector<double>& cell_probs, const BinGrid& g,
                                double level = 0.01) {
    g.validate();
    if (s.dimension != 2) throw DomainError("chi_square_2d: needs a 2-D sample");
    const std::size_t nx = g.x_edges.size() - 1, ny = g.y_edges.size() - 1;
    if (cell_probs.size() != nx * ny) throw DomainError("chi_square_2d: probability count does not match the grid");
    std::vector<double> obs(nx * ny + 1, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double w = s.weight(k);
        total += w;
        const auto ix = std::upper_bound(g.x_edges.begin(), g.x_edges.end(), s.x[k]) - g.x_edges.begin() - 1;
        const auto iy = std::upper_bound(g.y_edges.begin(), g.y_edges.end(), s.y[k]) - g.y_edges.begin() - 1;
        if (ix < 0 || iy < 0 || ix >= static_cast<long>(nx) || iy >= static_cast<long>(ny))
            obs[nx * ny] += w;
        else
            obs[ix * ny + iy] += w;
    }
    if (!(total > 0.0)) throw DomainError("chi_square_2d: empty sample");
    std::vector<double> prob(cell_probs);
    prob.push_back(std::max(0.0, 1.0 - std::accumulate(cell_probs.begin(), cell_probs.end(), 0.0)));
    // Weighted samples are rescaled to their effective size.
    const double n = s.effective_size();
    const double scale = n / total;
    double stat = 0.0, eacc = 0.0, oacc = 0.0;
    int cells = 0;
    for (std::size_t k = 0; k < prob.size(); ++k) {
        eacc += prob[k] * n;
        oacc += obs[k] * scale;
        if (eacc >= 5.0 || k + 1 == prob.size()) {
            if (eacc > 0.0) {
                stat += (oacc - eacc) * (oacc - eacc) / eacc;
                ++cells;
            }
            eacc = oacc = 0.0;
        }
    }
    if (cells < 2) throw DomainError("chi_square_2d: fewer than two usable cells");
    boost::math::chi_squared dist(cells - 1);
    TestReport r;
    r.name = "chi_square_2d";
    r.statistic = stat;
    r.p_value = boost::math::cdf(boost::math::complement(dist, stat));
    r.threshold = boost::math::quantile(boost::math::complement(dist, level));
    r.pass = *r.p_value > level;
    r.metadata = {{"cells", cells}, {"effective_n", n}, {"level", level}};
    return r;
}

} // namespace kolmo::stats
