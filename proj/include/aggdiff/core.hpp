#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aggdiff/quadrature.hpp"

namespace aggdiff {

/// Surface area of the unit sphere S^{d-1} in R^d: omega_2 = 2*pi, omega_3 = 4*pi,
/// omega_4 = 2*pi^2, via the recurrence omega_d = 2*pi/(d-2) * omega_{d-2}.
inline double unit_sphere_area(int d) {
    if (d < 1) throw std::invalid_argument("unit_sphere_area: dimension must be >= 1");
    double w1 = 2.0;        // S^0, two points
    double w2 = 2.0 * M_PI; // S^1
    if (d == 1) return w1;
    if (d == 2) return w2;
    double w = (d % 2 == 1) ? w1 : w2;
    for (int k = (d % 2 == 1) ? 3 : 4; k <= d; k += 2)
        w *= 2.0 * M_PI / (k - 2);
    return w;
}

/// Model parameters. m = 2d/(d+2s) is derived, never set directly.
struct ModelParams {
    int d;          // spatial dimension, >= 3
    double s;       // interaction order, 1 < s < d/2
    double m;       // diffusion exponent 2d/(d+2s), in (1, 2-2s/d)
    double epsilon; // kernel/diffusion regularization length, >= 0

    double beta() const { return d - 2.0 * s; }
};

inline ModelParams make_params(int d, double s, double epsilon = 0.0) {
    if (d < 3)
        throw std::invalid_argument("make_params: dimension d must be an integer >= 3, got " + std::to_string(d));
    if (!(s > 1.0) || !(s < 0.5 * d))
        throw std::invalid_argument("make_params: interaction order s must satisfy 1 < s < d/2, got s = " +
                                    std::to_string(s) + " with d = " + std::to_string(d));
    if (!(epsilon >= 0.0))
        throw std::invalid_argument("make_params: regularization epsilon must be >= 0, got " +
                                    std::to_string(epsilon));
    ModelParams p{d, s, 2.0 * d / (d + 2.0 * s), epsilon};
    // 1 < m < 2 - 2s/d holds automatically on the admissible (d, s) range
    if (!(p.m > 1.0 && p.m < 2.0 - 2.0 * s / d))
        throw std::logic_error("make_params: derived exponent m out of range");
    return p;
}

/// Uniform cell-centered radial mesh with d-dimensional volume weights.
/// Edges 0 = e_0 < e_1 < ... < e_n = r_max, centers at edge midpoints,
/// vol_i = omega_d (e_{i+1}^d - e_i^d)/d, edge areas omega_d e^{d-1}.
struct RadialGrid {
    int dim = 0;
    int n = 0;
    double r_max = 0.0;
    double dr = 0.0;
    double omega_d = 0.0;
    std::vector<double> edges;
    std::vector<double> centers;
    std::vector<double> vol;
    std::vector<double> edge_area;

    bool same_layout(const RadialGrid& o) const {
        return dim == o.dim && n == o.n && r_max == o.r_max;
    }
};

inline RadialGrid make_grid(double r_max, int n, int d) {
    if (!(r_max > 0.0))
        throw std::invalid_argument("make_grid: r_max must be positive, got " + std::to_string(r_max));
    if (n < 1)
        throw std::invalid_argument("make_grid: cell count n must be >= 1, got " + std::to_string(n));
    if (d < 1)
        throw std::invalid_argument("make_grid: dimension must be >= 1, got " + std::to_string(d));
    RadialGrid g;
    g.dim = d;
    g.n = n;
    g.r_max = r_max;
    g.dr = r_max / n;
    g.omega_d = unit_sphere_area(d);
    g.edges.resize(n + 1);
    for (int i = 0; i <= n; ++i) g.edges[i] = r_max * static_cast<double>(i) / n;
    g.centers.resize(n);
    g.vol.resize(n);
    for (int i = 0; i < n; ++i) {
        g.centers[i] = 0.5 * (g.edges[i] + g.edges[i + 1]);
        g.vol[i] = g.omega_d * (std::pow(g.edges[i + 1], d) - std::pow(g.edges[i], d)) / d;
    }
    g.edge_area.resize(n + 1);
    for (int i = 0; i <= n; ++i) g.edge_area[i] = g.omega_d * std::pow(g.edges[i], d - 1);
    return g;
}

/// Nonnegative radial density tied to a grid. The grid is not owned and must
/// outlive the profile. Values are one number per cell (finite-volume cell data).
struct Profile {
    const RadialGrid* grid = nullptr;
    std::vector<double> values;

    Profile() = default;
    explicit Profile(const RadialGrid& g) : grid(&g), values(static_cast<std::size_t>(g.n), 0.0) {}
    Profile(const RadialGrid& g, std::vector<double> v) : grid(&g), values(std::move(v)) {
        if (values.size() != static_cast<std::size_t>(g.n))
            throw std::invalid_argument("Profile: value count does not match grid cell count");
    }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
};

inline void require_same_grid(const Profile& a, const Profile& b, const char* where) {
    if (!a.grid || !b.grid || !a.grid->same_layout(*b.grid))
        throw std::invalid_argument(std::string(where) + ": profiles live on different grids");
}

/// Sum_i f(u_i) vol_i. Realizes every radial integral in the artifact;
/// no quadrature beyond the cell sum.
template <class F>
double integrate(const Profile& p, F&& f) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p.values.size(); ++i)
        sum += f(p.values[i]) * p.grid->vol[i];
    return sum;
}

inline double mass(const Profile& p) {
    return integrate(p, [](double t) { return t; });
}

/// (integrate t^q)^{1/q}; q = inf gives max_i u_i. Requires q >= 1.
inline double lp_norm(const Profile& p, double q) {
    if (std::isinf(q)) {
        double mx = 0.0;
        for (double v : p.values) mx = std::max(mx, v);
        return mx;
    }
    if (!(q >= 1.0)) throw std::invalid_argument("lp_norm: exponent q must be >= 1 (or inf)");
    const double integ = integrate(p, [q](double t) { return std::pow(t, q); });
    return std::pow(integ, 1.0 / q);
}

/// Render an analytic density as exact volume-weighted cell averages
/// (per-cell Gauss-Legendre). Cell averages keep every linear functional of
/// the profile (mass, potential, second moment) second-order clean; point
/// samples at centers would leave an O(dr^2) volume-weight mismatch that the
/// identity checks cannot afford.
template <class F>
Profile render_cell_average(const RadialGrid& g, F&& f, int order = 8) {
    static_assert(std::is_invocable_r_v<double, F, double>);
    const GaussLegendre q = gauss_legendre(order);
    Profile p(g);
    for (int i = 0; i < g.n; ++i) {
        const double a = g.edges[i], b = g.edges[i + 1];
        const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < q.x.size(); ++k) {
            const double r = mid + hw * q.x[k];
            const double wrad = q.w[k] * std::pow(r, g.dim - 1);
            num += wrad * f(r);
            den += wrad;
        }
        p.values[i] = num / den;
    }
    return p;
}

/// Render by sampling at cell centers (useful for grid-convergence studies).
template <class F>
Profile render_point_samples(const RadialGrid& g, F&& f) {
    Profile p(g);
    for (int i = 0; i < g.n; ++i) p.values[i] = f(g.centers[i]);
    return p;
}

} // namespace aggdiff
