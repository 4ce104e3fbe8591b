#pragma once

#include <cmath>
#include <cstddef>
#include <future>
#include <stdexcept>
#include <thread>
#include <vector>

#include "aggdiff/core.hpp"
#include "aggdiff/quadrature.hpp"

namespace aggdiff {

/// Fixed angular quadrature order; doubled in the near-singular regime s < 1.1
/// where the diagonal integrand theta^{2s-2} steepens.
inline int angular_quadrature_order(const ModelParams& p) {
    return p.s < 1.1 ? 128 : 64;
}

namespace detail {

/// Angular rule for int_0^pi sin^{d-2}(theta) (...) dtheta: nodes theta_k,
/// weights already multiplied by sin^{d-2}(theta_k).
struct AngularRule {
    std::vector<double> cos_theta;
    std::vector<double> weight;
};

inline AngularRule make_angular_rule(const ModelParams& p) {
    const GaussLegendre q = gauss_legendre(angular_quadrature_order(p));
    AngularRule rule;
    const std::size_t nq = q.x.size();
    rule.cos_theta.resize(nq);
    rule.weight.resize(nq);
    for (std::size_t k = 0; k < nq; ++k) {
        const double theta = 0.5 * M_PI * (q.x[k] + 1.0);
        rule.cos_theta[k] = std::cos(theta);
        rule.weight[k] = 0.5 * M_PI * q.w[k] * std::pow(std::sin(theta), p.d - 2);
    }
    return rule;
}

inline double angular_weight_with(const AngularRule& rule, double r, double rho,
                                  const ModelParams& p) {
    const double a = r * r + rho * rho + p.epsilon * p.epsilon;
    const double b = 2.0 * r * rho;
    const double halfbeta = 0.5 * p.beta();
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.cos_theta.size(); ++k)
        sum += rule.weight[k] * std::pow(a - b * rule.cos_theta[k], -halfbeta);
    return unit_sphere_area(p.d - 1) * sum / p.beta();
}

} // namespace detail

/// omega_{d-1}/(d-2s) * int_0^pi (r^2 + rho^2 - 2 r rho cos(theta) + eps^2)^{-(d-2s)/2}
///                               sin^{d-2}(theta) dtheta
/// so that c(|x|=r) = int_0^inf rho^{d-1} u(rho) angular_weight(r, rho) drho.
/// For s > 1 the integrand at r = rho, eps = 0 behaves like theta^{2s-2} and is
/// integrable; no singular treatment.
inline double angular_weight(double r, double rho, const ModelParams& p) {
    if (r < 0.0 || rho < 0.0) throw std::invalid_argument("angular_weight: radii must be >= 0");
    const detail::AngularRule rule = detail::make_angular_rule(p);
    return detail::angular_weight_with(rule, r, rho, p);
}

/// Dense radial convolution matrix: c_i = sum_j K_ij u_j vol_j approximates
/// c(r_i) = 1/(d-2s) int u(y) (|x-y|^2 + eps^2)^{-(d-2s)/2} dy.
///
/// Entries are angular_weight/omega_d averaged over the source cell (3-point
/// volume-weighted Gauss-Legendre) and then symmetrized. Source-cell averaging
/// keeps the quadrature consistent with cell-average profile data; plain
/// collocation at centers leaves an O(dr^2) defect that fails the Pohozaev
/// check at reference resolution. Dense O(n^2) storage and application:
/// n stays at a few thousand and assembly-by-formula keeps the identity
/// tests trivial.
class KernelMatrix {
public:
    KernelMatrix(const RadialGrid& g, const ModelParams& p, std::vector<double> entries)
        : grid_(&g), params_(p), n_(static_cast<std::size_t>(g.n)), k_(std::move(entries)) {
        if (k_.size() != n_ * n_)
            throw std::invalid_argument("KernelMatrix: entry count must be n^2");
    }

    double operator()(std::size_t i, std::size_t j) const { return k_[i * n_ + j]; }
    std::size_t size() const { return n_; }
    const RadialGrid& grid() const { return *grid_; }
    const ModelParams& params() const { return params_; }
    const std::vector<double>& entries() const { return k_; }

private:
    const RadialGrid* grid_;
    ModelParams params_;
    std::size_t n_;
    std::vector<double> k_;
};

namespace detail {

/// 3-point Gauss-Legendre nodes per cell with normalized rho^{d-1} weights.
struct CellNodes {
    std::vector<double> pts; // n x nrad
    std::vector<double> wts; // n x nrad, sums to 1 per cell
    int nrad;
};

inline CellNodes make_cell_nodes(const RadialGrid& g, int nrad = 3) {
    const GaussLegendre q = gauss_legendre(nrad);
    CellNodes cn;
    cn.nrad = nrad;
    cn.pts.resize(static_cast<std::size_t>(g.n) * nrad);
    cn.wts.resize(static_cast<std::size_t>(g.n) * nrad);
    for (int i = 0; i < g.n; ++i) {
        const double mid = 0.5 * (g.edges[i] + g.edges[i + 1]);
        const double hw = 0.5 * (g.edges[i + 1] - g.edges[i]);
        double tot = 0.0;
        for (int b = 0; b < nrad; ++b) {
            const double r = mid + hw * q.x[b];
            cn.pts[i * nrad + b] = r;
            cn.wts[i * nrad + b] = q.w[b] * std::pow(r, g.dim - 1);
            tot += cn.wts[i * nrad + b];
        }
        for (int b = 0; b < nrad; ++b) cn.wts[i * nrad + b] /= tot;
    }
    return cn;
}

} // namespace detail

/// Assembly is row-parallel: rows are independent and written to disjoint
/// slots, so the result is identical for any thread count.
inline KernelMatrix assemble_kernel(const RadialGrid& g, const ModelParams& p) {
    const std::size_t n = static_cast<std::size_t>(g.n);
    const detail::AngularRule rule = detail::make_angular_rule(p);
    const detail::CellNodes cells = detail::make_cell_nodes(g);
    const double inv_omega = 1.0 / g.omega_d;

    std::vector<double> raw(n * n); // raw[i*n+j] = avg over cell j of angular_weight(r_i, .)
    auto fill_rows = [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            const double ri = g.centers[i];
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int b = 0; b < cells.nrad; ++b)
                    acc += cells.wts[j * cells.nrad + b] *
                           detail::angular_weight_with(rule, ri, cells.pts[j * cells.nrad + b], p);
                raw[i * n + j] = acc * inv_omega;
            }
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (hw == 1 || n < 64) {
        fill_rows(0, n);
    } else {
        std::vector<std::future<void>> futs;
        const std::size_t chunk = (n + hw - 1) / hw;
        for (std::size_t i0 = 0; i0 < n; i0 += chunk)
            futs.push_back(std::async(std::launch::async, fill_rows, i0, std::min(i0 + chunk, n)));
        for (auto& f : futs) f.get();
    }

    std::vector<double> sym(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = 0.5 * (raw[i * n + j] + raw[j * n + i]);
            sym[i * n + j] = v;
            sym[j * n + i] = v;
        }
    return KernelMatrix(g, p, std::move(sym));
}

/// c_i = sum_j K_ij u_j vol_j. Fixed summation order keeps runs bit-reproducible.
inline Profile potential(const Profile& u, const KernelMatrix& K) {
    if (!u.grid || !u.grid->same_layout(K.grid()))
        throw std::invalid_argument("potential: profile and kernel live on different grids");
    const RadialGrid& g = K.grid();
    const std::size_t n = K.size();
    std::vector<double> uw(n);
    for (std::size_t j = 0; j < n; ++j) uw[j] = u.values[j] * g.vol[j];
    Profile c(*u.grid);
    const std::vector<double>& k = K.entries();
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = k.data() + i * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * uw[j];
        c.values[i] = acc;
    }
    return c;
}

/// W(u) = 1/2 sum_i u_i c_i vol_i = 1/(2(d-2s)) iint u(x)u(y)/|x-y|^{d-2s} dx dy.
inline double interaction_energy(const Profile& u, const KernelMatrix& K) {
    const Profile c = potential(u, K);
    double acc = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i)
        acc += u.values[i] * c.values[i] * u.grid->vol[i];
    return 0.5 * acc;
}

} // namespace aggdiff
