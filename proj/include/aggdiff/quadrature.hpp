#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace aggdiff {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> x;
    std::vector<double> w;
};

/// Nodes by Newton iteration on P_n; accurate to ~1e-15 for n <= 256.
inline GaussLegendre gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    GaussLegendre q;
    q.x.resize(n);
    q.w.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // Legendre recurrence: p1 = P_n(x), p2 = P_{n-1}(x)
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * x * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (x * p1 - p2) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        q.x[i] = -x;
        q.x[n - 1 - i] = x;
        q.w[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        q.w[n - 1 - i] = q.w[i];
    }
    return q;
}

/// integral of f over [a, b] with a precomputed rule.
template <class F>
double gl_integrate(const GaussLegendre& q, double a, double b, F&& f) {
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t k = 0; k < q.x.size(); ++k)
        sum += q.w[k] * f(mid + hw * q.x[k]);
    return hw * sum;
}

/// Composite rule over the given breakpoints (ascending).
template <class F>
double gl_integrate_segments(const GaussLegendre& q, const std::vector<double>& brk, F&& f) {
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < brk.size(); ++k)
        sum += gl_integrate(q, brk[k], brk[k + 1], f);
    return sum;
}

/// Breakpoints 0, scale/4, scale, 4*scale, ... capped at r_max.
/// Resolves integrands that vary on the length scale `scale`.
inline std::vector<double> geometric_breakpoints(double scale, double r_max) {
    std::vector<double> brk{0.0};
    for (double b = 0.25 * scale; b < r_max; b *= 4.0) brk.push_back(b);
    brk.push_back(r_max);
    return brk;
}

} // namespace aggdiff
