#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggdiff/core.hpp"
#include "aggdiff/diagnostics.hpp"
#include "aggdiff/errors.hpp"
#include "aggdiff/riesz.hpp"
#include "aggdiff/steady.hpp"

namespace aggdiff {

enum class InitKind { SteadyMultiple, Gaussian, FromValues };

struct SimConfig {
    ModelParams params{};
    double r_max = 60.0;
    int n = 512;

    InitKind init = InitKind::SteadyMultiple;
    double kappa = 0.8;   // multiple of the calibrated steady state
    double lambda = 1.0;
    double gauss_amplitude = 1.0;
    double gauss_width = 1.0;
    std::vector<double> init_values; // InitKind::FromValues

    double t_end = 3.0;
    double cfl = 0.4;
    double dt_floor = 0.0;           // absolute; 0 derives dt_floor_factor * first dt
    double dt_floor_factor = 1e-10;
    double blowup_linf = 0.0;        // absolute; 0 derives blowup_linf_factor * ||u0||_inf
    double blowup_linf_factor = 1e3;
    double steady_residual_threshold = 1e-4;
    double sample_dt = 0.05;
    bool interaction = true;         // false: c = 0, pure porous-medium flow
};

inline void validate(const SimConfig& cfg) {
    if (!(cfg.cfl > 0.0 && cfg.cfl < 1.0))
        throw std::invalid_argument("SimConfig: cfl must lie in (0,1)");
    if (!(cfg.t_end > 0.0)) throw std::invalid_argument("SimConfig: t_end must be positive");
    if (!(cfg.sample_dt > 0.0)) throw std::invalid_argument("SimConfig: sample_dt must be positive");
    if (!(cfg.dt_floor >= 0.0) || !(cfg.dt_floor_factor > 0.0))
        throw std::invalid_argument("SimConfig: dt floor must be positive");
    if (!(cfg.blowup_linf >= 0.0) || !(cfg.blowup_linf_factor > 0.0))
        throw std::invalid_argument("SimConfig: blow-up threshold must be positive");
    if (!(cfg.steady_residual_threshold > 0.0))
        throw std::invalid_argument("SimConfig: steady residual threshold must be positive");
    if (cfg.init == InitKind::SteadyMultiple && !(cfg.kappa >= 0.0))
        throw std::invalid_argument("SimConfig: kappa must be >= 0");
    if (cfg.init == InitKind::Gaussian && !(cfg.gauss_amplitude >= 0.0 && cfg.gauss_width > 0.0))
        throw std::invalid_argument("SimConfig: gaussian initial data needs amplitude >= 0, width > 0");
}

struct SimState {
    double t = 0.0;
    Profile u;
    Profile c;
    Profile mu;
    double dt_last = 0.0;
};

enum class TerminalEvent { ReachedTEnd, BlowupDetected, SteadyDetected };

inline const char* to_string(TerminalEvent e) {
    switch (e) {
        case TerminalEvent::ReachedTEnd: return "ReachedTEnd";
        case TerminalEvent::BlowupDetected: return "BlowupDetected";
        default: return "SteadyDetected";
    }
}

struct Trajectory {
    std::vector<DiagnosticRow> rows;
    TerminalEvent event = TerminalEvent::ReachedTEnd;
    double t_star = 0.0;
    long steps = 0;
};

/// mu = m/(m-1) u^{m-1} - c, the potential the flow descends.
inline Profile chemical_potential_from(const Profile& u, const Profile& c, const ModelParams& p) {
    Profile mu(*u.grid);
    const double coef = p.m / (p.m - 1.0);
    for (std::size_t i = 0; i < u.size(); ++i)
        mu.values[i] = coef * std::pow(u.values[i], p.m - 1.0) - c.values[i];
    return mu;
}

inline Profile chemical_potential(const Profile& u, const KernelMatrix& K, const ModelParams& p) {
    const Profile c = potential(u, K);
    return chemical_potential_from(u, c, p);
}

namespace detail {

/// Largest dt with an exactly nonnegative update: for every cell the draining
/// edge outflow dt (A_+ max(v_+,0) + A_- max(-v_-,0)) may not exceed vol_i.
/// The naive dr/max|v| bound misses a factor d at the origin cell where
/// vol/A = dr/d.
inline double positivity_dt(const RadialGrid& g, const std::vector<double>& v) {
    double dt = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.n; ++i) {
        const double drain = g.edge_area[i + 1] * std::max(v[i + 1], 0.0) +
                             g.edge_area[i] * std::max(-v[i], 0.0);
        if (drain > 0.0) dt = std::min(dt, g.vol[i] / drain);
    }
    return dt;
}

} // namespace detail

/// One explicit upwind finite-volume update of u_t = div(u grad mu) in radial
/// symmetry, plus the explicit eps-diffusion of the regularized problem when
/// eps > 0. Zero flux at r = 0 and r = r_max; mass telescopes exactly and the
/// CFL bound keeps the update convex, so u stays nonnegative. The degenerate
/// diffusion rides inside mu (no splitting); its stiffness is controlled by
/// the dr^2/(2 m u^{m-1}) constraint.
inline SimState step(const SimState& state, const KernelMatrix& K, const SimConfig& cfg,
                     double dt_cap = std::numeric_limits<double>::infinity()) {
    const RadialGrid& g = *state.u.grid;
    const ModelParams& p = cfg.params;
    const int n = g.n;

    SimState next;
    next.u = state.u;
    next.c = cfg.interaction ? potential(state.u, K) : Profile(g);
    next.mu = chemical_potential_from(state.u, next.c, p);

    std::vector<double> v(n + 1, 0.0); // edge velocities -d(mu)/dr
    for (int e = 1; e < n; ++e) v[e] = -(next.mu.values[e] - next.mu.values[e - 1]) / g.dr;

    double dt_stable = detail::positivity_dt(g, v);
    const double umax = lp_norm(state.u, std::numeric_limits<double>::infinity());
    if (umax > 0.0)
        dt_stable = std::min(dt_stable, g.dr * g.dr / (2.0 * p.m * std::pow(umax, p.m - 1.0)));
    if (p.epsilon > 0.0) {
        double dt_eps = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
            dt_eps = std::min(dt_eps, g.vol[i] * g.dr /
                                          (p.epsilon * (g.edge_area[i] + g.edge_area[i + 1])));
        dt_stable = std::min(dt_stable, dt_eps);
    }
    const double dt = std::min(cfg.cfl * dt_stable, dt_cap);

    std::vector<double> flux(n + 1, 0.0); // A_e * u_up * v_e, zero at both boundaries
    for (int e = 1; e < n; ++e) {
        const double up = v[e] > 0.0 ? state.u.values[e - 1] : state.u.values[e];
        flux[e] = g.edge_area[e] * up * v[e];
    }
    if (p.epsilon > 0.0)
        for (int e = 1; e < n; ++e)
            flux[e] -= p.epsilon * g.edge_area[e] *
                       (state.u.values[e] - state.u.values[e - 1]) / g.dr;

    for (int i = 0; i < n; ++i)
        next.u.values[i] = state.u.values[i] - dt * (flux[i + 1] - flux[i]) / g.vol[i];

    for (int i = 0; i < n; ++i) {
        const double ui = next.u.values[i];
        if (std::isnan(ui) || ui < 0.0)
            throw IntegrityError("step: scheme integrity failure (nan or negative density) at cell " +
                                 std::to_string(i) + ", t = " + std::to_string(state.t));
    }

    next.t = state.t + dt;
    next.dt_last = dt;
    return next;
}

namespace detail {

inline DiagnosticRow make_row(const SimState& st, const KernelMatrix& K, const SimConfig& cfg) {
    const ModelParams& p = cfg.params;
    const RadialGrid& g = *st.u.grid;
    DiagnosticRow row;
    row.t = st.t;
    row.mass = mass(st.u);
    row.lm_norm = lp_norm(st.u, p.m);
    row.linf = lp_norm(st.u, std::numeric_limits<double>::infinity());
    const double S = integrate(st.u, [&](double t) { return std::pow(t, p.m); });
    double intUC = 0.0;
    for (std::size_t i = 0; i < st.u.size(); ++i)
        intUC += st.u.values[i] * st.c.values[i] * g.vol[i];
    row.free_energy = S / (p.m - 1.0) - 0.5 * intUC;
    row.second_moment = second_moment(st.u);
    row.moment_rhs = -4.0 * p.s * S + 2.0 * p.beta() * row.free_energy;
    double diss = 0.0;
    for (int e = 1; e < g.n; ++e) {
        const double v = -(st.mu.values[e] - st.mu.values[e - 1]) / g.dr;
        const double up = v > 0.0 ? st.u.values[e - 1] : st.u.values[e];
        diss += up * v * v * g.edge_area[e] * g.dr;
    }
    row.dissipation = diss;
    return row;
}

/// u-weighted flatness of mu relative to the diffusion scale. At the critical
/// exponent the steady mu is identically zero, so |mean mu| is no scale.
inline double steady_residual(const SimState& st, const ModelParams& p) {
    double wmass = 0.0, wmu = 0.0, umax = 0.0;
    for (std::size_t i = 0; i < st.u.size(); ++i) {
        const double w = st.u.values[i] * st.u.grid->vol[i];
        wmass += w;
        wmu += st.mu.values[i] * w;
        umax = std::max(umax, st.u.values[i]);
    }
    if (wmass <= 0.0 || umax <= 0.0) return std::numeric_limits<double>::infinity();
    const double mubar = wmu / wmass;
    const double scale = p.m / (p.m - 1.0) * std::pow(umax, p.m - 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < st.u.size(); ++i)
        worst = std::max(worst, st.u.values[i] / umax * std::abs(st.mu.values[i] - mubar));
    return worst / scale;
}

} // namespace detail

inline Profile initial_profile(const SimConfig& cfg, const RadialGrid& g) {
    switch (cfg.init) {
        case InitKind::SteadyMultiple: {
            // kappa * U_s of the unregularized problem, also when eps > 0
            ModelParams p0 = cfg.params;
            p0.epsilon = 0.0;
            const double B = calibrate_amplitude_exact(cfg.lambda, g.r_max, p0);
            Profile u = steady_profile(cfg.lambda, B, g, p0).profile;
            for (double& x : u.values) x *= cfg.kappa;
            return u;
        }
        case InitKind::Gaussian:
            return render_cell_average(g, [&](double r) {
                return cfg.gauss_amplitude * std::exp(-r * r / (2.0 * cfg.gauss_width * cfg.gauss_width));
            });
        case InitKind::FromValues: {
            if (cfg.init_values.size() != static_cast<std::size_t>(g.n))
                throw std::invalid_argument("initial data: expected " + std::to_string(g.n) +
                                            " cell values, got " + std::to_string(cfg.init_values.size()));
            for (double x : cfg.init_values)
                if (std::isnan(x) || x < 0.0)
                    throw std::invalid_argument("initial data: values must be finite and nonnegative");
            return Profile(g, cfg.init_values);
        }
    }
    throw std::invalid_argument("initial data: unknown kind");
}

/// Called once per recorded diagnostic row (initial, sampled, terminal).
using SampleHook = std::function<void(const SimState&, const DiagnosticRow&)>;

/// Iterate the scheme to t_end, sampling diagnostics at the configured
/// cadence. Terminates with BlowupDetected when ||u||_inf crosses the
/// threshold or the stable dt falls under dt_floor (the operational proxy for
/// ||u||_{L^m} -> infinity; thresholds are configuration, not truth), with
/// SteadyDetected when the u-weighted mu flatness and the L^m drift both fall
/// under steady_residual_threshold, and with ReachedTEnd otherwise.
inline Trajectory run(const SimConfig& cfg, const RadialGrid& g, const KernelMatrix& K,
                      const SampleHook& hook) {
    validate(cfg);
    if (!g.same_layout(K.grid()))
        throw std::invalid_argument("run: grid and kernel disagree");

    SimState st;
    st.t = 0.0;
    st.u = initial_profile(cfg, g);
    st.c = cfg.interaction ? potential(st.u, K) : Profile(g);
    st.mu = chemical_potential_from(st.u, st.c, cfg.params);

    const double linf0 = lp_norm(st.u, std::numeric_limits<double>::infinity());
    const double linf_threshold =
        cfg.blowup_linf > 0.0 ? cfg.blowup_linf : cfg.blowup_linf_factor * linf0;

    Trajectory traj;
    auto record = [&](const SimState& state) {
        const DiagnosticRow row = detail::make_row(state, K, cfg);
        if (traj.rows.empty() || row.t > traj.rows.back().t) {
            traj.rows.push_back(row);
            if (hook) hook(state, row);
        }
    };
    record(st);

    double dt_floor = cfg.dt_floor;
    double next_sample = cfg.sample_dt;
    double prev_lm = traj.rows.front().lm_norm;
    double prev_lm_t = 0.0;
    const double t_eps = 1e-12 * cfg.t_end;

    while (st.t < cfg.t_end - t_eps) {
        SimState candidate = step(st, K, cfg, cfg.t_end - st.t);
        if (dt_floor == 0.0) dt_floor = cfg.dt_floor_factor * candidate.dt_last;
        // dt_last is capped by the remaining time; only a genuinely collapsing
        // stable dt may trigger the floor
        if (candidate.dt_last < dt_floor && candidate.t < cfg.t_end - t_eps) {
            traj.event = TerminalEvent::BlowupDetected;
            traj.t_star = st.t;
            record(st);
            return traj;
        }
        st = std::move(candidate);
        ++traj.steps;

        if (lp_norm(st.u, std::numeric_limits<double>::infinity()) > linf_threshold) {
            traj.event = TerminalEvent::BlowupDetected;
            traj.t_star = st.t;
            st.c = cfg.interaction ? potential(st.u, K) : Profile(g);
            st.mu = chemical_potential_from(st.u, st.c, cfg.params);
            record(st);
            return traj;
        }

        if (st.t >= next_sample || st.t >= cfg.t_end - t_eps) {
            // c/mu in the state belong to the pre-step profile; refresh for sampling
            st.c = cfg.interaction ? potential(st.u, K) : Profile(g);
            st.mu = chemical_potential_from(st.u, st.c, cfg.params);
            record(st);
            const DiagnosticRow& row = traj.rows.back();
            while (next_sample <= st.t) next_sample += cfg.sample_dt;

            if (row.mass > 0.0) {
                const double drift =
                    std::abs(row.lm_norm - prev_lm) / (row.lm_norm * (st.t - prev_lm_t));
                const double resid = detail::steady_residual(st, cfg.params);
                if (resid < cfg.steady_residual_threshold &&
                    drift < cfg.steady_residual_threshold) {
                    traj.event = TerminalEvent::SteadyDetected;
                    traj.t_star = st.t;
                    return traj;
                }
            }
            prev_lm = row.lm_norm;
            prev_lm_t = st.t;
        }
    }
    traj.event = TerminalEvent::ReachedTEnd;
    traj.t_star = st.t;
    return traj;
}

inline Trajectory run(const SimConfig& cfg, const RadialGrid& g, const KernelMatrix& K) {
    return run(cfg, g, K, SampleHook());
}

/// Convenience entry that assembles grid and kernel from the config.
inline Trajectory run(const SimConfig& cfg) {
    const RadialGrid g = make_grid(cfg.r_max, cfg.n, cfg.params.d);
    const KernelMatrix K = assemble_kernel(g, cfg.params);
    return run(cfg, g, K);
}

/// Largest positive jump of F between consecutive samples. The continuum law
/// says F never increases; the slack absorbs the explicit scheme's O(dt) bias.
inline double energy_dissipation_check(const Trajectory& traj) {
    if (traj.rows.size() < 2)
        throw std::invalid_argument("energy_dissipation_check: need at least two samples");
    double worst = 0.0;
    for (std::size_t k = 1; k < traj.rows.size(); ++k)
        worst = std::max(worst, traj.rows[k].free_energy - traj.rows[k - 1].free_energy);
    return worst;
}

} // namespace aggdiff
