#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "aggdiff/core.hpp"
#include "aggdiff/csv.hpp"
#include "aggdiff/diagnostics.hpp"
#include "aggdiff/kernel_cache.hpp"
#include "aggdiff/riesz.hpp"
#include "aggdiff/solver.hpp"
#include "aggdiff/steady.hpp"

namespace aggdiff {

/// Options for the paper-identity acceptance suite. Defaults are the reference
/// configuration; thresholds are fixed in run_identity_suite and are not
/// configurable on purpose.
struct VerifyOptions {
    int d = 3;
    double s = 1.25;
    double lambda = 1.0;
    double r_max = 60.0;
    int n = 512;
    double cfl = 0.4;
    double t_end_subcritical = 3.0;
    double t_end_supercritical = 20.0;
    double sample_dt = 0.05;
    double blowup_linf_factor = 100.0; // declared scan proxy; see events output
    double dichotomy_margin = 0.05;
    // Criterion-1 lambda-independence bound. 1e-3 is the reference-pair value;
    // other (d, s) pairs carry their own refinement-study bound (1.6e-3 covers
    // (4, 1.75), where the steeper profile doubles the forced cell-average gap
    // at lambda/2).
    double lambda_invariance_tol = 1e-3;
};

struct CriterionResult {
    std::string id;
    std::string name;
    double value = 0.0;     // measured quantity (context in detail)
    double threshold = 0.0; // declared bound on value
    bool pass = false;
    std::string detail;
};

namespace checks {

inline double lm_exact_constant(const ModelParams& p) {
    return std::exp(0.5 * (p.d + 1.0) * std::log(M_PI) + (1.0 - p.d) * std::log(2.0) -
                    log_gamma(0.5 * (p.d + 1.0)));
}

inline double lm_m_integral(const RadialGrid& g, double lambda, const ModelParams& p) {
    const Profile u = render_cell_average(
        g, [&](double r) { return steady_density(r, lambda, 1.0, p); });
    return integrate(u, [&](double t) { return std::pow(t, p.m); });
}

struct RunRecord {
    double kappa;
    Trajectory traj;
};

} // namespace checks

/// Runs every acceptance criterion at the given resolution and returns one
/// result per criterion. Thresholds are pinned here; a failure never throws
/// (exceptions become failed criteria so a deliberately coarse grid reports
/// rather than crashes).
inline std::vector<CriterionResult> run_identity_suite(const VerifyOptions& opt,
                                                       std::ostream* progress = nullptr) {
    std::vector<CriterionResult> results;
    auto note = [&](const std::string& msg) {
        if (progress) (*progress) << "  [verify] " << msg << "\n" << std::flush;
    };
    auto push = [&](const std::string& id, const std::string& name, double value,
                    double threshold, bool pass, const std::string& detail = "") {
        results.push_back({id, name, value, threshold, pass, detail});
    };
    auto push_error = [&](const std::string& id, const std::string& name, const std::string& what) {
        results.push_back({id, name, std::numeric_limits<double>::quiet_NaN(), 0.0, false, what});
    };

    const ModelParams params = make_params(opt.d, opt.s, 0.0);
    const double target_ratio = 2.0 * params.s / params.beta();

    note("assembling kernel, n = " + std::to_string(opt.n));
    const RadialGrid g = make_grid(opt.r_max, opt.n, params.d);
    const KernelMatrix K = kernel_cache::assemble_or_load(g, params);
    note("assembling refinement kernel, n = " + std::to_string(2 * opt.n));
    const RadialGrid g2 = make_grid(opt.r_max, 2 * opt.n, params.d);
    const KernelMatrix K2 = kernel_cache::assemble_or_load(g2, params);

    // --- 1: L^m constant and lambda independence -------------------------
    try {
        const double exact = checks::lm_exact_constant(params);
        const double lm1 = checks::lm_m_integral(g, opt.lambda, params);
        const double rel = std::abs(lm1 - exact) / exact;
        const double lm1f = checks::lm_m_integral(g2, opt.lambda, params);
        const double relf = std::abs(lm1f - exact) / exact;
        const double lm_half = checks::lm_m_integral(g, 0.5 * opt.lambda, params);
        const double lm_twice = checks::lm_m_integral(g, 2.0 * opt.lambda, params);
        const double rel_half = std::abs(lm_half - lm1) / lm1;
        const double rel_twice = std::abs(lm_twice - lm1) / lm1;
        const double lam_tol = opt.lambda_invariance_tol;
        const bool pass =
            rel <= 1e-3 && relf < rel && rel_half <= lam_tol && rel_twice <= lam_tol;
        push("1", "L^m constant", std::max({rel, rel_half, rel_twice}), std::max(1e-3, lam_tol),
             pass,
             "rel=" + format_g17(rel) + " refined=" + format_g17(relf) + " lam/2=" +
                 format_g17(rel_half) + " 2lam=" + format_g17(rel_twice) + " lam_tol=" +
                 format_g17(lam_tol));
    } catch (const std::exception& e) {
        push_error("1", "L^m constant", e.what());
    }

    // Calibrated steady states at both resolutions feed criteria 2-5, 7-9.
    double Bstar = 0.0;
    SteadyState ss, ss2;
    try {
        Bstar = calibrate_amplitude(opt.lambda, g, params, K);
        ss = steady_profile(opt.lambda, Bstar, g, params);
        ss2 = steady_profile(opt.lambda, calibrate_amplitude(opt.lambda, g2, params, K2), g2, params);
    } catch (const std::exception& e) {
        for (const char* id : {"2", "3", "4", "5", "7", "8", "9"})
            push_error(id, "steady calibration", e.what());
        return results;
    }
    note("calibrated B* = " + format_g17(Bstar));

    auto max_consistency_residual = [&](const SteadyState& s_, const KernelMatrix& k_) {
        const Profile c = potential(s_.profile, k_);
        const double c0 = s_.A * std::pow(s_.lambda, -0.5 * params.beta());
        double worst = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double target = params.m / (params.m - 1.0) * std::pow(s_.profile.values[i], params.m - 1.0);
            worst = std::max(worst, std::abs(c.values[i] - target));
        }
        return worst / c0;
    };

    // --- 2: steady self-consistency --------------------------------------
    try {
        const double res = max_consistency_residual(ss, K);
        const double res2 = max_consistency_residual(ss2, K2);
        push("2", "steady self-consistency", res, 1e-2, res <= 1e-2 && res2 <= 2.5e-3,
             "max resid=" + format_g17(res) + " refined=" + format_g17(res2) + " (<=2.5e-3)");
    } catch (const std::exception& e) {
        push_error("2", "steady self-consistency", e.what());
    }

    const double S_us = integrate(ss.profile, [&](double t) { return std::pow(t, params.m); });

    // --- 3: Pohozaev identity + negative control -------------------------
    try {
        const double rel = std::abs(pohozaev_residual(ss, K)) / S_us;
        const SteadyState off = steady_profile(opt.lambda, 2.0 * Bstar, g, params);
        const double S_off = integrate(off.profile, [&](double t) { return std::pow(t, params.m); });
        const double rel_off = std::abs(pohozaev_residual(off, K)) / S_off;
        push("3", "Pohozaev identity", rel, 1e-3, rel <= 1e-3 && rel_off >= 0.1,
             "resid=" + format_g17(rel) + " control(2B*)=" + format_g17(rel_off) + " (>=0.1)");
    } catch (const std::exception& e) {
        push_error("3", "Pohozaev identity", e.what());
    }

    // --- 4: F(U_s) energy identity ----------------------------------------
    double F_us = std::numeric_limits<double>::quiet_NaN();
    try {
        F_us = free_energy(ss.profile, K, params);
        const double rel = std::abs(F_us / S_us - target_ratio) / target_ratio;
        push("4", "energy identity F(U_s)", rel, 1e-2, rel <= 1e-2,
             "F/S=" + format_g17(F_us / S_us) + " target=" + format_g17(target_ratio));
    } catch (const std::exception& e) {
        push_error("4", "energy identity F(U_s)", e.what());
    }

    // --- 5: HLS sharpness + inequality direction --------------------------
    try {
        const double C = hls_constant(params.d, params.beta());
        const double W = interaction_energy(ss.profile, K);
        const double norm2 = std::pow(lp_norm(ss.profile, params.m), 2.0);
        const double ratio = 2.0 * params.beta() * W / norm2;
        const double rel = std::abs(ratio - C) / C;
        std::mt19937 rng(12345u);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        double worst_slack = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < 100; ++trial) {
            Profile u(g);
            for (double& x : u.values) x = uni(rng);
            const double lhs = 2.0 * params.beta() * interaction_energy(u, K);
            const double rhs = C * std::pow(lp_norm(u, params.m), 2.0);
            worst_slack = std::min(worst_slack, (rhs - lhs) / rhs);
        }
        push("5", "HLS sharpness", rel, 1e-2, rel <= 1e-2 && worst_slack >= -1e-8,
             "ratio=" + format_g17(ratio) + " C=" + format_g17(C) +
                 " min slack=" + format_g17(worst_slack) + " (>=-1e-8)");
    } catch (const std::exception& e) {
        push_error("5", "HLS sharpness", e.what());
    }

    // --- trajectory runs (feed 6, 7, 8) -----------------------------------
    std::vector<checks::RunRecord> runs;
    Trajectory traj_08_fine;
    try {
        SimConfig base;
        base.params = params;
        base.r_max = opt.r_max;
        base.n = opt.n;
        base.lambda = opt.lambda;
        base.cfl = opt.cfl;
        base.sample_dt = opt.sample_dt;
        base.blowup_linf_factor = opt.blowup_linf_factor;
        for (double kappa : {0.6, 0.8, 0.9}) {
            SimConfig cfg = base;
            cfg.kappa = kappa;
            cfg.t_end = opt.t_end_subcritical;
            note("run kappa = " + format_g17(kappa));
            runs.push_back({kappa, run(cfg, g, K)});
        }
        for (double kappa : {1.1, 1.2, 1.5}) {
            SimConfig cfg = base;
            cfg.kappa = kappa;
            cfg.t_end = opt.t_end_supercritical;
            cfg.sample_dt = 2.0 * opt.sample_dt;
            note("run kappa = " + format_g17(kappa));
            runs.push_back({kappa, run(cfg, g, K)});
        }
        SimConfig fine = base;
        fine.kappa = 0.8;
        fine.n = 2 * opt.n;
        fine.t_end = opt.t_end_subcritical;
        note("run kappa = 0.8 refined");
        traj_08_fine = run(fine, g2, K2);
    } catch (const std::exception& e) {
        for (const char* id : {"6", "7", "8"}) push_error(id, "trajectory runs", e.what());
        runs.clear();
    }

    if (!runs.empty()) {
        // --- 6: conservation and dissipation ------------------------------
        try {
            double worst_mass = 0.0, worst_jump_rel = 0.0;
            auto scan = [&](const Trajectory& tr) {
                const double m0 = tr.rows.front().mass;
                for (const DiagnosticRow& r : tr.rows)
                    if (m0 > 0.0) worst_mass = std::max(worst_mass, std::abs(r.mass - m0) / m0);
                const double f0 = std::abs(tr.rows.front().free_energy);
                if (f0 > 0.0)
                    worst_jump_rel = std::max(worst_jump_rel, energy_dissipation_check(tr) / f0);
            };
            for (const auto& rec : runs) scan(rec.traj);
            scan(traj_08_fine);
            push("6", "conservation and dissipation", std::max(worst_mass, worst_jump_rel), 1e-6,
                 worst_mass <= 1e-10 && worst_jump_rel <= 1e-6,
                 "mass drift=" + format_g17(worst_mass) + " (<=1e-10), max F jump rel=" +
                     format_g17(worst_jump_rel) + " (<=1e-6)");
        } catch (const std::exception& e) {
            push_error("6", "conservation and dissipation", e.what());
        }

        // --- 7: second-moment identity -------------------------------------
        try {
            auto max_mismatch = [&](const Trajectory& tr) {
                double worst = 0.0;
                const auto& rows = tr.rows;
                for (std::size_t k = 1; k + 1 < rows.size(); ++k) {
                    const double cd = (rows[k + 1].second_moment - rows[k - 1].second_moment) /
                                      (rows[k + 1].t - rows[k - 1].t);
                    const double scale =
                        4.0 * params.s * std::pow(rows[k].lm_norm, params.m);
                    worst = std::max(worst, std::abs(cd - rows[k].moment_rhs) / scale);
                }
                return worst;
            };
            const Trajectory& tr08 = runs[1].traj; // kappa = 0.8
            const double mis = max_mismatch(tr08);
            const double mis_fine = max_mismatch(traj_08_fine);
            const double rhs_us = std::abs(moment_rhs(ss.profile, K, params));
            const double rhs_rel = rhs_us / (4.0 * params.s * S_us);
            push("7", "second-moment identity", mis, 5e-2,
                 mis <= 5e-2 && mis_fine < mis && rhs_rel <= 1e-2,
                 "mismatch/(4s int u^m)=" + format_g17(mis) + " refined=" + format_g17(mis_fine) +
                     " steady rhs rel=" + format_g17(rhs_rel) + " (<=1e-2)");
        } catch (const std::exception& e) {
            push_error("7", "second-moment identity", e.what());
        }

        // --- 8: dichotomy ---------------------------------------------------
        try {
            const double lm_us = lp_norm(ss.profile, params.m);
            bool ok = true;
            std::string detail;
            for (const auto& rec : runs) {
                const Trajectory& tr = rec.traj;
                const bool super = rec.kappa > 1.0;
                const double f0 = tr.rows.front().free_energy;
                bool this_ok = f0 < F_us; // precondition F(u0) < F(U_s)
                if (!super) {
                    this_ok = this_ok && tr.event == TerminalEvent::ReachedTEnd;
                    for (const DiagnosticRow& r : tr.rows) this_ok = this_ok && r.lm_norm < lm_us;
                } else {
                    this_ok = this_ok && tr.event == TerminalEvent::BlowupDetected &&
                              std::isfinite(tr.t_star);
                    for (std::size_t k = 1; k < tr.rows.size(); ++k)
                        this_ok = this_ok && tr.rows[k].second_moment < tr.rows[k - 1].second_moment;
                }
                // prediction from the initial data must match the observation
                Profile u0 = ss.profile;
                for (double& x : u0.values) x *= rec.kappa;
                const BlowupMargin bm = blowup_margin(u0, ss, K, opt.dichotomy_margin);
                this_ok = this_ok && bm.predicted == (super ? BlowupClass::Blowup : BlowupClass::Global);
                ok = ok && this_ok;
                detail += format_g17(rec.kappa) + ":" + to_string(tr.event) +
                          (super ? "@t*=" + format_g17(tr.t_star) : "") + " ";
            }
            push("8", "dichotomy", ok ? 1.0 : 0.0, 1.0, ok, detail);
        } catch (const std::exception& e) {
            push_error("8", "dichotomy", e.what());
        }
    }

    // --- 9: stationarity under the flow -----------------------------------
    try {
        note("stationarity run, 1000 steps");
        SimConfig cfg;
        cfg.params = params;
        cfg.r_max = opt.r_max;
        cfg.n = opt.n;
        cfg.cfl = opt.cfl;
        SimState st;
        st.u = ss.profile;
        st.c = potential(st.u, K);
        st.mu = chemical_potential_from(st.u, st.c, params);
        const Profile u0 = st.u;
        const double peak = lp_norm(u0, std::numeric_limits<double>::infinity());
        for (int k = 0; k < 1000; ++k) st = step(st, K, cfg);
        double drift = 0.0;
        for (std::size_t i = 0; i < u0.size(); ++i)
            drift = std::max(drift, std::abs(st.u.values[i] - u0.values[i]));
        drift /= peak;
        push("9", "stationarity under flow", drift, 1e-2, drift <= 1e-2,
             "relative Linf drift over 1000 steps (t=" + format_g17(st.t) + ")");
    } catch (const std::exception& e) {
        push_error("9", "stationarity under flow", e.what());
    }

    // --- 10: determinism (in-process re-assembly) --------------------------
    try {
        note("determinism re-assembly");
        const KernelMatrix Ka = assemble_kernel(g, params);
        const KernelMatrix Kb = assemble_kernel(g, params);
        bool same = Ka.entries() == Kb.entries();
        const double Ba = calibrate_amplitude(opt.lambda, g, params, Ka);
        const double Bb = calibrate_amplitude(opt.lambda, g, params, Kb);
        same = same && format_g17(Ba) == format_g17(Bb);
        push("10", "determinism (in-process)", same ? 1.0 : 0.0, 1.0, same,
             "byte-identical kernels and calibration; CSV-level check is in the acceptance suite");
    } catch (const std::exception& e) {
        push_error("10", "determinism (in-process)", e.what());
    }

    return results;
}

} // namespace aggdiff
