// aggdiff: numerical laboratory for the energy-critical aggregation-diffusion
// equation u_t = Lap(u^m) - div(u grad c), m = 2d/(d+2s), with the steady
// family U_s, free-energy diagnostics and the global-existence / blow-up scan.
//
// Subcommands: steady | simulate | dichotomy | verify. All outputs are CSV
// plus a plain-text run manifest; exit codes 0 (ok), 1 (check/integrity
// failure), 2 (flag or parameter-domain error).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aggdiff/core.hpp"
#include "aggdiff/csv.hpp"
#include "aggdiff/diagnostics.hpp"
#include "aggdiff/identity_checks.hpp"
#include "aggdiff/kernel_cache.hpp"
#include "aggdiff/riesz.hpp"
#include "aggdiff/solver.hpp"
#include "aggdiff/steady.hpp"
#include "aggdiff/version.hpp"

namespace fs = std::filesystem;
using namespace aggdiff;

namespace {

struct CommonOpts {
    int d = 3;
    double s = 1.25;
    double lambda = 1.0;
    double r_max = 60.0;
    int n = 512;
    double epsilon = 0.0;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_epsilon = true) {
    cmd->add_option("--d", o.d, "spatial dimension (>= 3)")->required();
    cmd->add_option("--s", o.s, "interaction order, 1 < s < d/2")->required();
    cmd->add_option("--lambda", o.lambda, "steady-state scale")->capture_default_str();
    cmd->add_option("--rmax", o.r_max, "truncation radius")->capture_default_str();
    cmd->add_option("--n", o.n, "radial cell count (>= 8)")->capture_default_str();
    if (with_epsilon)
        cmd->add_option("--epsilon", o.epsilon, "kernel regularization length")->capture_default_str();
    cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    cmd->set_config("--config", "", "config file, one key = value per line");
}

void check_common(const CommonOpts& o) {
    if (o.n < 8) throw std::invalid_argument("n must be >= 8 for the scheme");
    make_params(o.d, o.s, o.epsilon); // parameter-domain validation
}

std::vector<std::pair<std::string, std::string>> manifest_base(const std::string& cmd,
                                                               const CommonOpts& o) {
    const char* cache = std::getenv("AGGDIFF_CACHE_DIR");
    return {
        {"command", cmd},
        {"version", AGGDIFF_VERSION},
        {"d", std::to_string(o.d)},
        {"s", format_g17(o.s)},
        {"lambda", format_g17(o.lambda)},
        {"rmax", format_g17(o.r_max)},
        {"n", std::to_string(o.n)},
        {"epsilon", format_g17(o.epsilon)},
        {"kernel_cache_key",
         kernel_cache::file_name(make_params(o.d, o.s, o.epsilon), make_grid(o.r_max, o.n, o.d))},
        {"kernel_cache_dir", cache ? cache : "(disabled)"},
    };
}

// ---------------------------------------------------------------- steady ---
int cmd_steady(const CommonOpts& o) {
    check_common(o);
    if (o.epsilon != 0.0)
        throw std::invalid_argument("steady identities require epsilon = 0");
    const ModelParams p = make_params(o.d, o.s, 0.0);
    fs::create_directories(o.out_dir);
    Manifest manifest(fs::path(o.out_dir) / "manifest.txt", manifest_base("steady", o));

    const RadialGrid g = make_grid(o.r_max, o.n, p.d);
    const KernelMatrix K = kernel_cache::assemble_or_load(g, p);

    const double B = calibrate_amplitude(o.lambda, g, p, K);
    const SteadyState ss = steady_profile(o.lambda, B, g, p);
    const Profile c = potential(ss.profile, K);
    const Profile mu = chemical_potential_from(ss.profile, c, p);

    {
        CsvWriter w(fs::path(o.out_dir) / "steady_profile.csv");
        w.header({"r", "u", "c", "mu"});
        for (int i = 0; i < g.n; ++i)
            w.row(std::vector<double>{g.centers[i], ss.profile.values[i], c.values[i], mu.values[i]});
    }
    manifest.add_output("steady_profile.csv");

    const double S = integrate(ss.profile, [&](double t) { return std::pow(t, p.m); });
    const double W = interaction_energy(ss.profile, K);
    const double F = S / (p.m - 1.0) - W;
    const double target = 2.0 * p.s / p.beta();
    const double hls = hls_constant(p.d, p.beta());
    const double hls_ratio = 2.0 * p.beta() * W / std::pow(lp_norm(ss.profile, p.m), 2.0);
    const double lm_half = checks::lm_m_integral(g, 0.5 * o.lambda, p);
    const double lm_twice = checks::lm_m_integral(g, 2.0 * o.lambda, p);
    const double lm_ref = checks::lm_m_integral(g, o.lambda, p);

    struct Check {
        const char* name;
        double value, target, rel, tol;
    };
    const std::vector<Check> cks = {
        {"pohozaev_rel_residual", pohozaev_residual(ss, K) / S, 0.0,
         std::abs(pohozaev_residual(ss, K)) / S, 1e-3},
        {"fus_ratio", F / S, target, std::abs(F / S - target) / target, 1e-2},
        {"hls_sharpness_ratio", hls_ratio, hls, std::abs(hls_ratio - hls) / hls, 1e-2},
        {"lambda_invariance_half", lm_half, lm_ref, std::abs(lm_half - lm_ref) / lm_ref, 1e-3},
        {"lambda_invariance_twice", lm_twice, lm_ref, std::abs(lm_twice - lm_ref) / lm_ref, 1e-3},
    };

    bool all_pass = true;
    {
        CsvWriter w(fs::path(o.out_dir) / "identity_report.csv");
        w.header({"check", "value", "target", "rel_error", "tolerance", "pass"});
        for (const Check& c_ : cks) {
            const bool pass = c_.rel <= c_.tol;
            all_pass = all_pass && pass;
            w.row(std::vector<std::string>{c_.name, format_g17(c_.value), format_g17(c_.target),
                                           format_g17(c_.rel), format_g17(c_.tol),
                                           pass ? "1" : "0"});
            std::printf("%-26s value=%-22.15g rel_err=%-12.3e tol=%-8.1e %s\n", c_.name, c_.value,
                        c_.rel, c_.tol, pass ? "PASS" : "FAIL");
        }
    }
    manifest.add_output("identity_report.csv");
    manifest.add("B_star", format_g17(B));
    manifest.add("tail_mass_fraction", format_g17(ss.tail_mass_fraction));
    manifest.add("tail_m_mass_fraction", format_g17(ss.tail_m_mass_fraction));
    manifest.finalize();
    return all_pass ? 0 : 1;
}

// -------------------------------------------------------------- simulate ---
struct SimulateOpts {
    CommonOpts common;
    double kappa = 0.8;
    double t_end = 3.0;
    double cfl = 0.4;
    double dt_floor = 0.0;
    double linf_max = 0.0;
    double sample_dt = 0.05;
    double snapshot_dt = -1.0; // <0: t_end/10, 0: disabled
    double steady_threshold = 1e-4;
    std::string init = "steady";
    double amp = 1.0;
    double width = 1.0;
    std::string init_file;
};

SimConfig to_sim_config(const SimulateOpts& so) {
    SimConfig cfg;
    cfg.params = make_params(so.common.d, so.common.s, so.common.epsilon);
    cfg.r_max = so.common.r_max;
    cfg.n = so.common.n;
    cfg.lambda = so.common.lambda;
    cfg.kappa = so.kappa;
    cfg.t_end = so.t_end;
    cfg.cfl = so.cfl;
    if (so.dt_floor > 0.0) cfg.dt_floor = so.dt_floor;
    if (so.linf_max > 0.0) cfg.blowup_linf = so.linf_max;
    cfg.sample_dt = so.sample_dt;
    cfg.steady_residual_threshold = so.steady_threshold;
    if (so.init == "steady") {
        cfg.init = InitKind::SteadyMultiple;
    } else if (so.init == "gaussian") {
        cfg.init = InitKind::Gaussian;
        cfg.gauss_amplitude = so.amp;
        cfg.gauss_width = so.width;
    } else if (so.init == "file") {
        cfg.init = InitKind::FromValues;
        std::ifstream in(so.init_file);
        if (!in) throw std::invalid_argument("cannot open initial-data file " + so.init_file);
        std::string line;
        std::getline(in, line); // header r,u
        while (std::getline(in, line)) {
            const auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            cfg.init_values.push_back(std::stod(line.substr(comma + 1)));
        }
    } else {
        throw std::invalid_argument("unknown --init kind '" + so.init + "'");
    }
    return cfg;
}

void write_trajectory(const fs::path& dir, const Trajectory& traj, Manifest& manifest) {
    {
        CsvWriter w(dir / "trajectory.csv");
        w.header({"t", "mass", "lm_norm", "linf", "free_energy", "second_moment", "moment_rhs",
                  "dissipation"});
        for (const DiagnosticRow& r : traj.rows)
            w.row(std::vector<double>{r.t, r.mass, r.lm_norm, r.linf, r.free_energy,
                                      r.second_moment, r.moment_rhs, r.dissipation});
    }
    manifest.add_output("trajectory.csv");
    {
        CsvWriter w(dir / "events.csv");
        w.header({"event", "t_star", "steps"});
        w.row(std::vector<std::string>{to_string(traj.event), format_g17(traj.t_star),
                                       std::to_string(traj.steps)});
    }
    manifest.add_output("events.csv");
}

int cmd_simulate(const SimulateOpts& so) {
    check_common(so.common);
    const SimConfig cfg = to_sim_config(so);
    fs::create_directories(so.common.out_dir);
    const fs::path dir = so.common.out_dir;

    auto entries = manifest_base("simulate", so.common);
    entries.insert(entries.end(), {{"kappa", format_g17(so.kappa)},
                                   {"init", so.init},
                                   {"tend", format_g17(so.t_end)},
                                   {"cfl", format_g17(so.cfl)},
                                   {"sample_dt", format_g17(so.sample_dt)},
                                   {"blowup_linf",
                                    so.linf_max > 0.0 ? format_g17(so.linf_max)
                                                      : "1000 * linf(u0) (default)"},
                                   {"dt_floor", so.dt_floor > 0.0 ? format_g17(so.dt_floor)
                                                                  : "1e-10 * first dt (default)"},
                                   {"steady_threshold", format_g17(so.steady_threshold)}});
    Manifest manifest(dir / "manifest.txt", entries);

    const RadialGrid g = make_grid(cfg.r_max, cfg.n, cfg.params.d);
    const KernelMatrix K = kernel_cache::assemble_or_load(g, cfg.params);

    const double snap_dt = so.snapshot_dt < 0.0 ? so.t_end / 10.0 : so.snapshot_dt;
    double next_snap = 0.0;
    int snap_index = 0;
    SampleHook hook;
    if (snap_dt > 0.0) {
        hook = [&](const SimState& st, const DiagnosticRow& row) {
            if (row.t + 1e-15 < next_snap) return;
            char name[48];
            std::snprintf(name, sizeof(name), "snapshot_%04d.csv", snap_index++);
            CsvWriter w(dir / name);
            w.header({"r", "u", "c", "mu"});
            for (int i = 0; i < g.n; ++i)
                w.row(std::vector<double>{g.centers[i], st.u.values[i], st.c.values[i],
                                          st.mu.values[i]});
            manifest.add_output(name);
            next_snap = row.t + snap_dt;
        };
    }

    const Trajectory traj = run(cfg, g, K, hook);
    write_trajectory(dir, traj, manifest);
    std::printf("terminal event: %s at t = %.6g after %ld steps\n", to_string(traj.event),
                traj.t_star, traj.steps);
    manifest.finalize();
    return 0;
}

// ------------------------------------------------------------- dichotomy ---
struct DichotomyOpts {
    CommonOpts common;
    std::string kappas = "0.6,0.8,0.9,1.1,1.2,1.5";
    double t_end = 20.0;
    double cfl = 0.4;
    double dt_floor = 0.0;
    double linf_factor = 100.0;
    double sample_dt = 0.1;
    double margin = 0.05;
};

int cmd_dichotomy(const DichotomyOpts& dopt) {
    check_common(dopt.common);
    std::vector<double> kappas;
    {
        std::stringstream ss(dopt.kappas);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) kappas.push_back(std::stod(tok));
    }
    if (kappas.empty()) throw std::invalid_argument("empty kappa list");

    const ModelParams p = make_params(dopt.common.d, dopt.common.s, dopt.common.epsilon);
    fs::create_directories(dopt.common.out_dir);
    auto entries = manifest_base("dichotomy", dopt.common);
    entries.insert(entries.end(), {{"kappas", dopt.kappas},
                                   {"tend", format_g17(dopt.t_end)},
                                   {"cfl", format_g17(dopt.cfl)},
                                   {"blowup_linf_factor", format_g17(dopt.linf_factor)},
                                   {"margin", format_g17(dopt.margin)}});
    Manifest manifest(fs::path(dopt.common.out_dir) / "manifest.txt", entries);

    const RadialGrid g = make_grid(dopt.common.r_max, dopt.common.n, p.d);
    const KernelMatrix K = kernel_cache::assemble_or_load(g, p);
    ModelParams p0 = p;
    p0.epsilon = 0.0;
    const double B = calibrate_amplitude_exact(dopt.common.lambda, g.r_max, p0);
    const SteadyState ss = steady_profile(dopt.common.lambda, B, g, p0);

    auto one_run = [&](double kappa) {
        SimConfig cfg;
        cfg.params = p;
        cfg.r_max = dopt.common.r_max;
        cfg.n = dopt.common.n;
        cfg.lambda = dopt.common.lambda;
        cfg.kappa = kappa;
        cfg.t_end = dopt.t_end;
        cfg.cfl = dopt.cfl;
        cfg.sample_dt = dopt.sample_dt;
        cfg.blowup_linf_factor = dopt.linf_factor;
        if (dopt.dt_floor > 0.0) cfg.dt_floor = dopt.dt_floor;
        return run(cfg, g, K);
    };

    // concurrent scan: runs share only the read-only kernel; results are
    // gathered in kappa order so output stays deterministic
    std::vector<std::future<Trajectory>> futs;
    futs.reserve(kappas.size());
    for (double k : kappas)
        futs.push_back(std::async(std::launch::async, one_run, k));

    bool all_match = true;
    CsvWriter w(fs::path(dopt.common.out_dir) / "dichotomy.csv");
    w.header({"kappa", "lm_ratio", "f_ratio", "predicted", "observed", "t_star"});
    for (std::size_t i = 0; i < kappas.size(); ++i) {
        const Trajectory traj = futs[i].get();
        Profile u0 = ss.profile;
        for (double& x : u0.values) x *= kappas[i];
        const BlowupMargin bm = blowup_margin(u0, ss, K, dopt.margin);
        const char* observed = to_string(traj.event);
        w.row(std::vector<std::string>{format_g17(kappas[i]), format_g17(bm.lm_ratio),
                                       format_g17(bm.f_ratio), to_string(bm.predicted), observed,
                                       format_g17(traj.t_star)});
        std::printf("kappa=%-6g lm_ratio=%.4f predicted=%-22s observed=%-16s t*=%.6g\n", kappas[i],
                    bm.lm_ratio, to_string(bm.predicted), observed, traj.t_star);
        if (bm.predicted == BlowupClass::CriticalUnclassified) continue; // open case, not scored
        const bool match =
            (bm.predicted == BlowupClass::Blowup && traj.event == TerminalEvent::BlowupDetected) ||
            (bm.predicted == BlowupClass::Global && traj.event != TerminalEvent::BlowupDetected);
        all_match = all_match && match;
    }
    manifest.add_output("dichotomy.csv");
    manifest.finalize();
    return all_match ? 0 : 1;
}

// ---------------------------------------------------------------- verify ---
struct VerifyCmdOpts {
    CommonOpts common;
    double cfl = 0.4;
    double tend_sub = 3.0;
    double tend_super = 20.0;
    double sample_dt = 0.05;
};

int cmd_verify(const VerifyCmdOpts& vo) {
    check_common(vo.common);
    if (vo.common.epsilon != 0.0)
        throw std::invalid_argument("verify runs the eps = 0 identity suite");
    VerifyOptions opt;
    opt.d = vo.common.d;
    opt.s = vo.common.s;
    opt.lambda = vo.common.lambda;
    opt.r_max = vo.common.r_max;
    opt.n = vo.common.n;
    opt.cfl = vo.cfl;
    opt.t_end_subcritical = vo.tend_sub;
    opt.t_end_supercritical = vo.tend_super;
    opt.sample_dt = vo.sample_dt;
    // non-reference pairs carry the refinement-study bound, see VerifyOptions
    if (!(vo.common.d == 3 && vo.common.s == 1.25)) opt.lambda_invariance_tol = 1.6e-3;

    fs::create_directories(vo.common.out_dir);
    Manifest manifest(fs::path(vo.common.out_dir) / "manifest.txt",
                      manifest_base("verify", vo.common));

    const std::vector<CriterionResult> results = run_identity_suite(opt, &std::cerr);

    bool all_pass = true;
    std::string first_fail;
    {
        CsvWriter w(fs::path(vo.common.out_dir) / "verify_report.csv");
        w.header({"criterion", "name", "value", "threshold", "pass", "detail"});
        for (const CriterionResult& r : results) {
            w.row(std::vector<std::string>{r.id, r.name, format_g17(r.value),
                                           format_g17(r.threshold), r.pass ? "1" : "0", r.detail});
            std::printf("criterion %-3s %-28s %s   (%s)\n", r.id.c_str(), r.name.c_str(),
                        r.pass ? "PASS" : "FAIL", r.detail.c_str());
            if (!r.pass && first_fail.empty()) first_fail = r.id + " (" + r.name + ")";
            all_pass = all_pass && r.pass;
        }
    }
    manifest.add_output("verify_report.csv");
    manifest.finalize();
    if (!all_pass) std::printf("FAILED criterion %s\n", first_fail.c_str());
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"aggdiff: energy-critical aggregation-diffusion laboratory"};
    app.require_subcommand(1);

    CommonOpts steady_common;
    CLI::App* steady_cmd = app.add_subcommand("steady", "calibrated steady state + identity report");
    add_common(steady_cmd, steady_common);

    SimulateOpts sim;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "time integration of one initial datum");
    add_common(sim_cmd, sim.common);
    sim_cmd->add_option("--kappa", sim.kappa, "steady multiple for --init steady")->required();
    sim_cmd->add_option("--tend", sim.t_end, "final time")->capture_default_str();
    sim_cmd->add_option("--cfl", sim.cfl, "CFL number in (0,1)")->capture_default_str();
    sim_cmd->add_option("--dtfloor", sim.dt_floor, "absolute dt floor (default 1e-10 * first dt)");
    sim_cmd->add_option("--linfmax", sim.linf_max,
                        "absolute blow-up Linf threshold (default 1e3 * linf(u0))");
    sim_cmd->add_option("--sample-dt", sim.sample_dt, "diagnostic cadence")->capture_default_str();
    sim_cmd->add_option("--snapshot-dt", sim.snapshot_dt, "snapshot cadence (0 disables, default tend/10)");
    sim_cmd->add_option("--steady-threshold", sim.steady_threshold, "steady detection threshold")
        ->capture_default_str();
    sim_cmd->add_option("--init", sim.init, "initial data: steady | gaussian | file")
        ->capture_default_str();
    sim_cmd->add_option("--amp", sim.amp, "gaussian amplitude")->capture_default_str();
    sim_cmd->add_option("--width", sim.width, "gaussian width")->capture_default_str();
    sim_cmd->add_option("--init-file", sim.init_file, "r,u CSV for --init file");

    DichotomyOpts dich;
    CLI::App* dich_cmd = app.add_subcommand("dichotomy", "kappa scan of the dichotomy");
    add_common(dich_cmd, dich.common);
    dich_cmd->add_option("--kappas", dich.kappas, "comma-separated kappa list")->required();
    dich_cmd->add_option("--tend", dich.t_end, "final time per run")->capture_default_str();
    dich_cmd->add_option("--cfl", dich.cfl, "CFL number")->capture_default_str();
    dich_cmd->add_option("--dtfloor", dich.dt_floor, "absolute dt floor");
    dich_cmd->add_option("--linf-factor", dich.linf_factor, "blow-up threshold factor")
        ->capture_default_str();
    dich_cmd->add_option("--sample-dt", dich.sample_dt, "diagnostic cadence")->capture_default_str();
    dich_cmd->add_option("--margin", dich.margin, "near-critical exclusion margin")
        ->capture_default_str();

    VerifyCmdOpts ver;
    CLI::App* ver_cmd = app.add_subcommand("verify", "run the full identity/acceptance suite");
    add_common(ver_cmd, ver.common, false);
    ver_cmd->add_option("--cfl", ver.cfl, "CFL number")->capture_default_str();
    ver_cmd->add_option("--tend-sub", ver.tend_sub, "subcritical run length")->capture_default_str();
    ver_cmd->add_option("--tend-super", ver.tend_super, "supercritical run cap")->capture_default_str();
    ver_cmd->add_option("--sample-dt", ver.sample_dt, "diagnostic cadence")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (steady_cmd->parsed()) return cmd_steady(steady_common);
        if (sim_cmd->parsed()) return cmd_simulate(sim);
        if (dich_cmd->parsed()) return cmd_dichotomy(dich);
        if (ver_cmd->parsed()) return cmd_verify(ver);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "parameter error: %s\n", e.what());
        return 2;
    } catch (const IntegrityError& e) {
        std::fprintf(stderr, "integrity error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
