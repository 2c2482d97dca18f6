// Command-line front end: wires a JSON config to the simulation scenarios
// and emits plot-ready CSV/JSON. Exit codes: 0 success, 2 invalid config,
// 3 tolerance failure, 4 I/O failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "t3sgi/t3sgi.hpp"

namespace fs = std::filesystem;
using t3sgi::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTolerance = 3;
constexpr int kExitIo = 4;

struct Cli {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 12345;
    std::vector<std::string> overrides;
    std::string scan_file;  // fit only
};

json load_root(const Cli& cli) {
    json root = json::object();
    if (!cli.config_path.empty()) {
        std::ifstream in(cli.config_path);
        if (!in) throw t3sgi::ConfigError({"cannot open config file: " + cli.config_path});
        try {
            in >> root;
        } catch (const json::parse_error& e) {
            throw t3sgi::ConfigError({std::string("JSON parse error: ") + e.what()});
        }
    }
    for (const auto& ov : cli.overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw t3sgi::ConfigError({"--set expects key.path=value, got: " + ov});
        const std::string path = ov.substr(0, eq);
        const std::string raw = ov.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw;  // unquoted string
        }
        json* node = &root;
        std::istringstream ps(path);
        std::string part, prev;
        std::vector<std::string> parts;
        while (std::getline(ps, part, '.')) parts.push_back(part);
        if (parts.empty()) throw t3sgi::ConfigError({"--set: empty key path"});
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &((*node)[parts[i]]);
        (*node)[parts.back()] = value;
    }
    return root;
}

struct Context {
    json root;
    t3sgi::RunConfig rc;
    std::string hash;
    std::uint64_t seed = 0;
    fs::path out;
};

Context make_context(const Cli& cli, bool reject_invalid = true) {
    Context ctx;
    ctx.root = load_root(cli);
    ctx.rc = t3sgi::parse_config(ctx.root);
    ctx.hash = t3sgi::config_hash(ctx.root);
    ctx.seed = cli.seed;
    ctx.out = cli.out_dir;
    if (reject_invalid) {
        const auto violations = t3sgi::validate_config(ctx.rc.experiment);
        for (const auto& v : violations) {
            const char* tag = v.severity == t3sgi::Violation::Severity::error ? "error" : "warning";
            std::cerr << tag << " [" << v.code << "] " << v.message << "\n";
        }
        if (t3sgi::has_errors(violations)) throw t3sgi::ConfigError({"experiment config invalid"});
    }
    return ctx;
}

void write_json(const fs::path& path, json j, const Context& ctx) {
    j["meta"] = t3sgi::metadata_block(ctx.hash, ctx.seed);
    t3sgi::write_text_atomic(path, j.dump(2) + "\n");
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

int cmd_validate(const Cli& cli) {
    json root = load_root(cli);
    t3sgi::RunConfig rc = t3sgi::parse_config(root);
    const auto violations = t3sgi::validate_config(rc.experiment);
    for (const auto& v : violations) {
        const char* tag = v.severity == t3sgi::Violation::Severity::error ? "error" : "warning";
        std::cout << tag << " [" << v.code << "] " << v.message << "\n";
    }
    if (t3sgi::has_errors(violations)) return kExitConfig;
    std::cout << "config valid (hash " << t3sgi::config_hash(root) << ")\n";
    return kExitOk;
}

int cmd_trajectory(const Cli& cli) {
    Context ctx = make_context(cli);
    const auto& cfg = ctx.rc.experiment;
    const auto rows = t3sgi::sample_trajectory(cfg, 2001);

    std::ostringstream traj;
    traj << "# config_hash=" << ctx.hash << " seed=" << ctx.seed
         << " version=" << t3sgi::kVersion << "\n";
    traj << "t_us,z1_um,z2_um,p1_over_m_mm_s,p2_over_m_mm_s\n";
    for (const auto& r : rows)
        traj << num(r.t / 1e-6) << "," << num(r.z1 / 1e-6) << "," << num(r.z2 / 1e-6) << ","
             << num(r.v1 / 1e-3) << "," << num(r.v2 / 1e-3) << "\n";
    t3sgi::write_text_atomic(ctx.out / "trajectory.csv", traj.str());

    std::ostringstream dp;
    dp << "# config_hash=" << ctx.hash << " seed=" << ctx.seed << " version=" << t3sgi::kVersion
       << "\n";
    dp << "t_us,dp_over_m_mm_s\n";
    for (const auto& r : rows) dp << num(r.t / 1e-6) << "," << num((r.v2 - r.v1) / 1e-3) << "\n";
    t3sgi::write_text_atomic(ctx.out / "delta_p.csv", dp.str());

    std::ostringstream fp;
    fp << "# config_hash=" << ctx.hash << " seed=" << ctx.seed << " version=" << t3sgi::kVersion
       << "\n";
    fp << "start_us,end_us,polarity\n";
    for (const auto& s : t3sgi::force_profile(cfg.timing))
        fp << num(s.start / 1e-6) << "," << num(s.end / 1e-6) << "," << s.polarity << "\n";
    t3sgi::write_text_atomic(ctx.out / "force_profile.csv", fp.str());

    const auto res = t3sgi::closure_residuals(cfg);
    const auto defect = t3sgi::closure_defect(cfg.timing);
    json closure{{"delta_p_kg_m_s", res.delta_p},
                 {"delta_z_m", res.delta_z},
                 {"momentum_defect", defect.momentum_defect},
                 {"position_defect", defect.position_defect},
                 {"total_time_us", cfg.timing.total() / 1e-6}};
    write_json(ctx.out / "closure.json", closure, ctx);

    json phase{{"kinematics_delta_phi_rad", t3sgi::kinematics_phase_difference(cfg)}};
    if (cfg.timing.is_ideal() && cfg.field.nonlinearity_fraction == 0.0) {
        const auto pb = t3sgi::closed_form_phase(cfg);
        phase["gravity_term_rad"] = pb.gravity_term;
        phase["magnetic_term_rad"] = pb.magnetic_term;
        phase["total_rad"] = pb.total;
    }
    write_json(ctx.out / "phase_breakdown.json", phase, ctx);
    return kExitOk;
}

t3sgi::FringeScan make_scan(const Context& ctx) {
    const auto& rc = ctx.rc;
    return t3sgi::generate_scan(rc.experiment, rc.scan.grid(), rc.scan.noise, ctx.seed,
                                rc.scan.envelope);
}

int cmd_scan(const Cli& cli) {
    Context ctx = make_context(cli);
    const auto scan = make_scan(ctx);
    t3sgi::write_text_atomic(ctx.out / "scan.csv", t3sgi::scan_to_csv(scan, ctx.hash));
    return kExitOk;
}

int cmd_fit(const Cli& cli) {
    Context ctx = make_context(cli);
    t3sgi::FringeScan scan;
    if (!cli.scan_file.empty()) {
        scan = t3sgi::scan_from_csv(cli.scan_file);
    } else {
        scan = make_scan(ctx);
        t3sgi::write_text_atomic(ctx.out / "scan.csv", t3sgi::scan_to_csv(scan, ctx.hash));
    }
    const auto fit = t3sgi::fit_scan(scan, ctx.rc.experiment);
    json j = t3sgi::fit_to_json(fit);
    j["scan_provenance"] =
        scan.provenance == t3sgi::FringeScan::Provenance::synthetic ? "synthetic" : "external";
    write_json(ctx.out / "fit.json", j, ctx);
    return fit.converged ? kExitOk : kExitTolerance;
}

int cmd_oracle(const Cli& cli) {
    Context ctx = make_context(cli);
    const auto& rc = ctx.rc;
    const t3sgi::GridSpec grid =
        rc.grid_auto ? t3sgi::suggest_grid(rc.experiment, rc.packet) : rc.grid;
    const auto rep = t3sgi::verify_factorization(rc.experiment, rc.packet, grid);

    const auto& tol = rc.oracle;
    const bool ok = rep.phase_error <= tol.max_phase_error &&
                    std::abs(rep.overlap_numeric - rep.overlap_analytic) <= tol.overlap_tolerance &&
                    rep.displacement_error_z <= tol.max_displacement_z &&
                    rep.displacement_error_p <= tol.max_displacement_p &&
                    rep.norm_drift <= tol.max_norm_drift;

    json j = t3sgi::oracle_to_json(rep);
    j["grid"] = {{"z_min_um", grid.z_min / 1e-6},
                 {"z_max_um", grid.z_max / 1e-6},
                 {"n_points", grid.n_points},
                 {"dt_ns", grid.dt / 1e-9}};
    j["within_tolerances"] = ok;
    write_json(ctx.out / "oracle_report.json", j, ctx);
    return ok ? kExitOk : kExitTolerance;
}

int cmd_compare(const Cli& cli) {
    Context ctx = make_context(cli);
    const auto& rc = ctx.rc;
    const auto& cfg = rc.experiment;
    const auto& cs = rc.compare;
    if (cs.points < 2 || !(cs.T_min > 0) || !(cs.T_max > cs.T_min))
        throw t3sgi::ConfigError({"compare: need T_max > T_min > 0 and at least 2 points"});

    const double dp0 = cfg.constants.mass * (cs.t2_gradient_factor * cfg.field.a_B) *
                       cs.t2_kick_duration * cfg.levels.delta_frac();

    const double t_hi = std::max(cs.T_max, cs.t2_T_max);
    std::ostringstream csv;
    csv << "# config_hash=" << ctx.hash << " seed=" << ctx.seed << " version=" << t3sgi::kVersion
        << "\n";
    csv << "T_us,abs_phase_t3_rad,abs_phase_t2_rad\n";
    std::vector<double> logT, log3, log2v;
    for (int i = 0; i < cs.points; ++i) {
        const double T =
            cs.T_min * std::pow(t_hi / cs.T_min, i / static_cast<double>(cs.points - 1));
        const double p3 = std::abs(t3sgi::phase_t3_limit(cfg, T));
        const double p2 = std::abs(t3sgi::phase_t2_limit(dp0, T, cfg.constants.gravity,
                                                         cfg.constants.hbar));
        csv << num(T / 1e-6) << "," << num(p3) << "," << num(p2) << "\n";
        if (p3 > 0 && p2 > 0) {
            logT.push_back(std::log(T));
            log3.push_back(std::log(p3));
            log2v.push_back(std::log(p2));
        }
    }
    t3sgi::write_text_atomic(ctx.out / "compare.csv", csv.str());

    auto slope = [&](const std::vector<double>& ys) {
        const std::size_t n = logT.size();
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sx += logT[i];
            sy += ys[i];
            sxx += logT[i] * logT[i];
            sxy += logT[i] * ys[i];
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    const bool degenerate = logT.size() < 2;
    const double s3 = degenerate ? 0.0 : slope(log3);
    const double s2 = degenerate ? 0.0 : slope(log2v);
    const double p3_op = std::abs(t3sgi::phase_t3_limit(cfg, cs.T_max));
    const double p2_op = std::abs(
        t3sgi::phase_t2_limit(dp0, cs.t2_T_max, cfg.constants.gravity, cfg.constants.hbar));

    json j{{"slope_t3", s3},
           {"slope_t2", s2},
           {"t3_operating_point", {{"T_us", cs.T_max / 1e-6}, {"abs_phase_rad", p3_op}}},
           {"t2_operating_point",
            {{"T_us", cs.t2_T_max / 1e-6},
             {"abs_phase_rad", p2_op},
             {"delta_p0_over_m_mm_s", dp0 / cfg.constants.mass / 1e-3}}},
           {"t3_exceeds_t2", p3_op > p2_op}};
    write_json(ctx.out / "compare.json", j, ctx);

    const bool zero_field = cfg.field.a_B == 0.0;
    const bool slopes_ok =
        zero_field || (std::abs(s3 - 3.0) <= 1e-6 && std::abs(s2 - 2.0) <= 1e-6);
    return slopes_ok ? kExitOk : kExitTolerance;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Four-pulse Stern-Gerlach interferometer simulator (cubic-phase sequence)"};
    app.set_version_flag("--version", t3sgi::kVersion);
    app.fallthrough();
    app.require_subcommand(1);

    Cli cli;
    app.add_option("--config", cli.config_path, "JSON config file (defaults used when omitted)");
    app.add_option("--out", cli.out_dir, "output directory");
    app.add_option("--seed", cli.seed, "RNG seed recorded in all outputs");
    app.add_option("--set", cli.overrides, "dot-path config override, e.g. experiment.timing.T1_us=50");

    auto* validate = app.add_subcommand("validate", "check a config against every invariant");
    auto* trajectory =
        app.add_subcommand("trajectory", "branch trajectories, force profile, closure report");
    auto* scan = app.add_subcommand("scan", "synthetic fringe scan (CSV)");
    auto* fit = app.add_subcommand("fit", "generate (or load) a scan and fit it");
    fit->add_option("--scan-file", cli.scan_file, "fit an existing scan CSV instead of generating");
    auto* oracle = app.add_subcommand("oracle", "split-operator verification of the analytic phase");
    auto* compare = app.add_subcommand("compare", "cubic vs quadratic phase-scaling curves");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(cli);
        fs::create_directories(cli.out_dir);
        if (trajectory->parsed()) return cmd_trajectory(cli);
        if (scan->parsed()) return cmd_scan(cli);
        if (fit->parsed()) return cmd_fit(cli);
        if (oracle->parsed()) return cmd_oracle(cli);
        if (compare->parsed()) return cmd_compare(cli);
    } catch (const t3sgi::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
