#ifndef T3SGI_IO_HPP
#define T3SGI_IO_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "t3sgi/config.hpp"
#include "t3sgi/fringe.hpp"
#include "t3sgi/version.hpp"
#include "t3sgi/wavepacket.hpp"

namespace t3sgi {

using nlohmann::json;

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::vector<std::string>& problems)
        : std::runtime_error(join(problems)), problems_(problems) {}
    const std::vector<std::string>& problems() const { return problems_; }

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid configuration:";
        for (const auto& p : v) s += "\n  - " + p;
        return s;
    }
    std::vector<std::string> problems_;
};

namespace detail {

// unit factors applied at the config boundary; SI everywhere inside
inline constexpr double kMicro = 1e-6;
inline constexpr double kNano = 1e-9;
inline constexpr double kMilli = 1e-3;

/// Suffixed-field value y whose parse (y * factor) rounds back to `si`,
/// searched within a few ulps of si/factor. For ~2% of arbitrary doubles no
/// exact preimage exists (the rounded multiplication skips values when the
/// quotient sits in the wider binade); those come back one ulp off, once.
/// Every value that originated from a parsed config round-trips exactly.
inline double exact_quotient(double si, double factor) {
    const double y0 = si / factor;
    if (y0 * factor == si) return y0;
    double lo = y0, hi = y0;
    for (int k = 0; k < 4; ++k) {
        hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
        if (hi * factor == si) return hi;
        lo = std::nextafter(lo, -std::numeric_limits<double>::infinity());
        if (lo * factor == si) return lo;
    }
    return y0;
}

class StrictObject {
  public:
    StrictObject(const json& j, std::string path, std::vector<std::string>& problems)
        : j_(j), path_(std::move(path)), problems_(problems) {
        if (!j.is_object()) problems_.push_back(path_ + ": expected a JSON object");
    }

    ~StrictObject() {
        if (!j_.is_object()) return;
        for (const auto& item : j_.items())
            if (!seen_.count(item.key()))
                problems_.push_back(path_ + ": unknown key \"" + item.key() + "\"");
    }

    bool has(const std::string& key) {
        if (!j_.is_object()) return false;
        if (j_.contains(key)) {
            seen_.insert(key);
            return true;
        }
        return false;
    }

    /// Present values are scaled by `factor` (unit suffix -> SI); the
    /// fallback is already in SI and passes through untouched.
    double number(const std::string& key, double fallback, double factor = 1.0) {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number()) {
            problems_.push_back(path_ + "." + key + ": expected a number");
            return fallback;
        }
        return v.get<double>() * factor;
    }

    long integer(const std::string& key, long fallback) {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) {
            problems_.push_back(path_ + "." + key + ": expected an integer");
            return fallback;
        }
        return v.get<long>();
    }

    std::string text(const std::string& key, std::string fallback) {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_string()) {
            problems_.push_back(path_ + "." + key + ": expected a string");
            return fallback;
        }
        return v.get<std::string>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) {
            problems_.push_back(path_ + "." + key + ": expected a boolean");
            return fallback;
        }
        return v.get<bool>();
    }

    const json* object(const std::string& key) {
        if (!has(key)) return nullptr;
        return &j_.at(key);
    }

  private:
    const json& j_;
    std::string path_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

} // namespace detail

/// Scan protocol settings (grid, shots, noise, envelope).
struct ScanSpec {
    double t1_min = 0.0;
    double t1_max = 70e-6;
    int points = 36;
    NoiseSpec noise{};
    EnvelopeForm envelope = EnvelopeForm::exp_t1;

    std::vector<double> grid() const {
        std::vector<double> g(points);
        for (int i = 0; i < points; ++i)
            g[static_cast<std::size_t>(i)] =
                t1_min + (t1_max - t1_min) * i / static_cast<double>(points - 1);
        return g;
    }
};

struct TofSpec {
    double pulse_duration = 70e-6;
    double tof = 1e-3;
    double position_noise = 3e-6;
    int trials = 1800;
    int state = 2;  // which branch's moment fraction sets the lever arm
};

struct CompareSpec {
    double T_min = 20e-6;
    double T_max = 285.2e-6;
    int points = 60;
    double t2_T_max = 924e-6;
    double t2_gradient_factor = 2.3;
    double t2_kick_duration = 10e-6;
};

struct OracleTolerances {
    double max_phase_error = 1e-3;        // rad
    double overlap_tolerance = 1e-3;      // |numeric - analytic|
    double max_displacement_z = 1e-9;     // m
    double max_displacement_p = 1e-30;    // kg m/s
    double max_norm_drift = 1e-12;
};

/// Everything a CLI run needs: the experiment plus scenario sections.
struct RunConfig {
    ExperimentConfig experiment{};
    GaussianPacket packet{};
    GridSpec grid{};
    bool grid_auto = true;
    ScanSpec scan{};
    TofSpec tof{};
    CompareSpec compare{};
    OracleTolerances oracle{};
};

/// Parses the strict unit-suffixed JSON schema; collects every problem
/// (unknown keys, wrong types, unit clashes) before throwing ConfigError.
inline RunConfig parse_config(const json& root) {
    std::vector<std::string> problems;
    RunConfig rc;
    {
        detail::StrictObject top(root, "config", problems);
        if (const json* jexp = top.object("experiment")) {
            detail::StrictObject exp(*jexp, "experiment", problems);
            if (const json* jc = exp.object("constants")) {
                detail::StrictObject o(*jc, "experiment.constants", problems);
                auto& c = rc.experiment.constants;
                c.hbar = o.number("hbar_Js", c.hbar);
                c.mu_bohr = o.number("mu_bohr_J_per_T", c.mu_bohr);
                c.mass = o.number("mass_kg", c.mass);
                c.gravity = o.number("g_m_per_s2", c.gravity);
            }
            if (const json* jl = exp.object("levels")) {
                detail::StrictObject o(*jl, "experiment.levels", problems);
                auto& l = rc.experiment.levels;
                l.mu1_frac = o.number("mu1_frac", l.mu1_frac);
                l.mu2_frac = o.number("mu2_frac", l.mu2_frac);
                l.label1 = o.text("label1", l.label1);
                l.label2 = o.text("label2", l.label2);
            }
            if (const json* jf = exp.object("field")) {
                detail::StrictObject o(*jf, "experiment.field", problems);
                auto& f = rc.experiment.field;
                const bool has_aB = o.has("aB_m_per_s2");
                const bool has_grad = o.has("gradient_T_per_m");
                if (has_aB && has_grad)
                    problems.push_back(
                        "experiment.field: give either aB_m_per_s2 or gradient_T_per_m, not both");
                if (has_aB) f.a_B = o.number("aB_m_per_s2", f.a_B);
                if (has_grad)
                    f.a_B = rc.experiment.constants.mu_bohr / rc.experiment.constants.mass *
                            o.number("gradient_T_per_m", 0.0);
                f.nonlinearity_fraction = o.number("nonlinearity_fraction", f.nonlinearity_fraction);
                f.quadrupole_center_z0 =
                    o.number("quadrupole_center_z0_um", f.quadrupole_center_z0, detail::kMicro);
                f.bias_field_gauss = o.number("bias_field_G", f.bias_field_gauss);
            }
            if (const json* jt = exp.object("timing")) {
                detail::StrictObject o(*jt, "experiment.timing", problems);
                const bool ideal_form = o.has("T1_us") || o.has("Td_us");
                auto& tm = rc.experiment.timing;
                if (ideal_form) {
                    const double t1 = o.number("T1_us", 70e-6, detail::kMicro);
                    const double td = o.number("Td_us", 2.6e-6, detail::kMicro);
                    tm = PulseTiming{t1, t1, t1, t1, td, td};
                    for (const char* k : {"t1_us", "t2_us", "t3_us", "t4_us", "td1_us", "td2_us"})
                        if (o.has(k))
                            problems.push_back(
                                "experiment.timing: mix of ideal {T1_us, Td_us} and six-field form");
                } else {
                    tm.t1 = o.number("t1_us", tm.t1, detail::kMicro);
                    tm.t2 = o.number("t2_us", tm.t2, detail::kMicro);
                    tm.t3 = o.number("t3_us", tm.t3, detail::kMicro);
                    tm.t4 = o.number("t4_us", tm.t4, detail::kMicro);
                    tm.td1 = o.number("td1_us", tm.td1, detail::kMicro);
                    tm.td2 = o.number("td2_us", tm.td2, detail::kMicro);
                }
            }
            rc.experiment.visibility0 = exp.number("visibility0", rc.experiment.visibility0);
            rc.experiment.decay_time =
                exp.number("decay_time_us", rc.experiment.decay_time, detail::kMicro);
            rc.experiment.phi0 = exp.number("phi0_rad", rc.experiment.phi0);
        }
        if (const json* jp = top.object("packet")) {
            detail::StrictObject o(*jp, "packet", problems);
            rc.packet.sigma0 = o.number("sigma0_um", rc.packet.sigma0, detail::kMicro);
            rc.packet.center = o.number("center_um", rc.packet.center, detail::kMicro);
            rc.packet.momentum =
                o.number("velocity_mm_s", 0.0, detail::kMilli) * rc.experiment.constants.mass;
        }
        if (const json* jg = top.object("grid")) {
            detail::StrictObject o(*jg, "grid", problems);
            rc.grid_auto = o.boolean("auto", true);
            rc.grid.z_min = o.number("z_min_um", rc.grid.z_min, detail::kMicro);
            rc.grid.z_max = o.number("z_max_um", rc.grid.z_max, detail::kMicro);
            rc.grid.n_points = static_cast<int>(o.integer("n_points", rc.grid.n_points));
            rc.grid.dt = o.number("dt_ns", rc.grid.dt, detail::kNano);
            if (o.has("z_min_um") || o.has("z_max_um") || o.has("n_points") || o.has("dt_ns"))
                rc.grid_auto = o.boolean("auto", false);
        }
        if (const json* js = top.object("scan")) {
            detail::StrictObject o(*js, "scan", problems);
            rc.scan.t1_min = o.number("t1_min_us", rc.scan.t1_min, detail::kMicro);
            rc.scan.t1_max = o.number("t1_max_us", rc.scan.t1_max, detail::kMicro);
            rc.scan.points = static_cast<int>(o.integer("points", rc.scan.points));
            rc.scan.noise.shots_per_point =
                static_cast<int>(o.integer("shots_per_point", rc.scan.noise.shots_per_point));
            rc.scan.noise.atoms_per_shot = o.integer("atoms_per_shot", rc.scan.noise.atoms_per_shot);
            rc.scan.noise.charge_rel_std = o.number("charge_rel_std", rc.scan.noise.charge_rel_std);
            const std::string env = o.text("envelope", to_string(rc.scan.envelope));
            try {
                rc.scan.envelope = envelope_from_string(env);
            } catch (const std::invalid_argument& e) {
                problems.push_back(std::string("scan.envelope: ") + e.what());
            }
        }
        if (const json* jt = top.object("tof")) {
            detail::StrictObject o(*jt, "tof", problems);
            rc.tof.pulse_duration = o.number("pulse_us", rc.tof.pulse_duration, detail::kMicro);
            rc.tof.tof = o.number("tof_us", rc.tof.tof, detail::kMicro);
            rc.tof.position_noise =
                o.number("position_noise_um", rc.tof.position_noise, detail::kMicro);
            rc.tof.trials = static_cast<int>(o.integer("trials", rc.tof.trials));
            rc.tof.state = static_cast<int>(o.integer("state", rc.tof.state));
        }
        if (const json* jc = top.object("compare")) {
            detail::StrictObject o(*jc, "compare", problems);
            rc.compare.T_min = o.number("T_min_us", rc.compare.T_min, detail::kMicro);
            rc.compare.T_max = o.number("T_max_us", rc.compare.T_max, detail::kMicro);
            rc.compare.points = static_cast<int>(o.integer("points", rc.compare.points));
            rc.compare.t2_T_max = o.number("t2_T_max_us", rc.compare.t2_T_max, detail::kMicro);
            rc.compare.t2_gradient_factor =
                o.number("t2_gradient_factor", rc.compare.t2_gradient_factor);
            rc.compare.t2_kick_duration =
                o.number("t2_kick_us", rc.compare.t2_kick_duration, detail::kMicro);
        }
        if (const json* jo = top.object("oracle")) {
            detail::StrictObject o(*jo, "oracle", problems);
            rc.oracle.max_phase_error = o.number("max_phase_error_rad", rc.oracle.max_phase_error);
            rc.oracle.overlap_tolerance = o.number("overlap_tolerance", rc.oracle.overlap_tolerance);
            rc.oracle.max_displacement_z =
                o.number("max_displacement_z_nm", rc.oracle.max_displacement_z, detail::kNano);
            rc.oracle.max_displacement_p = o.number("max_displacement_p", rc.oracle.max_displacement_p);
            rc.oracle.max_norm_drift = o.number("max_norm_drift", rc.oracle.max_norm_drift);
        }
    }
    if (!problems.empty()) throw ConfigError(problems);
    return rc;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file: " + path.string()});
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("JSON parse error: ") + e.what()});
    }
    return parse_config(j);
}

/// Canonical unit-suffixed serialization (inverse of parse_config for the
/// experiment section; exact round trip by construction).
inline json to_json(const ExperimentConfig& cfg) {
    using detail::exact_quotient;
    using detail::kMicro;
    json j;
    j["constants"] = {{"hbar_Js", cfg.constants.hbar},
                      {"mu_bohr_J_per_T", cfg.constants.mu_bohr},
                      {"mass_kg", cfg.constants.mass},
                      {"g_m_per_s2", cfg.constants.gravity}};
    j["levels"] = {{"mu1_frac", cfg.levels.mu1_frac},
                   {"mu2_frac", cfg.levels.mu2_frac},
                   {"label1", cfg.levels.label1},
                   {"label2", cfg.levels.label2}};
    j["field"] = {{"aB_m_per_s2", cfg.field.a_B},
                  {"nonlinearity_fraction", cfg.field.nonlinearity_fraction},
                  {"quadrupole_center_z0_um", exact_quotient(cfg.field.quadrupole_center_z0, kMicro)},
                  {"bias_field_G", cfg.field.bias_field_gauss}};
    j["timing"] = {{"t1_us", exact_quotient(cfg.timing.t1, kMicro)},
                   {"t2_us", exact_quotient(cfg.timing.t2, kMicro)},
                   {"t3_us", exact_quotient(cfg.timing.t3, kMicro)},
                   {"t4_us", exact_quotient(cfg.timing.t4, kMicro)},
                   {"td1_us", exact_quotient(cfg.timing.td1, kMicro)},
                   {"td2_us", exact_quotient(cfg.timing.td2, kMicro)}};
    j["visibility0"] = cfg.visibility0;
    j["decay_time_us"] = exact_quotient(cfg.decay_time, kMicro);
    j["phi0_rad"] = cfg.phi0;
    return j;
}

inline ExperimentConfig experiment_from_json(const json& j) {
    json wrapped;
    wrapped["experiment"] = j;
    return parse_config(wrapped).experiment;
}

/// FNV-1a 64-bit over the canonical dump; stable across runs.
inline std::string config_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Write-temp-then-rename; callers see either the old or the new content.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

namespace detail {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace detail

/// Metadata block stamped into every output (no timestamps: outputs must be
/// byte-identical under identical config + seed).
inline json metadata_block(const std::string& cfg_hash, std::uint64_t seed) {
    return json{{"config_hash", cfg_hash}, {"seed", seed}, {"version", kVersion}};
}

inline std::string scan_to_csv(const FringeScan& scan, const std::string& cfg_hash) {
    std::ostringstream os;
    os << "# config_hash=" << cfg_hash << " seed=" << scan.seed << " version=" << kVersion
       << " envelope=" << to_string(scan.envelope) << " shots_per_point=" << scan.shots_per_point
       << "\n";
    os << "t1_us,p1,sigma_p1\n";
    for (const auto& p : scan.points)
        os << detail::format_number(p.t1 / detail::kMicro) << "," << detail::format_number(p.p1)
           << "," << detail::format_number(p.sigma_p1) << "\n";
    return os.str();
}

inline FringeScan scan_from_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scan file: " + path.string());
    FringeScan scan;
    scan.provenance = FringeScan::Provenance::external;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line.rfind("t1_us", 0) != 0)
                throw std::runtime_error("scan file must start with header t1_us,p1,sigma_p1");
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        std::string a, b, c;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c, ','))
            throw std::runtime_error("malformed scan row: " + line);
        scan.points.push_back(
            {std::stod(a) * detail::kMicro, std::stod(b), std::stod(c)});
    }
    if (scan.points.empty()) throw std::runtime_error("scan file has no data rows");
    return scan;
}

inline json fit_to_json(const FitResult& fit) {
    json cov = json::array();
    for (const auto& row : fit.covariance) {
        json r = json::array();
        for (double v : row) r.push_back(v);
        cov.push_back(r);
    }
    const char* status = fit.status == FitResult::Status::converged ? "converged"
                         : fit.status == FitResult::Status::max_iterations ? "max_iterations"
                                                                           : "degenerate";
    return json{{"a_B_m_per_s2", fit.a_B},
                {"a_B_uncertainty_m_per_s2", fit.a_B_uncertainty()},
                {"phi0_rad", fit.phi0},
                {"phi0_uncertainty_rad", std::sqrt(fit.covariance[1][1])},
                {"visibility0", fit.visibility0},
                {"visibility0_uncertainty", std::sqrt(fit.covariance[2][2])},
                {"decay_time_us", fit.decay_time / detail::kMicro},
                {"decay_time_uncertainty_us", std::sqrt(fit.covariance[3][3]) / detail::kMicro},
                {"covariance", cov},
                {"covariance_order", json::array({"a_B", "phi0", "visibility0", "decay_time"})},
                {"residual_rms", fit.residual_rms},
                {"chi2", fit.chi2},
                {"iterations", fit.iterations},
                {"converged", fit.converged},
                {"status", status}};
}

inline json oracle_to_json(const OracleReport& rep) {
    return json{{"phase_error_rad", rep.phase_error},
                {"displacement_error_z_m", rep.displacement_error_z},
                {"displacement_error_p_kg_m_s", rep.displacement_error_p},
                {"overlap_numeric", rep.overlap_numeric},
                {"overlap_analytic", rep.overlap_analytic},
                {"norm_drift", rep.norm_drift},
                {"delta_phi_numeric_rad", rep.delta_phi_numeric},
                {"delta_phi_analytic_rad", rep.delta_phi_analytic}};
}

} // namespace t3sgi

#endif // T3SGI_IO_HPP
