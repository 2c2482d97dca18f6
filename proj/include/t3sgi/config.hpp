#ifndef T3SGI_CONFIG_HPP
#define T3SGI_CONFIG_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "t3sgi/constants.hpp"
#include "t3sgi/pulse_sequence.hpp"

namespace t3sgi {

/// The two internal states, identified by their magnetic-moment fractions
/// mu_i / mu_B. Defaults are |F=2,mF=1> and |F=2,mF=2> of 87Rb (g_F = 1/2).
struct LevelPair {
    double mu1_frac = 0.5;
    double mu2_frac = 1.0;
    std::string label1 = "F=2,mF=1";
    std::string label2 = "F=2,mF=2";

    double delta_frac() const { return mu1_frac - mu2_frac; }

    /// Checked construction; a degenerate pair has no differential force.
    static LevelPair make(double mu1, double mu2,
                          std::string l1 = "state1", std::string l2 = "state2") {
        if (mu1 == mu2)
            throw std::invalid_argument("LevelPair: degenerate level pair (mu1_frac == mu2_frac)");
        return LevelPair{mu1, mu2, std::move(l1), std::move(l2)};
    }
};

/// Magnetic gradient drive, expressed as the acceleration per Bohr magneton
/// a_B = (mu_B/m)(dBy/dz). nonlinearity_fraction models the quadrupole
/// nonlinearity as a polarity-dependent force-magnitude factor (1 +/- eta).
struct FieldModel {
    double a_B = 273.16;                  // m/s^2
    double nonlinearity_fraction = 0.0;   // in [0, 0.1]
    double quadrupole_center_z0 = 98e-6;  // m, documentation only
    double bias_field_gauss = 35.0;       // documentation only; cancelled by the echo

    double gradient(const PhysicalConstants& c) const { return c.mass * a_B / c.mu_bohr; }

    static FieldModel from_gradient(double dBy_dz, const PhysicalConstants& c) {
        FieldModel f;
        f.a_B = c.mu_bohr / c.mass * dBy_dz;
        return f;
    }
};

/// Full experiment description shared by all modules. Immutable after
/// construction; safe to share across threads.
struct ExperimentConfig {
    PhysicalConstants constants{};
    LevelPair levels{};
    FieldModel field{};
    PulseTiming timing{};
    double visibility0 = 0.68;  // base fringe contrast, in (0, 1]
    double decay_time = 75e-6;  // visibility decay constant, s
    double phi0 = 0.0;          // technical phase offset, rad
};

struct Violation {
    enum class Severity { error, warning };
    std::string code;
    Severity severity = Severity::error;
    std::string message;
};

/// Reports every violated invariant; never aborts. A config is usable when
/// no error-severity entries are present (warnings are advisory).
inline std::vector<Violation> validate_config(const ExperimentConfig& cfg) {
    using S = Violation::Severity;
    std::vector<Violation> v;
    auto err = [&](const char* code, std::string msg) { v.push_back({code, S::error, std::move(msg)}); };
    auto warn = [&](const char* code, std::string msg) { v.push_back({code, S::warning, std::move(msg)}); };

    const auto& c = cfg.constants;
    if (!(c.hbar > 0)) err("nonpositive_hbar", "hbar must be strictly positive");
    if (!(c.mu_bohr > 0)) err("nonpositive_mu_bohr", "mu_bohr must be strictly positive");
    if (!(c.mass > 0)) err("nonpositive_mass", "mass must be strictly positive");
    if (c.gravity < 0) err("negative_gravity", "gravity must be non-negative");
    else if (c.gravity == 0)
        warn("zero_gravity", "g = 0: free-fall terms vanish (verification limit)");

    if (cfg.levels.mu1_frac == cfg.levels.mu2_frac)
        err("degenerate_level_pair", "degenerate level pair: mu1_frac == mu2_frac gives no differential force");

    if (cfg.field.a_B < 0) err("negative_aB", "a_B must be non-negative");
    else if (cfg.field.a_B == 0)
        warn("zero_aB", "a_B = 0: gradient off, branches are identical");
    if (cfg.field.nonlinearity_fraction < 0 || cfg.field.nonlinearity_fraction > 0.1)
        err("nonlinearity_out_of_range", "nonlinearity_fraction must lie in [0, 0.1]");

    const auto& tm = cfg.timing;
    if (tm.t1 < 0 || tm.t2 < 0 || tm.t3 < 0 || tm.t4 < 0 || tm.td1 < 0 || tm.td2 < 0)
        err("negative_duration", "pulse/delay durations must be non-negative");
    if (tm.t1 == 0)
        warn("degenerate_pulse_duration", "t1 = 0: no gradient pulses, interferometer phase vanishes");
    if (tm.t1 > 0 && std::abs(tm.t4 - tm.t1) > 0.10 * tm.t1)
        warn("t4_deviation", "t4 deviates from t1 by more than 10%");

    if (!(cfg.visibility0 > 0) || cfg.visibility0 > 1)
        err("visibility_out_of_range", "visibility0 must lie in (0, 1]");
    if (!(cfg.decay_time > 0)) err("nonpositive_decay_time", "non-positive decay time");
    if (!std::isfinite(cfg.phi0)) err("nonfinite_phi0", "phi0 must be finite");

    return v;
}

inline bool has_errors(const std::vector<Violation>& violations) {
    for (const auto& x : violations)
        if (x.severity == Violation::Severity::error) return true;
    return false;
}

inline bool is_valid(const ExperimentConfig& cfg) { return !has_errors(validate_config(cfg)); }

} // namespace t3sgi

#endif // T3SGI_CONFIG_HPP
