#ifndef T3SGI_PHASE_HPP
#define T3SGI_PHASE_HPP

#include <cmath>
#include <stdexcept>

#include "t3sgi/config.hpp"
#include "t3sgi/kinematics.hpp"

namespace t3sgi {

/// Closed-form interferometer phase delta_Phi = Phi_1(T) - Phi_2(T) split
/// into its g*a_B cross term and its a_B^2 term.
struct PhaseBreakdown {
    double gravity_term = 0.0;   // rad
    double magnetic_term = 0.0;  // rad
    double total = 0.0;          // rad, exactly gravity_term + magnetic_term
};

/// Closed form for the ideal sequence (t2 = t3 = t4 = t1, td1 = td2, linear
/// field):
///
///   gravity_term  =  (m g a_B/hbar) (mu1-mu2)/mu_B (2 T1^3 + 3 T1^2 Td + T1 Td^2)
///   magnetic_term = -(m a_B^2/hbar) (mu1^2-mu2^2)/mu_B^2 ((2/3) T1^3 + T1^2 Td)
///
/// The relative sign of the two terms follows from integrating the stated
/// potential exactly (cross-checked against the independent kinematics path,
/// a dense brute-force quadrature, and the Schrodinger oracle; see tests).
/// This implementation deliberately shares no code with the kinematics path.
inline PhaseBreakdown closed_form_phase(const ExperimentConfig& cfg) {
    const auto& tm = cfg.timing;
    if (!tm.is_ideal())
        throw std::invalid_argument(
            "closed_form_phase: requires ideal timing; use the kinematics phase difference "
            "for perturbed sequences");
    if (cfg.field.nonlinearity_fraction != 0.0)
        throw std::invalid_argument(
            "closed_form_phase: derived for a linear field (nonlinearity_fraction = 0)");
    const double t1 = tm.t1, td = tm.td1;
    const double m = cfg.constants.mass, hbar = cfg.constants.hbar;
    const double g = cfg.constants.gravity, aB = cfg.field.a_B;
    const double dmu = cfg.levels.mu1_frac - cfg.levels.mu2_frac;
    const double dmu2 = cfg.levels.mu1_frac * cfg.levels.mu1_frac -
                        cfg.levels.mu2_frac * cfg.levels.mu2_frac;
    PhaseBreakdown pb;
    pb.gravity_term = m * g * aB / hbar * dmu * (2.0 * t1 * t1 * t1 + 3.0 * t1 * t1 * td + t1 * td * td);
    pb.magnetic_term = -m * aB * aB / hbar * dmu2 * (2.0 / 3.0 * t1 * t1 * t1 + t1 * t1 * td);
    pb.total = pb.gravity_term + pb.magnetic_term;
    return pb;
}

/// Pure-cubic limit (Td = 0, total_time = 4 T1):
///   delta_Phi = (m a_B / 32 hbar) (mu1-mu2)/mu_B (g - (mu1+mu2)/(3 mu_B) a_B) T^3.
/// Algebraically identical to closed_form_phase at Td = 0.
inline double phase_t3_limit(const ExperimentConfig& cfg, double total_time) {
    const double m = cfg.constants.mass, hbar = cfg.constants.hbar;
    const double g = cfg.constants.gravity, aB = cfg.field.a_B;
    const double dmu = cfg.levels.mu1_frac - cfg.levels.mu2_frac;
    const double smu = cfg.levels.mu1_frac + cfg.levels.mu2_frac;
    const double T3 = total_time * total_time * total_time;
    return m * aB / (32.0 * hbar) * dmu * (g - smu / 3.0 * aB) * T3;
}

/// Delta-pulse (T1 << Td) limit with fixed kick momentum delta_p0 and
/// total_time = 2 Td:  delta_Phi = (delta_p0 / 4 hbar) g T^2.
inline double phase_t2_limit(double delta_p0, double total_time, double gravity, double hbar) {
    return delta_p0 / (4.0 * hbar) * gravity * total_time * total_time;
}

/// Fringe probability P1 = (1 - V cos(delta_phi + phi0)) / 2.
inline double fringe_probability(double delta_phi, double phi0, double visibility) {
    if (!(visibility >= 0.0 && visibility <= 1.0))
        throw std::invalid_argument("fringe_probability: visibility must lie in [0, 1]");
    return 0.5 * (1.0 - visibility * std::cos(delta_phi + phi0));
}

/// Gaussian center-of-mass wave packet; sigma0 is the position standard
/// deviation (sqrt(<z^2> - <z>^2)).
struct GaussianPacket {
    double sigma0 = 0.5e-6;  // m
    double center = 0.0;     // m
    double momentum = 0.0;   // kg m/s
};

/// Recombination contrast of a minimum-uncertainty Gaussian under residual
/// phase-space displacement (delta_z, delta_p):
///   V = exp[ -dz^2/(8 sigma^2) - sigma^2 dp^2 / (2 hbar^2) ].
/// Width spreading during the sequence is not modelled here; callers that
/// compare against evolved states should pass the width at recombination.
inline double closure_visibility(const ClosureResiduals& r, const GaussianPacket& packet,
                                 double hbar) {
    if (!(packet.sigma0 > 0.0))
        throw std::invalid_argument("closure_visibility: sigma0 must be positive");
    const double s2 = packet.sigma0 * packet.sigma0;
    const double a = r.delta_z * r.delta_z / (8.0 * s2);
    const double b = s2 * r.delta_p * r.delta_p / (2.0 * hbar * hbar);
    return std::exp(-(a + b));
}

} // namespace t3sgi

#endif // T3SGI_PHASE_HPP
