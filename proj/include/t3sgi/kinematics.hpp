#ifndef T3SGI_KINEMATICS_HPP
#define T3SGI_KINEMATICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "t3sgi/config.hpp"

namespace t3sgi {

/// Effective acceleration of branch `branch` while the drive polarity is
/// `pol`: a = g + a_B * mu_frac * pol * (1 + eta * pol). The nonlinearity
/// factor (1 +/- eta) models the quadrupole field's unequal up/down force.
inline double branch_acceleration(const ExperimentConfig& cfg, int branch, int pol) {
    if (branch != 1 && branch != 2)
        throw std::invalid_argument("branch index must be 1 or 2");
    const double mu = branch == 1 ? cfg.levels.mu1_frac : cfg.levels.mu2_frac;
    const double eta = cfg.field.nonlinearity_fraction;
    return cfg.constants.gravity + cfg.field.a_B * mu * pol * (1.0 + eta * pol);
}

/// One constant-acceleration interval: on [t_start, t_end] the velocity is
/// linear and the position quadratic in (t - t_start).
struct KinematicSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    int polarity = 0;
    double accel = 0.0;      // m/s^2
    double v_start = 0.0;    // m/s, velocity P/m at t_start
    double z_start = 0.0;    // m
    double phi_start = 0.0;  // rad, action phase accumulated up to t_start
};

/// Exact piecewise-polynomial trajectory and action phase of one branch.
/// P(0) = Z(0) = Phi(0) = 0; values chain continuously across segments.
struct BranchKinematics {
    int branch = 1;
    double mass = 0.0;
    double hbar = 0.0;
    std::vector<KinematicSegment> segments;
    double total_time = 0.0;
    double v_total = 0.0;    // P(T)/m
    double z_total = 0.0;    // Z(T)
    double phi_total = 0.0;  // Phi(T), rad

    const KinematicSegment& segment_at(double t) const {
        if (segments.empty()) throw std::logic_error("empty kinematics");
        for (const auto& s : segments)
            if (t <= s.t_end) return s;
        return segments.back();
    }

    double velocity_at(double t) const {
        if (t <= 0) return 0.0;
        if (t >= total_time) return v_total;
        const auto& s = segment_at(t);
        return s.v_start + s.accel * (t - s.t_start);
    }

    double momentum_at(double t) const { return mass * velocity_at(t); }

    double position_at(double t) const {
        if (t <= 0) return 0.0;
        const auto& s = segment_at(t < total_time ? t : total_time);
        const double dt = (t < total_time ? t : total_time) - s.t_start;
        return s.z_start + s.v_start * dt + 0.5 * s.accel * dt * dt;
    }

    /// Action phase Phi(t) = (1/2hbar) * int_0^t Z(tau) f(tau) dtau, with the
    /// cubic antiderivative evaluated exactly per segment.
    double phase_at(double t) const {
        if (t <= 0) return 0.0;
        const auto& s = segment_at(t < total_time ? t : total_time);
        const double dt = (t < total_time ? t : total_time) - s.t_start;
        const double f = mass * s.accel;
        return s.phi_start +
               f / (2.0 * hbar) *
                   (s.z_start * dt + 0.5 * s.v_start * dt * dt + s.accel * dt * dt * dt / 6.0);
    }
};

/// Closed-form per-segment coefficients from -dV_i/dz = m g + mu_i B' F(t).
inline BranchKinematics branch_kinematics(const ExperimentConfig& cfg, int branch) {
    if (branch != 1 && branch != 2)
        throw std::invalid_argument("branch_kinematics: branch index must be 1 or 2");
    BranchKinematics k;
    k.branch = branch;
    k.mass = cfg.constants.mass;
    k.hbar = cfg.constants.hbar;
    double v = 0.0, z = 0.0, phi = 0.0;
    for (const auto& seg : force_profile(cfg.timing)) {
        const double a = branch_acceleration(cfg, branch, seg.polarity);
        KinematicSegment s{seg.start, seg.end, seg.polarity, a, v, z, phi};
        k.segments.push_back(s);
        const double d = seg.duration();
        if (d > 0.0) {
            const double f = k.mass * a;
            phi += f / (2.0 * k.hbar) * (z * d + 0.5 * v * d * d + a * d * d * d / 6.0);
            z += v * d + 0.5 * a * d * d;
            v += a * d;
        }
    }
    k.total_time = cfg.timing.total();
    k.v_total = v;
    k.z_total = z;
    k.phi_total = phi;
    return k;
}

/// Phi_i(T) per branch (rad), by exact per-segment polynomial integration.
inline double action_phase(const ExperimentConfig& cfg, int branch) {
    return branch_kinematics(cfg, branch).phi_total;
}

/// Branch phase difference Phi_1(T) - Phi_2(T) through the kinematics path.
inline double kinematics_phase_difference(const ExperimentConfig& cfg) {
    return action_phase(cfg, 1) - action_phase(cfg, 2);
}

/// Recombination residuals delta_p = P2(T) - P1(T), delta_z = Z2(T) - Z1(T).
struct ClosureResiduals {
    double delta_p = 0.0;  // kg m/s
    double delta_z = 0.0;  // m
};

/// The residuals are computed from the branch DIFFERENCE analytically, so
/// gravity never enters: results are bit-identical for any g.
inline ClosureResiduals closure_residuals(const ExperimentConfig& cfg) {
    const double du = cfg.field.a_B * (cfg.levels.mu2_frac - cfg.levels.mu1_frac);
    const double eta = cfg.field.nonlinearity_fraction;
    const auto segs = force_profile(cfg.timing);
    const double T = cfg.timing.total();
    // delta_v = du * sum pol(1+eta pol) d;  delta_z = du * int (T-tau) F_eff dtau
    double dv_drive = 0.0;   // sum of pol(1+eta pol) * duration
    double s_int = 0.0;      // sum of pol(1+eta pol) * (e^2 - s^2)/2
    for (const auto& s : segs) {
        if (s.polarity == 0 || s.duration() == 0.0) continue;
        const double w = s.polarity * (1.0 + eta * s.polarity);
        dv_drive += w * s.duration();
        s_int += w * 0.5 * (s.end * s.end - s.start * s.start);
    }
    const double dz_drive = T * dv_drive - s_int;
    return ClosureResiduals{cfg.constants.mass * du * dv_drive, du * dz_drive};
}

/// Composite-Simpson evaluation of the action-phase integral, applied per
/// force segment (the integrand is smooth inside each segment and jumps at
/// the boundaries, so panels never straddle a boundary). Serves as an
/// independent numerical check on the antiderivative algebra of
/// action_phase; agreement is at the rounding floor.
inline double quadrature_phase(const ExperimentConfig& cfg, int branch, long n_steps) {
    if (n_steps < 100) throw std::invalid_argument("quadrature_phase: n_steps must be >= 100");
    const BranchKinematics kin = branch_kinematics(cfg, branch);
    const double T = kin.total_time;
    if (T <= 0) return 0.0;
    double phi = 0.0;
    for (const auto& s : kin.segments) {
        const double d = s.t_end - s.t_start;
        if (d <= 0.0) continue;
        const double f = kin.mass * s.accel;
        auto integrand = [&](double dt) {
            const double z = s.z_start + s.v_start * dt + 0.5 * s.accel * dt * dt;
            return f / (2.0 * cfg.constants.hbar) * z;
        };
        long panels = std::lround(static_cast<double>(n_steps) * d / T / 2.0);
        if (panels < 1) panels = 1;
        const double h = d / (2.0 * panels);
        double acc = 0.0;
        for (long p = 0; p < panels; ++p) {
            const double x0 = 2.0 * p * h;
            acc += integrand(x0) + 4.0 * integrand(x0 + h) + integrand(x0 + 2.0 * h);
        }
        phi += acc * h / 3.0;
    }
    return phi;
}

/// One row of a sampled two-branch trajectory.
struct TrajectoryPoint {
    double t = 0.0;    // s
    double z1 = 0.0;   // m
    double z2 = 0.0;   // m
    double v1 = 0.0;   // m/s (P1/m)
    double v2 = 0.0;   // m/s (P2/m)
    int polarity = 0;
};

/// Samples both branches on a uniform grid plus every segment boundary.
inline std::vector<TrajectoryPoint> sample_trajectory(const ExperimentConfig& cfg,
                                                      std::size_t n_samples) {
    if (n_samples < 2) throw std::invalid_argument("sample_trajectory: need at least 2 samples");
    const auto k1 = branch_kinematics(cfg, 1);
    const auto k2 = branch_kinematics(cfg, 2);
    const double T = cfg.timing.total();
    std::vector<double> ts;
    ts.reserve(n_samples + 8);
    for (std::size_t i = 0; i < n_samples; ++i)
        ts.push_back(T * static_cast<double>(i) / static_cast<double>(n_samples - 1));
    for (const auto& s : k1.segments)
        if (s.t_end > 0 && s.t_end < T) ts.push_back(s.t_end);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    std::vector<TrajectoryPoint> out;
    out.reserve(ts.size());
    for (double t : ts)
        out.push_back({t, k1.position_at(t), k2.position_at(t), k1.velocity_at(t),
                       k2.velocity_at(t), polarity_at(cfg.timing, t)});
    return out;
}

} // namespace t3sgi

#endif // T3SGI_KINEMATICS_HPP
