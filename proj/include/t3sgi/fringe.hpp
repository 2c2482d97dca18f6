#ifndef T3SGI_FRINGE_HPP
#define T3SGI_FRINGE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "t3sgi/kinematics.hpp"
#include "t3sgi/phase.hpp"

namespace t3sgi {

enum class EnvelopeForm { exp_t1, exp_total, gauss_t1 };

inline EnvelopeForm envelope_from_string(const std::string& s) {
    if (s == "exp_t1") return EnvelopeForm::exp_t1;
    if (s == "exp_total") return EnvelopeForm::exp_total;
    if (s == "gauss_t1") return EnvelopeForm::gauss_t1;
    throw std::invalid_argument("unknown envelope form: " + s);
}

inline std::string to_string(EnvelopeForm f) {
    switch (f) {
        case EnvelopeForm::exp_t1: return "exp_t1";
        case EnvelopeForm::exp_total: return "exp_total";
        case EnvelopeForm::gauss_t1: return "gauss_t1";
    }
    return "exp_t1";
}

/// Visibility envelope V(T1). The fitted functional form is not uniquely
/// pinned down by the experiment; exp(-T1/tau) is the default.
inline double visibility_envelope(double v0, double tau, double t1, double td,
                                  EnvelopeForm form) {
    switch (form) {
        case EnvelopeForm::exp_t1: return v0 * std::exp(-t1 / tau);
        case EnvelopeForm::exp_total: return v0 * std::exp(-(4.0 * t1 + 2.0 * td) / tau);
        case EnvelopeForm::gauss_t1: return v0 * std::exp(-0.5 * (t1 / tau) * (t1 / tau));
    }
    return v0;
}

/// Shot-to-shot noise model: multiplicative charge fluctuation on a_B
/// (one current shutter per shot, so all four pulses scale together) and
/// binomial detection statistics. atoms_per_shot <= 0 disables sampling
/// noise (infinite-atom limit).
struct NoiseSpec {
    double charge_rel_std = 3.6e-3;
    long atoms_per_shot = 10000;
    int shots_per_point = 20;
};

struct ScanPoint {
    double t1 = 0.0;        // s
    double p1 = 0.0;        // measured fraction in state |1>
    double sigma_p1 = 0.0;  // standard error of p1
};

struct FringeScan {
    enum class Provenance { synthetic, external };
    std::vector<ScanPoint> points;
    double td = 2.6e-6;
    int shots_per_point = 0;
    Provenance provenance = Provenance::synthetic;
    std::uint64_t seed = 0;
    EnvelopeForm envelope = EnvelopeForm::exp_t1;
};

/// delta_Phi(T1) for a scan point: ideal timing with the given T1 and the
/// config's Td, with a_B scaled by `aB_scale` (charge factor). Uses the
/// closed form when valid, the exact kinematics path otherwise.
inline double interferometer_phase(const ExperimentConfig& cfg, double t1, double aB_scale = 1.0) {
    ExperimentConfig c = cfg;
    c.timing = PulseTiming{t1, t1, t1, t1, cfg.timing.td1, cfg.timing.td1};
    c.field.a_B = cfg.field.a_B * aB_scale;
    if (c.field.nonlinearity_fraction == 0.0) return closed_form_phase(c).total;
    return kinematics_phase_difference(c);
}

/// Synthetic fringe scan per the measurement protocol: per shot, draw a
/// charge factor q ~ N(1, charge_rel_std) applied multiplicatively to a_B,
/// evaluate P1 with the decaying visibility envelope, then draw the detected
/// fraction from a binomial with atoms_per_shot atoms. p1 is the shot mean,
/// sigma_p1 the standard error.
inline FringeScan generate_scan(const ExperimentConfig& cfg, const std::vector<double>& t1_grid,
                                const NoiseSpec& noise, std::uint64_t seed,
                                EnvelopeForm envelope = EnvelopeForm::exp_t1) {
    if (t1_grid.empty()) throw std::invalid_argument("generate_scan: empty t1 grid");
    if (noise.shots_per_point <= 0)
        throw std::invalid_argument("generate_scan: shots_per_point must be positive");
    for (std::size_t i = 0; i + 1 < t1_grid.size(); ++i)
        if (!(t1_grid[i] < t1_grid[i + 1]))
            throw std::invalid_argument("generate_scan: t1 grid must be strictly increasing");

    FringeScan scan;
    scan.td = cfg.timing.td1;
    scan.shots_per_point = noise.shots_per_point;
    scan.provenance = FringeScan::Provenance::synthetic;
    scan.seed = seed;
    scan.envelope = envelope;
    scan.points.reserve(t1_grid.size());

    for (std::size_t i = 0; i < t1_grid.size(); ++i) {
        const double t1 = t1_grid[i];
        const double vis =
            visibility_envelope(cfg.visibility0, cfg.decay_time, t1, cfg.timing.td1, envelope);
        // per-point stream: deterministic regardless of execution order
        std::mt19937_64 eng(seed + static_cast<std::uint64_t>(i));
        std::normal_distribution<double> gauss(0.0, 1.0);

        double sum = 0.0, sum2 = 0.0;
        for (int s = 0; s < noise.shots_per_point; ++s) {
            const double q =
                noise.charge_rel_std > 0 ? 1.0 + noise.charge_rel_std * gauss(eng) : 1.0;
            const double dphi = interferometer_phase(cfg, t1, q);
            double p = fringe_probability(dphi, cfg.phi0, vis);
            p = std::min(1.0, std::max(0.0, p));
            double frac = p;
            if (noise.atoms_per_shot > 0) {
                std::binomial_distribution<long> binom(noise.atoms_per_shot, p);
                frac = static_cast<double>(binom(eng)) / static_cast<double>(noise.atoms_per_shot);
            }
            sum += frac;
            sum2 += frac * frac;
        }
        const double n = noise.shots_per_point;
        const double mean = sum / n;
        double sem = 0.0;
        if (noise.shots_per_point > 1) {
            const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
            sem = std::sqrt(var / n);
        } else if (noise.atoms_per_shot > 0) {
            sem = std::sqrt(std::max(mean * (1.0 - mean), 0.0) /
                            static_cast<double>(noise.atoms_per_shot));
        }
        if (sem <= 0.0) sem = 1e-12;  // invariant: sigma_p1 > 0
        scan.points.push_back({t1, mean, sem});
    }
    return scan;
}

struct FitResult {
    enum class Status { converged, max_iterations, degenerate };
    double a_B = 0.0;          // m/s^2
    double phi0 = 0.0;         // rad
    double visibility0 = 0.0;
    double decay_time = 0.0;   // s
    std::array<std::array<double, 4>, 4> covariance{};  // order: a_B, phi0, V0, tau
    double residual_rms = 0.0;
    bool converged = false;
    Status status = Status::degenerate;
    int iterations = 0;
    double chi2 = 0.0;

    double a_B_uncertainty() const { return std::sqrt(covariance[0][0]); }
};

namespace detail {

/// Closed-form phase monomial coefficients: delta_Phi(t1; a) = A a + B a^2.
inline void phase_coefficients(const ExperimentConfig& cfg, double t1, double td, double& A,
                               double& B) {
    const double m = cfg.constants.mass, hbar = cfg.constants.hbar, g = cfg.constants.gravity;
    const double dmu = cfg.levels.mu1_frac - cfg.levels.mu2_frac;
    const double dmu2 = cfg.levels.mu1_frac * cfg.levels.mu1_frac -
                        cfg.levels.mu2_frac * cfg.levels.mu2_frac;
    A = m * g / hbar * dmu * (2.0 * t1 * t1 * t1 + 3.0 * t1 * t1 * td + t1 * td * td);
    B = -m / hbar * dmu2 * (2.0 / 3.0 * t1 * t1 * t1 + t1 * t1 * td);
}

} // namespace detail

/// Weighted Levenberg-Marquardt fit of
///   p1(T1) = (1 - V0 e^{-T1/tau} cos(delta_Phi(T1; a_B) + phi0)) / 2
/// over (a_B, phi0, V0, tau), parameterized internally as
/// (a_B, phi0, logit V0, log tau) to stay in-domain. Multi-starts over
/// phi0 + {0, pi/2, pi, 3pi/2} to escape fringe-ambiguity minima.
inline FitResult fit_scan(const FringeScan& scan, const ExperimentConfig& model_cfg,
                          const FitResult* initial_guess = nullptr, int max_iterations = 300,
                          double step_tolerance = 1e-13) {
    const std::size_t n = scan.points.size();
    if (n < 8) throw std::invalid_argument("fit_scan: need at least 8 points");

    const double td = model_cfg.timing.td1;
    std::vector<double> A(n), B(n), t1(n), y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        t1[i] = scan.points[i].t1;
        y[i] = scan.points[i].p1;
        if (!(scan.points[i].sigma_p1 > 0))
            throw std::invalid_argument("fit_scan: sigma_p1 must be positive");
        w[i] = 1.0 / scan.points[i].sigma_p1;
        detail::phase_coefficients(model_cfg, t1[i], td, A[i], B[i]);
    }

    const double aB0 = initial_guess ? initial_guess->a_B : model_cfg.field.a_B;
    const double v0 = initial_guess ? initial_guess->visibility0 : model_cfg.visibility0;
    const double tau0 = initial_guess ? initial_guess->decay_time : model_cfg.decay_time;
    const double phi00 = initial_guess ? initial_guess->phi0 : model_cfg.phi0;

    // span check: at the starting a_B the scan must cover >= 2 fringe periods
    {
        const double lo = A.front() * aB0 + B.front() * aB0 * aB0;
        const double hi = A.back() * aB0 + B.back() * aB0 * aB0;
        if (std::abs(hi - lo) < 4.0 * std::numbers::pi)
            throw std::invalid_argument("fit_scan: scan spans fewer than 2 fringe periods");
    }

    auto clamp01 = [](double x) { return std::min(1.0 - 1e-12, std::max(1e-12, x)); };
    const double w0 = std::log(clamp01(v0) / (1.0 - clamp01(v0)));
    const double l0 = std::log(tau0 > 0 ? tau0 : 75e-6);

    auto model_and_jac = [&](const Eigen::Vector4d& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        const double aB = x[0], phi0 = x[1];
        const double V0 = 1.0 / (1.0 + std::exp(-x[2]));
        const double tau = std::exp(x[3]);
        double chi2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dphi = A[i] * aB + B[i] * aB * aB;
            const double psi = dphi + phi0;
            const double env = std::exp(-t1[i] / tau);
            const double c = std::cos(psi), s = std::sin(psi);
            const double m = 0.5 * (1.0 - V0 * env * c);
            r[static_cast<long>(i)] = (y[i] - m) * w[i];
            chi2 += r[static_cast<long>(i)] * r[static_cast<long>(i)];
            if (J) {
                const double dm_daB = 0.5 * V0 * env * s * (A[i] + 2.0 * B[i] * aB);
                const double dm_dphi = 0.5 * V0 * env * s;
                const double dm_dw = -0.5 * env * c * V0 * (1.0 - V0);
                const double dm_dl = -0.5 * V0 * env * c * (t1[i] / tau);
                (*J)(static_cast<long>(i), 0) = -dm_daB * w[i];
                (*J)(static_cast<long>(i), 1) = -dm_dphi * w[i];
                (*J)(static_cast<long>(i), 2) = -dm_dw * w[i];
                (*J)(static_cast<long>(i), 3) = -dm_dl * w[i];
            }
        }
        return chi2;
    };

    Eigen::Vector4d best_x;
    double best_chi2 = std::numeric_limits<double>::infinity();
    FitResult::Status best_status = FitResult::Status::degenerate;
    int best_iters = 0;
    bool any_ok = false;

    Eigen::VectorXd r(static_cast<long>(n));
    Eigen::MatrixXd J(static_cast<long>(n), 4);

    for (int start = 0; start < 4; ++start) {
        Eigen::Vector4d x(aB0, phi00 + start * std::numbers::pi / 2.0, w0, l0);
        double lambda = 1e-3;
        double chi2 = model_and_jac(x, r, &J);
        FitResult::Status status = FitResult::Status::max_iterations;
        int it = 0;
        for (; it < max_iterations; ++it) {
            const Eigen::Matrix4d JtJ = J.transpose() * J;
            const Eigen::Vector4d g = J.transpose() * r;
            if (!JtJ.allFinite() || !g.allFinite()) {
                status = FitResult::Status::degenerate;
                break;
            }
            bool stepped = false;
            for (int tries = 0; tries < 40; ++tries) {
                Eigen::Matrix4d M = JtJ;
                for (int d = 0; d < 4; ++d)
                    M(d, d) += lambda * std::max(JtJ(d, d), 1e-30);
                const Eigen::LDLT<Eigen::Matrix4d> ldlt(M);
                if (ldlt.info() != Eigen::Success) {
                    lambda = std::min(lambda * 10.0, 1e14);
                    continue;
                }
                const Eigen::Vector4d dx = ldlt.solve(-g);
                if (!dx.allFinite()) {
                    lambda = std::min(lambda * 10.0, 1e14);
                    continue;
                }
                const Eigen::Vector4d x_new = x + dx;
                const double chi2_new = model_and_jac(x_new, r, nullptr);
                if (chi2_new <= chi2) {
                    // relative step size against natural scales
                    const double rel = std::max(
                        {std::abs(dx[0]) / std::max(std::abs(x[0]), 1.0), std::abs(dx[1]),
                         std::abs(dx[2]), std::abs(dx[3])});
                    x = x_new;
                    const double improvement = chi2 - chi2_new;
                    chi2 = chi2_new;
                    lambda = std::max(lambda * 0.3, 1e-14);
                    model_and_jac(x, r, &J);
                    stepped = true;
                    if (rel < step_tolerance || improvement < 1e-14 * (chi2 + 1e-30))
                        status = FitResult::Status::converged;
                    break;
                }
                lambda = std::min(lambda * 10.0, 1e14);
            }
            if (!stepped) {
                // no downhill step found: treat as converged at a (possibly
                // flat) minimum rather than degenerate
                status = FitResult::Status::converged;
                break;
            }
            if (status == FitResult::Status::converged) break;
        }
        if (chi2 < best_chi2) {
            best_chi2 = chi2;
            best_x = x;
            best_status = status;
            best_iters = it;
            any_ok = true;
        }
    }

    FitResult res;
    if (!any_ok) return res;
    res.a_B = best_x[0];
    res.phi0 = best_x[1];
    res.visibility0 = 1.0 / (1.0 + std::exp(-best_x[2]));
    res.decay_time = std::exp(best_x[3]);
    res.status = best_status;
    res.converged = best_status == FitResult::Status::converged;
    res.iterations = best_iters;
    res.chi2 = model_and_jac(best_x, r, &J);

    double rms = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = r[static_cast<long>(i)] / w[i];
        rms += resid * resid;
    }
    res.residual_rms = std::sqrt(rms / static_cast<double>(n));

    const Eigen::Matrix4d JtJ = J.transpose() * J;
    const Eigen::FullPivLU<Eigen::Matrix4d> lu(JtJ);
    if (lu.isInvertible()) {
        Eigen::Matrix4d C = lu.inverse();
        // internal (a_B, phi0, w, l) -> external (a_B, phi0, V0, tau)
        Eigen::Vector4d scale(1.0, 1.0, res.visibility0 * (1.0 - res.visibility0),
                              res.decay_time);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                res.covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    C(i, j) * scale[i] * scale[j];
    } else {
        res.status = FitResult::Status::degenerate;
        res.converged = false;
    }
    return res;
}

/// Time-of-flight gradient estimate: one gradient pulse of duration t_p on a
/// single-state cloud, centroid read out after free flight. The displacement
/// lever arm is mu_frac * t_p * (tof - t_p/2); Gaussian position noise is
/// added per trial and the estimate inverted from the mean displacement.
struct TofEstimate {
    double a_B_estimate = 0.0;  // m/s^2
    double uncertainty = 0.0;   // standard error over trials
    int n_trials = 0;
};

inline TofEstimate tof_gradient_estimate(double true_a_B, double pulse_duration, double tof,
                                         double position_noise, double mu_frac, int n_trials,
                                         std::uint64_t seed) {
    if (!(pulse_duration > 0)) throw std::invalid_argument("tof: pulse duration must be positive");
    if (!(tof > pulse_duration)) throw std::invalid_argument("tof: flight time must exceed pulse");
    if (n_trials < 1) throw std::invalid_argument("tof: need at least one trial");
    const double lever = mu_frac * pulse_duration * (tof - 0.5 * pulse_duration);
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n_trials; ++i) {
        const double dz = true_a_B * lever + (position_noise > 0 ? position_noise * gauss(eng) : 0.0);
        const double est = dz / lever;
        sum += est;
        sum2 += est * est;
    }
    const double nn = n_trials;
    const double mean = sum / nn;
    double sem = 0.0;
    if (n_trials > 1) {
        const double var = std::max(0.0, (sum2 - nn * mean * mean) / (nn - 1.0));
        sem = std::sqrt(var / nn);
    }
    return TofEstimate{mean, sem, n_trials};
}

} // namespace t3sgi

#endif // T3SGI_FRINGE_HPP
