#ifndef T3SGI_WAVEPACKET_HPP
#define T3SGI_WAVEPACKET_HPP

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "t3sgi/kinematics.hpp"
#include "t3sgi/phase.hpp"

namespace t3sgi {

/// Spatial/temporal discretization of the Schrodinger oracle. n_points must
/// be a power of two (>= 1024); dt is a target step, realized per force
/// segment as dt_k = duration / ceil(duration/dt) so that the potential
/// switches exactly at step boundaries.
struct GridSpec {
    double z_min = -8e-6;  // m
    double z_max = 8e-6;   // m
    int n_points = 2048;
    double dt = 40e-9;     // s

    double dz() const { return (z_max - z_min) / n_points; }
};

inline void check_grid(const GridSpec& g) {
    if (!(g.z_max > g.z_min)) throw std::invalid_argument("GridSpec: z_max must exceed z_min");
    if (g.n_points < 1024 || (g.n_points & (g.n_points - 1)) != 0)
        throw std::invalid_argument("GridSpec: n_points must be a power of two >= 1024");
    if (!(g.dt > 0)) throw std::invalid_argument("GridSpec: dt must be positive");
}

/// Complex amplitudes on a uniform grid z_j = z_min + j dz.
struct Wavefunction {
    double z_min = 0.0;
    double dz = 0.0;
    std::vector<std::complex<double>> amp;

    double z_at(std::size_t j) const { return z_min + static_cast<double>(j) * dz; }

    double norm() const {
        double s = 0.0;
        for (const auto& a : amp) s += std::norm(a);
        return s * dz;
    }

    double mean_z() const {
        double s = 0.0, w = 0.0;
        for (std::size_t j = 0; j < amp.size(); ++j) {
            const double p = std::norm(amp[j]);
            s += p * z_at(j);
            w += p;
        }
        return s / w;
    }

    double var_z() const {
        const double mu = mean_z();
        double s = 0.0, w = 0.0;
        for (std::size_t j = 0; j < amp.size(); ++j) {
            const double p = std::norm(amp[j]);
            const double d = z_at(j) - mu;
            s += p * d * d;
            w += p;
        }
        return s / w;
    }
};

namespace detail {

/// RAII pair of in-place FFTW plans over one buffer. Plan creation is
/// serialized (FFTW planning is not thread-safe); execution is.
class FftPair {
  public:
    FftPair(std::complex<double>* buf, int n) {
        std::lock_guard<std::mutex> lock(mutex());
        auto* p = reinterpret_cast<fftw_complex*>(buf);
        fwd_ = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("FFTW plan creation failed");
    }
    ~FftPair() {
        std::lock_guard<std::mutex> lock(mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    FftPair(const FftPair&) = delete;
    FftPair& operator=(const FftPair&) = delete;

    void forward() const { fftw_execute(fwd_); }
    void backward() const { fftw_execute(bwd_); }

  private:
    static std::mutex& mutex() {
        static std::mutex m;
        return m;
    }
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

/// Angular wavenumber of FFT bin j for an n-point grid of length L.
inline double fft_wavenumber(int j, int n, double length) {
    const int jj = j < n / 2 ? j : j - n;
    return 2.0 * std::numbers::pi * jj / length;
}

} // namespace detail

/// Normalized Gaussian sampled on the grid.
inline Wavefunction make_gaussian(const GridSpec& grid, const GaussianPacket& packet,
                                  double hbar) {
    if (!(packet.sigma0 > 0)) throw std::invalid_argument("GaussianPacket: sigma0 must be positive");
    Wavefunction psi;
    psi.z_min = grid.z_min;
    psi.dz = grid.dz();
    psi.amp.resize(grid.n_points);
    const double s2 = packet.sigma0 * packet.sigma0;
    for (int j = 0; j < grid.n_points; ++j) {
        const double z = psi.z_at(j) - packet.center;
        const double envelope = std::exp(-z * z / (4.0 * s2));
        const double phase = packet.momentum * z / hbar;
        psi.amp[j] = envelope * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    const double n0 = psi.norm();
    for (auto& a : psi.amp) a /= std::sqrt(n0);
    return psi;
}

/// Split-operator (Strang) evolution of one branch through the full pulse
/// sequence under V_i(z, t) = -[m g + mu_i B' F(t)] z. Second order in dt;
/// norm-conserving. Throws "grid too small" if the packet approaches within
/// 6 sigma of either grid edge at any step.
inline Wavefunction evolve_packet(const ExperimentConfig& cfg, int branch,
                                  const GaussianPacket& packet, const GridSpec& grid) {
    check_grid(grid);
    const double hbar = cfg.constants.hbar;
    const double mass = cfg.constants.mass;
    const int n = grid.n_points;
    const double L = grid.z_max - grid.z_min;

    Wavefunction psi = make_gaussian(grid, packet, hbar);
    detail::FftPair fft(psi.amp.data(), n);

    std::vector<double> z(n), k2(n);
    for (int j = 0; j < n; ++j) {
        z[j] = psi.z_at(j);
        const double k = detail::fft_wavenumber(j, n, L);
        k2[j] = k * k;
    }
    std::vector<std::complex<double>> kin_half(n), pot_half(n);

    auto leak_check = [&]() {
        const double mu = psi.mean_z();
        const double sig = std::sqrt(psi.var_z());
        if (mu - 6.0 * sig < grid.z_min || mu + 6.0 * sig > grid.z_max)
            throw std::runtime_error("grid too small: packet within 6 sigma of the boundary");
    };
    leak_check();

    for (const auto& seg : force_profile(cfg.timing)) {
        const double d = seg.duration();
        if (d <= 0.0) continue;
        const long steps = std::max(1L, std::lround(std::ceil(d / grid.dt)));
        const double h = d / static_cast<double>(steps);

        const double a = branch_acceleration(cfg, branch, seg.polarity);
        const double f = mass * a;  // -dV/dz, constant on the segment
        for (int j = 0; j < n; ++j) {
            const double kin_phase = -hbar * k2[j] * h / (2.0 * mass);
            kin_half[j] = std::polar(1.0, kin_phase);
            const double pot_phase = f * z[j] * h / (2.0 * hbar);
            pot_half[j] = std::polar(1.0, pot_phase);
        }
        const double inv_n = 1.0 / n;
        for (long s = 0; s < steps; ++s) {
            for (int j = 0; j < n; ++j) psi.amp[j] *= pot_half[j];
            fft.forward();
            for (int j = 0; j < n; ++j) psi.amp[j] *= kin_half[j] * inv_n;
            fft.backward();
            for (int j = 0; j < n; ++j) psi.amp[j] *= pot_half[j];
            leak_check();
        }
    }
    return psi;
}

/// Mean momentum <p> = sum hbar k |psi(k)|^2, computed spectrally.
inline double mean_momentum(const Wavefunction& psi, double hbar) {
    const int n = static_cast<int>(psi.amp.size());
    std::vector<std::complex<double>> buf = psi.amp;
    detail::FftPair fft(buf.data(), n);
    fft.forward();
    const double L = psi.dz * n;
    double s = 0.0, w = 0.0;
    for (int j = 0; j < n; ++j) {
        const double p = std::norm(buf[j]);
        s += p * hbar * detail::fft_wavenumber(j, n, L);
        w += p;
    }
    return s / w;
}

/// <psi| D[dz, dp] |psi> evaluated numerically: spectral shift by dz, phase
/// ramp dp, grid quadrature. Exact for band-limited, well-contained states.
inline std::complex<double> displaced_overlap(const Wavefunction& psi, double dz_shift,
                                              double dp_shift, double hbar) {
    const int n = static_cast<int>(psi.amp.size());
    std::vector<std::complex<double>> shifted = psi.amp;
    detail::FftPair fft(shifted.data(), n);
    fft.forward();
    const double L = psi.dz * n;
    for (int j = 0; j < n; ++j) {
        const double k = detail::fft_wavenumber(j, n, L);
        shifted[j] *= std::polar(1.0 / n, -k * dz_shift);
    }
    fft.backward();
    // (D psi)(z) = exp(-i dp dz/(2 hbar)) exp(i dp z/hbar) psi(z - dz)
    std::complex<double> acc{0.0, 0.0};
    for (int j = 0; j < n; ++j) {
        const double z = psi.z_at(j);
        const auto ramp = std::polar(1.0, dp_shift * (z - 0.5 * dz_shift) / hbar);
        acc += std::conj(psi.amp[j]) * ramp * shifted[j];
    }
    return acc * psi.dz;
}

/// Comparison of the numerically evolved two-branch state against the
/// analytic factorization: displacements, accumulated phase, and overlap.
struct OracleReport {
    double phase_error = 0.0;           // rad, |arg<psi2|psi1> - analytic|
    double displacement_error_z = 0.0;  // m, worst branch
    double displacement_error_p = 0.0;  // kg m/s, worst branch
    double overlap_numeric = 0.0;       // |<psi2(T)|psi1(T)>|
    double overlap_analytic = 0.0;      // Gaussian closure model at sigma(T)
    double norm_drift = 0.0;            // max |norm - 1| over both branches
    double delta_phi_numeric = 0.0;     // rad, wrapped
    double delta_phi_analytic = 0.0;    // rad, wrapped
};

inline double wrap_angle(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a > std::numbers::pi) a -= two_pi;
    if (a <= -std::numbers::pi) a += two_pi;
    return a;
}

/// Evolves both branches and checks the analytic factorization: centroid
/// against Z_i(T) + free flight, momentum against P_i(T), overlap phase
/// against delta_Phi (with the exact displacement-product correction), and
/// overlap magnitude against the Gaussian closure model evaluated with the
/// free-spread width sigma(T).
inline OracleReport verify_factorization(const ExperimentConfig& cfg,
                                         const GaussianPacket& packet, const GridSpec& grid) {
    const double hbar = cfg.constants.hbar;
    const double mass = cfg.constants.mass;
    const double T = cfg.timing.total();

    const Wavefunction psi1 = evolve_packet(cfg, 1, packet, grid);
    const Wavefunction psi2 = evolve_packet(cfg, 2, packet, grid);
    const BranchKinematics k1 = branch_kinematics(cfg, 1);
    const BranchKinematics k2 = branch_kinematics(cfg, 2);

    OracleReport rep;
    rep.norm_drift = std::max(std::abs(psi1.norm() - 1.0), std::abs(psi2.norm() - 1.0));

    const double free_z = packet.center + packet.momentum / mass * T;
    const double ez1 = std::abs(psi1.mean_z() - (k1.z_total + free_z));
    const double ez2 = std::abs(psi2.mean_z() - (k2.z_total + free_z));
    rep.displacement_error_z = std::max(ez1, ez2);
    const double ep1 = std::abs(mean_momentum(psi1, hbar) - (mass * k1.v_total + packet.momentum));
    const double ep2 = std::abs(mean_momentum(psi2, hbar) - (mass * k2.v_total + packet.momentum));
    rep.displacement_error_p = std::max(ep1, ep2);

    std::complex<double> overlap{0.0, 0.0};
    for (std::size_t j = 0; j < psi1.amp.size(); ++j)
        overlap += std::conj(psi2.amp[j]) * psi1.amp[j];
    overlap *= psi1.dz;
    rep.overlap_numeric = std::abs(overlap);

    // <psi2|psi1> = e^{i dPhi} e^{i(Z2 P1 - P2 Z1)/2hbar} <phi_T| D[dZ, dP] |phi_T>
    const double dPhi = k1.phi_total - k2.phi_total;
    const double Z1 = k1.z_total, Z2 = k2.z_total;
    const double P1 = mass * k1.v_total, P2 = mass * k2.v_total;
    const double dZ = Z1 - Z2, dP = P1 - P2;
    const double arg_pred = dPhi + (Z2 * P1 - P2 * Z1) / (2.0 * hbar) +
                            (dP * free_z - dZ * packet.momentum) / hbar;
    rep.delta_phi_numeric = wrap_angle(std::arg(overlap));
    rep.delta_phi_analytic = wrap_angle(arg_pred);
    rep.phase_error = std::abs(wrap_angle(std::arg(overlap) - arg_pred));

    const double sig_p = hbar / (2.0 * packet.sigma0);
    const double sigma_T =
        std::sqrt(packet.sigma0 * packet.sigma0 + std::pow(sig_p * T / mass, 2));
    rep.overlap_analytic = closure_visibility(ClosureResiduals{P2 - P1, Z2 - Z1},
                                              GaussianPacket{sigma_T}, hbar);
    return rep;
}

/// Grid window and step suggestion: covers both branch excursions plus
/// 10 sigma(T) of packet width, with Nyquist headroom for the classical
/// momentum range plus the packet's own momentum spread.
inline GridSpec suggest_grid(const ExperimentConfig& cfg, const GaussianPacket& packet,
                             int steps_per_shortest_segment = 64) {
    const double hbar = cfg.constants.hbar;
    const double mass = cfg.constants.mass;
    const double T = cfg.timing.total();

    double z_lo = 0.0, z_hi = 0.0, v_max = 0.0, shortest = T > 0 ? T : 1e-6;
    for (int branch : {1, 2}) {
        const auto kin = branch_kinematics(cfg, branch);
        for (const auto& s : kin.segments) {
            const double d = s.t_end - s.t_start;
            if (d > 0.0 && d < shortest) shortest = d;
            for (double dt : {0.0, d}) {
                const double zz = s.z_start + s.v_start * dt + 0.5 * s.accel * dt * dt;
                z_lo = std::min(z_lo, zz);
                z_hi = std::max(z_hi, zz);
                v_max = std::max(v_max, std::abs(s.v_start + s.accel * dt));
            }
            if (s.accel != 0.0) {
                const double t_vertex = -s.v_start / s.accel;
                if (t_vertex > 0.0 && t_vertex < d) {
                    const double zz =
                        s.z_start + s.v_start * t_vertex + 0.5 * s.accel * t_vertex * t_vertex;
                    z_lo = std::min(z_lo, zz);
                    z_hi = std::max(z_hi, zz);
                }
            }
        }
    }
    const double sig_p = hbar / (2.0 * packet.sigma0);
    const double sigma_T =
        std::sqrt(packet.sigma0 * packet.sigma0 + std::pow(sig_p * T / mass, 2));
    const double pad = 10.0 * sigma_T;

    GridSpec g;
    g.z_min = packet.center + z_lo - pad;
    g.z_max = packet.center + z_hi + pad;
    const double k_span =
        (mass * v_max + std::abs(packet.momentum)) / hbar + 8.0 * sig_p / hbar;
    const double L = g.z_max - g.z_min;
    int n = 1024;
    while (std::numbers::pi * n / L < 1.5 * k_span && n < (1 << 22)) n <<= 1;
    g.n_points = std::max(n, 2048);
    g.dt = shortest / static_cast<double>(std::max(1, steps_per_shortest_segment));
    return g;
}

} // namespace t3sgi

#endif // T3SGI_WAVEPACKET_HPP
