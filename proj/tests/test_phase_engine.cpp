#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "t3sgi/kinematics.hpp"
#include "t3sgi/phase.hpp"

using namespace t3sgi;

namespace {

ExperimentConfig default_cfg() { return ExperimentConfig{}; }

ExperimentConfig with_timing(double t1, double td) {
    ExperimentConfig cfg;
    cfg.timing = PulseTiming{t1, t1, t1, t1, td, td};
    return cfg;
}

/// Test-side oracle: direct grid quadrature of the displaced-Gaussian
/// overlap |<psi| e^{i dp z/hbar} psi(z - dz)|.
double overlap_oracle(double sigma, double dz_shift, double dp_shift, double hbar) {
    const int n = 40001;
    const double span = 12.0 * sigma + std::abs(dz_shift);
    const double h = 2.0 * span / (n - 1);
    const double norm = std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25);
    std::complex<double> acc{0.0, 0.0};
    for (int i = 0; i < n; ++i) {
        const double z = -span + i * h;
        const double a = norm * std::exp(-z * z / (4.0 * sigma * sigma));
        const double zs = z - dz_shift;
        const double b = norm * std::exp(-zs * zs / (4.0 * sigma * sigma));
        acc += a * b * std::polar(1.0, dp_shift * z / hbar);
    }
    return std::abs(acc) * h;
}

} // namespace

TEST_CASE("closed form at the default experiment") {
    const auto pb = closed_form_phase(default_cfg());
    CHECK(pb.gravity_term == Catch::Approx(-1.3274124086237056).epsilon(1e-12));
    CHECK(pb.magnetic_term == Catch::Approx(18.48771483200079).epsilon(1e-12));
    CHECK(pb.total == Catch::Approx(17.160302423377086).epsilon(1e-12));
    CHECK(pb.total == pb.gravity_term + pb.magnetic_term);
}

TEST_CASE("closed form vanishes at T1 = 0") {
    const auto pb = closed_form_phase(with_timing(0.0, 2.6e-6));
    CHECK(pb.gravity_term == 0.0);
    CHECK(pb.magnetic_term == 0.0);
    CHECK(pb.total == 0.0);
}

TEST_CASE("g = 0 kills exactly the gravity term") {
    auto cfg = default_cfg();
    const double mag_ref = closed_form_phase(cfg).magnetic_term;
    cfg.constants.gravity = 0.0;
    const auto pb = closed_form_phase(cfg);
    CHECK(pb.gravity_term == 0.0);
    CHECK(pb.magnetic_term == mag_ref);
}

TEST_CASE("closed form rejects non-ideal timing and nonlinear fields") {
    auto cfg = default_cfg();
    cfg.timing.t4 = 1.08 * cfg.timing.t1;
    CHECK_THROWS_AS(closed_form_phase(cfg), std::invalid_argument);
    auto cfg2 = default_cfg();
    cfg2.field.nonlinearity_fraction = 0.035;
    CHECK_THROWS_AS(closed_form_phase(cfg2), std::invalid_argument);
}

TEST_CASE("closed form equals the kinematics difference over the timing grid") {
    for (double td_us : {0.0, 2.6, 10.0}) {
        for (int t1_us = 1; t1_us <= 70; t1_us += 3) {
            const auto cfg = with_timing(t1_us * 1e-6, td_us * 1e-6);
            const double closed = closed_form_phase(cfg).total;
            const double kin = kinematics_phase_difference(cfg);
            REQUIRE(std::abs(closed - kin) <= 1e-10 * std::abs(closed));
        }
    }
}

TEST_CASE("cubic limit is algebraically identical to the closed form at Td = 0") {
    for (int t1_us = 1; t1_us <= 100; t1_us += 1) {
        const auto cfg = with_timing(t1_us * 1e-6, 0.0);
        const double via_eq9 = closed_form_phase(cfg).total;
        const double via_limit = phase_t3_limit(cfg, 4.0 * cfg.timing.t1);
        REQUIRE(std::abs(via_limit - via_eq9) <= 1e-14 * std::abs(via_eq9));
    }
}

TEST_CASE("cubic limit octuples when T doubles") {
    const auto cfg = default_cfg();
    const double p1 = phase_t3_limit(cfg, 100e-6);
    const double p2 = phase_t3_limit(cfg, 200e-6);
    CHECK(p2 == Catch::Approx(8.0 * p1).epsilon(1e-14));
}

TEST_CASE("largest-phase operating point of the cubic scaling") {
    // T = 285.2 us at the default gradient: the high end of the comparison plot
    const double p = phase_t3_limit(default_cfg(), 285.2e-6);
    CHECK(p == Catch::Approx(17.178092770873032).epsilon(1e-12));
}

TEST_CASE("log-log slope of the cubic phase is exactly 3") {
    const auto cfg = default_cfg();
    std::vector<double> x, y;
    for (int i = 0; i < 40; ++i) {
        const double T = 20e-6 * std::pow(285.2 / 20.0, i / 39.0);
        x.push_back(std::log(T));
        y.push_back(std::log(std::abs(phase_t3_limit(cfg, T))));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    const double n = static_cast<double>(x.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(std::abs(slope - 3.0) <= 1e-9);
}

TEST_CASE("quadratic limit basics") {
    const auto cfg = default_cfg();
    const double hbar = cfg.constants.hbar;
    CHECK(phase_t2_limit(0.0, 1e-3, 9.8, hbar) == 0.0);
    const double p1 = phase_t2_limit(1e-28, 100e-6, 9.8, hbar);
    const double p2 = phase_t2_limit(1e-28, 200e-6, 9.8, hbar);
    CHECK(p2 == Catch::Approx(4.0 * p1).epsilon(1e-14));
}

TEST_CASE("quadratic limit is the T1 << Td asymptote of the gravity term") {
    auto cfg = default_cfg();
    const double td = 2.6e-6;
    const double m = cfg.constants.mass, hbar = cfg.constants.hbar, g = cfg.constants.gravity;
    const double dmu = cfg.levels.delta_frac();
    // fix the kick momentum at the value a_B = 273.16 would give for T1 = Td
    const double dp0 = m * 273.16 * td * dmu;

    std::vector<double> eps_list{1e-2, 1e-3, 1e-4}, dev_list;
    for (double eps : eps_list) {
        const double t1 = eps * td;
        cfg.timing = PulseTiming{t1, t1, t1, t1, td, td};
        cfg.field.a_B = dp0 / (m * t1 * dmu);
        const double grav = closed_form_phase(cfg).gravity_term;
        const double t2_phase = phase_t2_limit(dp0, 2.0 * td, g, hbar);
        const double dev = std::abs(grav - t2_phase) / std::abs(t2_phase);
        // analytic deviation is 3 eps + 2 eps^2
        CHECK(dev == Catch::Approx(3.0 * eps + 2.0 * eps * eps).epsilon(1e-6));
        dev_list.push_back(dev);
    }
    CHECK(dev_list[2] <= 3.001e-4);  // the eps = 1e-4 point

    // measured order of the deviation: slope of log(dev) vs log(eps)
    const double order = std::log(dev_list[0] / dev_list[2]) /
                         std::log(eps_list[0] / eps_list[2]);
    CHECK(order == Catch::Approx(1.0).margin(0.1));
}

TEST_CASE("fringe probability endpoints") {
    CHECK(fringe_probability(0.0, 0.0, 1.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(fringe_probability(std::numbers::pi, 0.0, 1.0) == Catch::Approx(1.0).margin(1e-15));
    CHECK(fringe_probability(1.234, 4.321, 0.0) == Catch::Approx(0.5).margin(1e-15));
    CHECK_THROWS_AS(fringe_probability(0.0, 0.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(fringe_probability(0.0, 0.0, -0.1), std::invalid_argument);
}

TEST_CASE("fringe probability stays in [0,1] and is 2pi-periodic") {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> angle(-10.0, 10.0), vis(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double dphi = angle(eng), phi0 = angle(eng), v = vis(eng);
        const double p = fringe_probability(dphi, phi0, v);
        REQUIRE(p >= 0.0);
        REQUIRE(p <= 1.0);
        const double p_shift = fringe_probability(dphi + 2.0 * std::numbers::pi, phi0, v);
        REQUIRE(p_shift == Catch::Approx(p).margin(1e-12));
    }
}

TEST_CASE("perfect closure has unit visibility") {
    const GaussianPacket packet{0.5e-6};
    const double hbar = PhysicalConstants{}.hbar;
    CHECK(closure_visibility({0.0, 0.0}, packet, hbar) == 1.0);
}

TEST_CASE("half-visibility displacements") {
    const double sigma = 0.5e-6;
    const GaussianPacket packet{sigma};
    const double hbar = PhysicalConstants{}.hbar;
    const double dz_half = 2.0 * sigma * std::sqrt(2.0 * std::log(2.0));
    CHECK(closure_visibility({0.0, dz_half}, packet, hbar) == Catch::Approx(0.5).epsilon(1e-12));
    const double dp_half = std::sqrt(2.0 * std::log(2.0)) * hbar / sigma;
    CHECK(closure_visibility({dp_half, 0.0}, packet, hbar) == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("visibility formula matches the grid overlap oracle") {
    const double sigma = 0.5e-6;
    const GaussianPacket packet{sigma};
    const double hbar = PhysicalConstants{}.hbar;
    for (double dz : {0.0, 0.3e-6, 0.9e-6, 1.3e-6}) {
        for (double dp_scale : {0.0, 0.5, 1.2}) {
            const double dp = dp_scale * hbar / sigma;
            const double model = closure_visibility({dp, dz}, packet, hbar);
            const double oracle = overlap_oracle(sigma, dz, dp, hbar);
            REQUIRE(model == Catch::Approx(oracle).margin(1e-9));
        }
    }
}

TEST_CASE("visibility is monotonically non-increasing in |dz| and |dp|") {
    const GaussianPacket packet{0.5e-6};
    const double hbar = PhysicalConstants{}.hbar;
    std::mt19937_64 eng(17);
    std::uniform_real_distribution<double> uz(0.0, 2e-6), up(0.0, 4.0 * hbar / 0.5e-6);
    for (int i = 0; i < 1000; ++i) {
        const double dz = uz(eng), dp = up(eng);
        const double v = closure_visibility({dp, dz}, packet, hbar);
        REQUIRE(v > 0.0);
        REQUIRE(v <= 1.0);
        REQUIRE(closure_visibility({dp, dz * 1.1}, packet, hbar) <= v);
        REQUIRE(closure_visibility({dp * 1.1, dz}, packet, hbar) <= v);
    }
}
