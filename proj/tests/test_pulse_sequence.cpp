#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "t3sgi/pulse_sequence.hpp"

using namespace t3sgi;

TEST_CASE("build_ideal reproduces the experiment's total time") {
    const auto tm = build_ideal(70e-6, 2.6e-6);
    CHECK(tm.total() == Catch::Approx(285.2e-6).epsilon(1e-14));
    CHECK(tm.t2 == tm.t1);
    CHECK(tm.t3 == tm.t1);
    CHECK(tm.t4 == tm.t1);
    CHECK(tm.td1 == tm.td2);
    CHECK(tm.is_ideal());
}

TEST_CASE("zero delay gives T = 4 t1 exactly") {
    const auto tm = build_ideal(17e-6, 0.0);
    CHECK(tm.total() == 4 * 17e-6);
}

TEST_CASE("build_ideal rejects non-positive t1 and negative td") {
    CHECK_THROWS_AS(build_ideal(0.0, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(build_ideal(-1e-6, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(build_ideal(1e-6, -1e-6), std::invalid_argument);
}

TEST_CASE("force profile lays out the six segments of the drive") {
    const auto tm = build_ideal(1e-6, 1e-6);
    const auto segs = force_profile(tm);
    const int expected_pol[6] = {+1, 0, -1, -1, 0, +1};
    for (int i = 0; i < 6; ++i) {
        CHECK(segs[i].polarity == expected_pol[i]);
        CHECK(segs[i].start == Catch::Approx(i * 1e-6).margin(1e-20));
        CHECK(segs[i].end == Catch::Approx((i + 1) * 1e-6).margin(1e-20));
    }
}

TEST_CASE("polarity queries against the Heaviside windows") {
    const auto tm = build_ideal(70e-6, 2.6e-6);
    const double t1 = tm.t1, td = tm.td1;
    CHECK(polarity_at(tm, t1 / 2) == 1);
    CHECK(polarity_at(tm, t1 + td + t1) == -1);  // inside the reversal window
    CHECK(polarity_at(tm, tm.total() + 1e-9) == 0);
    CHECK(polarity_at(tm, -1e-9) == 0);
    CHECK(polarity_at(tm, t1 + td / 2) == 0);
}

TEST_CASE("segments tile [0, T] with no gaps or overlaps") {
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> u(0.0, 100e-6);
    for (int trial = 0; trial < 500; ++trial) {
        const PulseTiming tm{u(eng), u(eng), u(eng), u(eng), u(eng), u(eng)};
        const auto segs = force_profile(tm);
        double covered = 0.0;
        for (int i = 0; i < 6; ++i) {
            REQUIRE(segs[i].end >= segs[i].start);
            if (i > 0) REQUIRE(segs[i].start == segs[i - 1].end);
            covered += segs[i].duration();
        }
        REQUIRE(segs[0].start == 0.0);
        REQUIRE(std::abs(covered - tm.total()) <= 1e-15 * tm.total());
    }
}

TEST_CASE("ideal sequence closes exactly") {
    const auto d = closure_defect(build_ideal(70e-6, 2.6e-6));
    CHECK(d.momentum_defect == 0.0);  // t1 - t2 - t3 + t4 cancels exactly
    CHECK(std::abs(d.position_defect) <= 1e-12);
    const auto d2 = closure_defect(build_ideal(3.7e-6, 0.0));
    CHECK(d2.momentum_defect == 0.0);
    CHECK(std::abs(d2.position_defect) <= 1e-12);
}

TEST_CASE("stretched fourth pulse leaves an 8% momentum defect") {
    auto tm = build_ideal(70e-6, 2.6e-6);
    tm.t4 = 1.08 * tm.t1;
    const auto d = closure_defect(tm);
    CHECK(d.momentum_defect == Catch::Approx(0.08).epsilon(1e-12));
    // analytic piecewise integration gives f^2/2 for the position defect
    CHECK(d.position_defect == Catch::Approx(0.08 * 0.08 / 2).epsilon(1e-9));
}

TEST_CASE("unequal delays break position closure only") {
    auto tm = build_ideal(70e-6, 2.6e-6);
    const double delta = 1e-6;
    tm.td2 = tm.td1 + delta;
    const auto d = closure_defect(tm);
    CHECK(d.momentum_defect == 0.0);
    // int (T - tau) F dtau = -T1 * delta for this perturbation
    CHECK(d.position_defect == Catch::Approx(-delta / tm.t1).epsilon(1e-9));
}

TEST_CASE("closure defects are invariant under uniform time scaling") {
    auto tm = build_ideal(70e-6, 2.6e-6);
    tm.t4 = 1.05 * tm.t1;
    tm.td2 = 1.3 * tm.td1;
    const auto base = closure_defect(tm);
    for (double lambda : {2.0, 5.0}) {
        PulseTiming scaled{lambda * tm.t1, lambda * tm.t2,  lambda * tm.t3,
                           lambda * tm.t4, lambda * tm.td1, lambda * tm.td2};
        const auto d = closure_defect(scaled);
        CHECK(d.momentum_defect == Catch::Approx(base.momentum_defect).margin(1e-12));
        CHECK(d.position_defect == Catch::Approx(base.position_defect).margin(1e-10));
    }
}

TEST_CASE("zero-duration delays are legal segments") {
    const auto tm = build_ideal(5e-6, 0.0);
    const auto segs = force_profile(tm);
    CHECK(segs[1].duration() == 0.0);
    CHECK(segs[4].duration() == 0.0);
    CHECK(segs[1].start == segs[1].end);
}
