#ifndef T3SGI_PULSE_SEQUENCE_HPP
#define T3SGI_PULSE_SEQUENCE_HPP

#include <array>
#include <cmath>
#include <stdexcept>

namespace t3sgi {

/// Durations of the four gradient pulses and the two delays, in seconds.
/// The drive is +1 during pulse 1, off during delay 1, -1 during pulses 2
/// and 3 (applied back-to-back), off during delay 2, and +1 during pulse 4.
/// The ideal sequence has t2 = t3 = t4 = t1 and td1 = td2.
struct PulseTiming {
    double t1  = 70e-6;
    double t2  = 70e-6;
    double t3  = 70e-6;
    double t4  = 70e-6;
    double td1 = 2.6e-6;
    double td2 = 2.6e-6;

    double total() const { return t1 + td1 + t2 + t3 + td2 + t4; }

    bool is_ideal(double rel_tol = 1e-12) const {
        const double s = t1 > 0 ? t1 : 1.0;
        return std::abs(t2 - t1) <= rel_tol * s && std::abs(t3 - t1) <= rel_tol * s &&
               std::abs(t4 - t1) <= rel_tol * s &&
               std::abs(td2 - td1) <= rel_tol * (td1 > 0 ? td1 : s);
    }
};

/// Ideal four-pulse timing: t2 = t3 = t4 = t1, td1 = td2 = td.
inline PulseTiming build_ideal(double t1, double td) {
    if (!(t1 > 0.0)) throw std::invalid_argument("build_ideal: t1 must be positive");
    if (td < 0.0) throw std::invalid_argument("build_ideal: td must be non-negative");
    return PulseTiming{t1, t1, t1, t1, td, td};
}

/// One constant-drive interval of the pulse profile. Polarity is a signed
/// integer in {-1, 0, +1}; the force magnitude lives in FieldModel.
/// Zero-duration segments (start == end) are legal and skipped by integrators.
struct ForceSegment {
    double start = 0.0;
    double end   = 0.0;
    int polarity = 0;

    double duration() const { return end - start; }
};

/// The six segments of the drive profile, tiling [0, total()] exactly.
inline std::array<ForceSegment, 6> force_profile(const PulseTiming& tm) {
    if (tm.t1 < 0 || tm.t2 < 0 || tm.t3 < 0 || tm.t4 < 0 || tm.td1 < 0 || tm.td2 < 0)
        throw std::invalid_argument("force_profile: negative duration");
    std::array<ForceSegment, 6> segs{};
    double t = 0.0;
    const double d[6] = {tm.t1, tm.td1, tm.t2, tm.t3, tm.td2, tm.t4};
    const int pol[6] = {+1, 0, -1, -1, 0, +1};
    for (int i = 0; i < 6; ++i) {
        segs[i] = ForceSegment{t, t + d[i], pol[i]};
        t += d[i];
    }
    return segs;
}

/// Drive polarity at time t; 0 outside [0, total()].
inline int polarity_at(const PulseTiming& tm, double t) {
    if (t < 0.0) return 0;
    for (const auto& s : force_profile(tm))
        if (t >= s.start && t < s.end) return s.polarity;
    return 0;
}

/// Dimensionless closure defects of a timing. momentum_defect is
/// int_0^T F dt / T1 and position_defect is int_0^T (T - tau) F dtau / T1^2;
/// both vanish for the ideal sequence.
struct ClosureDefect {
    double momentum_defect = 0.0;
    double position_defect = 0.0;
};

inline ClosureDefect closure_defect(const PulseTiming& tm) {
    const auto segs = force_profile(tm);
    const double T = tm.total();
    // int F dt: exact cancellation for the ideal case (t1 - t2 - t3 + t4).
    const double m_int = tm.t1 - tm.t2 - tm.t3 + tm.t4;
    // int (T - tau) F dtau = T * int F - int tau F; keeping the first term
    // as T * m_int preserves the exact zero of the ideal case.
    double s_int = 0.0;
    for (const auto& s : segs) {
        if (s.polarity == 0 || s.duration() == 0.0) continue;
        s_int += s.polarity * 0.5 * (s.end * s.end - s.start * s.start);
    }
    const double p_int = T * m_int - s_int;
    const double t1 = tm.t1 > 0 ? tm.t1 : 1.0;
    return ClosureDefect{m_int / t1, p_int / (t1 * t1)};
}

} // namespace t3sgi

#endif // T3SGI_PULSE_SEQUENCE_HPP
