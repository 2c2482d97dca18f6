#ifndef T3SGI_CONSTANTS_HPP
#define T3SGI_CONSTANTS_HPP

namespace t3sgi {

/// Fundamental constants in SI units. Defaults: CODATA values for hbar and
/// the Bohr magneton, the 87Rb atomic mass, and g = 9.8 m/s^2 (overridable;
/// the local value is a parameter, not a constant of the model).
struct PhysicalConstants {
    double hbar    = 1.054571817e-34;   // J s
    double mu_bohr = 9.2740100783e-24;  // J/T
    double mass    = 1.44316060e-25;    // kg (87Rb)
    double gravity = 9.8;               // m/s^2
};

} // namespace t3sgi

#endif // T3SGI_CONSTANTS_HPP
