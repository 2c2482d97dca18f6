#ifndef T3SGI_T3SGI_HPP
#define T3SGI_T3SGI_HPP

// Umbrella header: full-loop four-pulse Stern-Gerlach interferometer
// simulation and parameter estimation.

#include "t3sgi/config.hpp"
#include "t3sgi/constants.hpp"
#include "t3sgi/fringe.hpp"
#include "t3sgi/io.hpp"
#include "t3sgi/kinematics.hpp"
#include "t3sgi/phase.hpp"
#include "t3sgi/pulse_sequence.hpp"
#include "t3sgi/version.hpp"
#include "t3sgi/wavepacket.hpp"

#endif // T3SGI_T3SGI_HPP
