#pragma once

namespace qrep {

// Fiber transmissivity is eta = exp(-length / attenuation_length).
inline constexpr double attenuation_length_km = 25.0;

// Signal velocity in fiber, m/s.
inline constexpr double signal_velocity = 2.0e8;

// One attempt cycle of a repeater segment costs 14 segment-crossing times
// (distribution plus classically heralded purification rounds).
inline constexpr double crossings_per_cycle = 14.0;

inline constexpr const char* version_string = "0.1.0";

}  // namespace qrep
