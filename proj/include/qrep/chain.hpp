#pragma once

#include "qrep/constants.hpp"

namespace qrep {

// Timing model behind the reported rates. The per-attempt cycle time is
// scheduling_factor * 14 ell / light_speed; the scheduling factor collects
// interaction and readout times relative to the classical-communication time
// and is never fixed numerically, so rates are reported multiplied by it
// (the factor cancels in the rescaled form).
struct RateModel {
    double light_speed_m_s = signal_velocity;
    double scheduling_factor = 1.0;
};

// Fidelity after composing N equal same-family segments through N-1
// connections: (1 + (2F-1)^N)/2. Identical to iterating the pairwise rule
// F_ab = F_a F_b + (1-F_a)(1-F_b); callers keep F in [1/2, 1], N >= 1.
double chain_fidelity(double fidelity, int segments);

// Mean number of attempt rounds until all N segments have succeeded at least
// once, for per-round success probability p in (0, 1]: the expectation of the
// maximum of N independent geometric variables.
double expected_attempts(int segments, double success_probability);

// Segment length (km) at which the N-segment chain with the given pumping
// depth reaches exactly the requested final fidelity. Inverts the chain
// composition, then the pumping recursion (bisection), then the channel map.
// Throws if no length can reach the target (the infinite-length fidelity
// floor of the channel lies above it).
double plan_segment_length(double f_final, int segments, double alpha_sq, int rounds);

// One operating point of the full protocol stack with every derived figure
// of merit filled in.
struct RepeaterPlan {
    double alpha_sq = 1.0;
    double ell_km = 0.0;
    int segments = 3;
    int rounds = 4;
    double p_sw = 1.0;  // measurement efficiency of one swapping

    // derived
    double f = 0.0;               // heralded segment fidelity
    double pumped_fidelity = 0.0;  // after the pumping rounds
    double p_pd = 0.0;            // distribution + pumping success probability
    double p_total = 0.0;         // p_sw^2 * p_pd
    double f_final = 0.0;         // after chaining all segments
    double attempts = 0.0;        // expected attempt rounds for all segments
    double rate_rescaled = 0.0;   // pairs per second, times the scheduling factor
};

RepeaterPlan make_plan(double alpha_sq, double ell_km, int segments, int rounds,
                       double p_sw, const RateModel& model = {});

// Rescaled pair rate light_speed / (14 ell attempts(p_total)); requires a
// strictly positive segment length.
double rescaled_rate(const RepeaterPlan& plan, const RateModel& model = {});

}  // namespace qrep
