#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qrep/bell.hpp"

// Entanglement pumping: each round consumes a fresh pair to raise the
// fidelity of a stationary pair. Both nodes run the same two-qubit XX
// evolution on their local atoms, one pair is projected in the computational
// basis, and the record is accepted or rejected by sign-dependent pattern
// tables. A rejected record discards everything.

namespace qrep::purification {

// e^{-i (pi/4) X (x) X}, the protocol gate (a quarter of its period)
Eigen::Matrix4cd xx_gate();

enum class MeasuredPair { fresh, stationary };

struct PumpOutcome {
    std::array<int, 2> bits{};     // computational record on the measured pair
    double probability = 0.0;
    bool accepted = false;
    std::optional<BellDiagonalPair> survivor;  // accepted records only
};

// Accept/reject data tables keyed by the +/- labels of both pairs and the
// measured record; labels are pattern_label() values.
bool pattern_accepted(int stationary_label, int fresh_label, int bit_first, int bit_second,
                      MeasuredPair measured);

// One full round on the 4-qubit state; inputs must be same-family pairs with
// the + state dominant. Returns all four records with conditional survivors.
std::vector<PumpOutcome> pump_round(const BellDiagonalPair& stationary,
                                    const BellDiagonalPair& fresh,
                                    MeasuredPair measured = MeasuredPair::fresh);

struct PumpSchedule {
    double base_fidelity = 0.0;               // f, also the fidelity of every fresh pair
    std::vector<double> fidelities;           // F_1..F_k
    std::vector<double> round_probabilities;  // P_n: one specific accepted record per round
    double pump_probability = 0.0;            // prod_n (2 P_n)
};

// Iterates F_n = F f / (F f + (1-F)(1-f)), P_n = (F f + (1-F)(1-f))/2 from F_0 = f.
PumpSchedule pump_schedule(double f, int rounds);

// Success probability of the full pass: k rounds plus k+1 distributions,
// each conclusive with probability 2 p_dist.
double purified_probability(const PumpSchedule& s, double p_dist);

// Independent check for the four-round case: the expanded degree-14
// polynomial in f times (2 p_dist)^5.
double purified_probability_polynomial(double f, double p_dist);

}  // namespace qrep::purification
