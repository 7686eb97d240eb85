#pragma once

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qrep/bell.hpp"

namespace qrep {

// The four measurement vectors used to connect neighbouring pairs: the
// half-pi XX evolution applied to the computational records, listed in the
// order {|11>, |00>, |10>, |01>} so that record k = 1..4 names the k-th entry.
// They are pairwise orthonormal and each is maximally entangled.
std::array<Eigen::Vector4cd, 4> modified_bell_basis();

// Fidelity of the surviving pair after connecting three equal-fidelity
// same-family pairs: F(3 - 6F + 4F^2). Fixed points at 1/2 and 1, increasing
// in between; callers are expected to stay inside [1/2, 1].
double analytic_swap_fidelity(double fidelity);

// Tabulated (dominant, secondary) survivor labels for record indices
// (i, j) in 1..4, transcribed verbatim from the published lookup.
// Note: the published rows are listed in a different record order than the
// basis above; `swap_pairs` reports the labels the projections actually
// produce, and the tests pin the fixed row relabel connecting the two.
std::pair<BellState, BellState> outcome_lookup(int i, int j);

struct SwapOutcome {
    // record indices of the two measured pairs; 0 marks the merged class of
    // odd-parity records {3, 4} when degenerate merging is requested
    int i = 0;
    int j = 0;
    double probability = 0.0;
    BellDiagonalPair pair{{BellFamily::phi, +1}, {BellFamily::phi, -1}, 1.0};
    Eigen::Matrix4cd density = Eigen::Matrix4cd::Zero();  // conditional, unit trace
};

// Connects left (qubits 0,1), middle (2,3), and right (4,5) pairs by
// measuring qubit pairs (0,3) and (1,4) in the modified basis. Returns the
// conditional survivor states on qubits (2,5) for all sixteen record pairs,
// ordered with i outermost. Every conditional is Bell diagonal with the two
// components in one family; the outcome probabilities are uniform.
//
// With merge_degenerate_records set, records 3 and 4 of each measured pair
// (the |10> and |01> classes a shared detector cannot tell apart) are pooled
// into class 0, modelling readout without single-atom resolution; the pooled
// conditional states collapse to fidelity 1/2.
//
// Inputs must each be same-family rank-2 mixtures; mixed-family pairs are
// rejected.
std::vector<SwapOutcome> swap_pairs(const BellDiagonalPair& left,
                                    const BellDiagonalPair& middle,
                                    const BellDiagonalPair& right,
                                    bool merge_degenerate_records = false);

}  // namespace qrep
