#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "qrep/qubits.hpp"

namespace qrep {

enum class BellFamily { phi, psi };  // phi: (|00> ± |11>)/sqrt2, psi: (|01> ± |10>)/sqrt2

struct BellState {
    BellFamily family;
    int sign;  // +1 or -1

    friend bool operator==(const BellState&, const BellState&) = default;
};

inline std::string to_string(BellState b) {
    std::string s = (b.family == BellFamily::phi) ? "phi" : "psi";
    return s + (b.sign > 0 ? "+" : "-");
}

inline Eigen::Vector4cd bell_vector(BellState b) {
    Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
    const double r = 1.0 / std::sqrt(2.0);
    if (b.family == BellFamily::phi) {
        v(0) = r;
        v(3) = b.sign * r;
    } else {
        v(1) = r;
        v(2) = b.sign * r;
    }
    return v;
}

// Rank-2 Bell-diagonal two-qubit state F|dom><dom| + (1-F)|sec><sec|.
struct BellDiagonalPair {
    BellState dominant;
    BellState secondary;
    double fidelity;  // weight of the dominant component

    bool same_family() const { return dominant.family == secondary.family; }
};

inline void check_pair(const BellDiagonalPair& p) {
    if (!(p.fidelity >= 0.0 && p.fidelity <= 1.0))
        throw std::invalid_argument("pair fidelity outside [0,1]");
    if (p.dominant == p.secondary)
        throw std::invalid_argument("degenerate Bell-diagonal pair");
}

inline Eigen::Matrix4cd pair_density(const BellDiagonalPair& p) {
    const Eigen::Vector4cd d = bell_vector(p.dominant), s = bell_vector(p.secondary);
    return p.fidelity * d * d.adjoint() + (1.0 - p.fidelity) * s * s.adjoint();
}

inline double fidelity_wrt(const Eigen::Matrix4cd& rho, BellState b) {
    const Eigen::Vector4cd v = bell_vector(b);
    return std::real(v.dot(rho * v));  // Eigen's dot conjugates the left argument
}

// The +/- subscript the postselection tables branch on: the family for pumped
// same-family pairs, the dominant sign for freshly heralded cross-family pairs
// (invariant under the Hadamard relabeling between the two forms).
inline int pattern_label(const BellDiagonalPair& p) {
    if (p.same_family()) return p.dominant.family == BellFamily::phi ? +1 : -1;
    return p.dominant.sign;
}

}  // namespace qrep
