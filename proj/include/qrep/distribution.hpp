#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qrep/bell.hpp"
#include "qrep/constants.hpp"

// Two-node entanglement distribution over a lossy fiber: a coherent bus picks
// up conditional phases at both atoms, the surviving light is recentred and
// interfered with a local oscillator on a balanced splitter, and the two
// single-click patterns herald an atom-atom pair whose fidelity is set by how
// much light the fiber lost.

namespace qrep::distribution {

struct ChannelParams {
    double alpha_sq = 1.0;                        // mean photon number of the bus
    double ell_km = 0.0;                          // segment length
    double ell0_km = attenuation_length_km;       // fiber attenuation length
    double eta() const;                           // transmissivity exp(-ell/ell0)
};
void check_params(const ChannelParams& p);        // throws std::invalid_argument

enum class Pattern { no_click_click, click_no_click, inconclusive };
enum class Engine { coherent, fock };

struct DistributionOutcome {
    Pattern pattern = Pattern::inconclusive;
    double probability = 0.0;
    std::optional<BellDiagonalPair> pair;         // conclusive patterns only
};

struct AnalyticMetrics {
    double f;       // heralded pair fidelity (1 + e^{-2 a^2 (1-eta)})/2
    double p_dist;  // probability of each conclusive pattern (1 - e^{-2 eta a^2})/2
};
AnalyticMetrics analytic_metrics(const ChannelParams& p);

// Full pipeline on the chosen engine; outcomes ordered
// {no_click_click, click_no_click, inconclusive}, probabilities summing to 1.
std::vector<DistributionOutcome> run_distribution(const ChannelParams& p, Engine engine);

// H (x) H relabel of Bell states: phi+ <-> phi+, phi- <-> psi+, psi- <-> psi-.
BellState hadamard_frame(const BellState& b);
// Maps the heralded cross-family mixtures onto same-family pumped form.
BellDiagonalPair apply_hadamard_frame(const BellDiagonalPair& pair);

// Intermediate states exposed for engine cross-checks: the joint state of
// both atoms and the recentred bus right before the splitter, plus the
// conditional atom-pair states per conclusive pattern.
struct Checkpoints {
    int fock_cutoff = 0;                       // ladder size of the reported mode block
    Eigen::MatrixXcd qubits_mode;              // (atom B, atom C, bus), 4*cutoff square
    std::array<Eigen::Matrix4cd, 2> conditional;  // [no_click_click, click_no_click]
    std::array<double, 2> probability;            // matching pattern probabilities
};
Checkpoints protocol_checkpoints(const ChannelParams& p, Engine engine);

}  // namespace qrep::distribution
