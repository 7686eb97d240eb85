#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

// Numerical check of the cavity-QED reduction chain. The driven three-level
// atom (levels 0, 1, e) coupled to one cavity mode is integrated exactly (up
// to Fock truncation) in the first interaction picture, where the model reads
//
//   H = dl_detuning_phase * [ (g/2) a |e><0| + (O/2)(|e><0| + |e><1|) ] - h.c.
//       + Delta a'a,            dl_detuning_phase = exp(-i Delta_L t),
//
// and the result is compared against the closed-form effective models that a
// sequence of frame changes and second-order eliminations is supposed to
// produce: a mode displacement conditioned on the qubit's sigma_x eigenvalue
// (coupling J1), or a per-photon phase conditioned on sigma_x (coupling J2).
// The comparison applies the same frame changes to the integrated state, so
// residual infidelity measures the quality of the eliminations themselves.

namespace qrep::hamiltonians {

using complexd = std::complex<double>;

// State layout: amplitude index = level*cutoff + n with level in {0, 1, e}.
using State = Eigen::VectorXcd;

struct FullHamiltonianParams {
    double g = 0.0;        // atom-cavity coupling (rad/s)
    double omega = 0.0;    // laser drive coupling (rad/s)
    double delta_l = 0.0;  // laser detuning from the dressed e-transition
    double delta_c = 0.0;  // cavity detuning
    int cutoff = 14;       // Fock levels retained per atomic level

    double delta() const { return delta_l - delta_c; }
    // Detuning of the qubit-mode exchange term that survives once the drive
    // rotation is absorbed; requires delta_l != 0.
    double small_delta() const;

    // Regime flags, all using a factor-10 reading of the "much greater than"
    // conditions. They are descriptive: evolutions are computed either way.
    bool dispersive() const;      // both detunings dominate g and omega
    bool strong_driving() const;  // drive shift dominates Delta and the J1 rate
    bool phase_regime() const;    // exchange detuning positive, below the drive
                                  // shift, and dominating the exchange rate
};

struct EffectiveCouplings {
    double j1 = 0.0;  // conditional displacement rate g*omega/(4 delta_l)
    double j2 = 0.0;  // conditional phase rate g^2 omega^2 / (32 delta_l^2 small_delta)
};

// Closed forms above; throws std::domain_error when a denominator vanishes
// (delta_l always; small_delta only when it actually divides, i.e. g*omega != 0).
EffectiveCouplings effective_couplings(const FullHamiltonianParams& params);

// |level> tensor |n>, and |level> tensor coherent alpha (renormalized after
// truncation). level: 0, 1, or 2 for the excited state.
State basis_state(int level, int n, int cutoff);
State coherent_state(int level, complexd alpha, int cutoff);

struct Trajectory {
    State state;
    double max_excited_population = 0.0;  // largest e-level weight seen
    double final_norm = 1.0;              // drift diagnostic, no renormalization
    long steps = 0;                       // accepted integrator steps
};

// Adaptive embedded Runge-Kutta 5(4) integration of the Schrodinger equation
// under the interaction-picture model, relative tolerance 1e-10. Throws on
// step-size underflow and when weight in the top Fock level of any atomic
// level exceeds 1e-8 (truncation no longer trustworthy).
Trajectory integrate_full(const FullHamiltonianParams& params, const State& initial, double t);

enum class EffectiveMode { displacement, phase };

// Closed-form evolution of the target model for duration t: conditional
// displacement exp(-i (J1/2) t (a+a') sigma_x), or the photon-number term of
// the conditional phase model, exp(-i (J2/2) t a'a sigma_x).
State effective_evolve(const FullHamiltonianParams& params, EffectiveMode mode,
                       const State& initial, double t);

// Frame map making the integrated state comparable with effective_evolve:
// the mode rotation exp(i Delta a'a t) plus the uniform sigma_x precession
// accumulated along the reduction (drive shift omega^2/(4 delta_l), and in
// phase mode also the J2/4 precession split off the conditional phase model).
State comparison_frame(const FullHamiltonianParams& params, EffectiveMode mode,
                       const State& evolved, double t);

struct RegimeError {
    double infidelity = 0.0;        // worst 1 - |<effective|framed full>|^2
    double leakage = 0.0;           // worst max e-population across states
    std::vector<double> per_state;  // infidelity per test state
    bool regime_warning = false;    // params fell outside the mode's flags
};

// Integrates every test state under the full model and under the effective
// model for the same duration and reports the worst-case disagreement.
// Trajectories run in parallel. Default test states: {|0>, |1>} x {vacuum,
// coherent(0.5)}.
RegimeError regime_error(const FullHamiltonianParams& params, EffectiveMode mode, double t,
                         const std::vector<State>& test_states);
RegimeError regime_error(const FullHamiltonianParams& params, EffectiveMode mode, double t);

// Demonstration parameter sets (illustrative, not fitted): displacement runs
// at g = omega with Delta = 0 and detuning ratio = delta_l/g; phase runs at
// drive shift omega^2/(2 delta_l) = 5 small_delta with g = 0.08 omega so the
// exchange term is dispersive (small_delta = 10 * exchange rate).
FullHamiltonianParams displacement_demo(double ratio, int cutoff = 14);
FullHamiltonianParams phase_demo(double ratio, int cutoff = 14);

// Nearest time >= raw where the fast frame factors close: multiples of
// 2 pi / delta_l, or of 2 pi / sqrt(delta_l^2 + 2 omega^2) when g = 0 (the
// drive then only dresses the atom and revivals follow the generalized Rabi
// frequency). Comparisons between frames are made at such times.
double stroboscopic_time(const FullHamiltonianParams& params, double raw);

// Demo duration per mode: displacement until |beta| = J1 t / 2 = 0.3, snapped
// stroboscopically; phase until the conditional phase per photon is near
// pi/8, at a multiple of 2 pi / small_delta so the residual exchange dressing
// closes (then snapped as above, which is exact when delta_l/small_delta is
// an integer, as in phase_demo).
double demo_time(const FullHamiltonianParams& params, EffectiveMode mode);

// Truncated displacement operator exp(beta a' - conj(beta) a) on cutoff Fock
// levels. Composition tracks the metaplectic phase:
// D(b1) D(b2) = exp(i Im(b1 conj(b2))) D(b1+b2).
Eigen::MatrixXcd displacement_operator(complexd beta, int cutoff);

// Empirical constant in the dispersive leakage bound: max e-population stays
// below (omega/(2 delta_l))^2 * leakage_bound_constant once both detunings
// are at least 20 max(g, omega). Pinned by the regime sweep.
inline constexpr double leakage_bound_constant = 10.0;

}  // namespace qrep::hamiltonians
