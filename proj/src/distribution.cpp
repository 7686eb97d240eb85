#include "qrep/distribution.hpp"

#include <cmath>
#include <stdexcept>

#include "qrep/coherent.hpp"
#include "qrep/fock.hpp"

namespace qrep::distribution {

double ChannelParams::eta() const { return std::exp(-ell_km / ell0_km); }

void check_params(const ChannelParams& p) {
    if (!(p.alpha_sq > 0.0) || !std::isfinite(p.alpha_sq))
        throw std::invalid_argument("mean photon number must be positive");
    if (!(p.ell_km >= 0.0) || !std::isfinite(p.ell_km))
        throw std::invalid_argument("segment length must be nonnegative");
    if (!(p.ell0_km > 0.0)) throw std::invalid_argument("attenuation length must be positive");
}

AnalyticMetrics analytic_metrics(const ChannelParams& p) {
    check_params(p);
    const double eta = p.eta();
    return {0.5 * (1.0 + std::exp(-2.0 * p.alpha_sq * (1.0 - eta))),
            -0.5 * std::expm1(-2.0 * eta * p.alpha_sq)};
}

BellState hadamard_frame(const BellState& b) {
    if (b.family == BellFamily::phi && b.sign < 0) return {BellFamily::psi, +1};
    if (b.family == BellFamily::psi && b.sign > 0) return {BellFamily::phi, -1};
    return b;  // phi+ is fixed; psi- is fixed up to a global sign
}

BellDiagonalPair apply_hadamard_frame(const BellDiagonalPair& pair) {
    check_pair(pair);
    return {hadamard_frame(pair.dominant), hadamard_frame(pair.secondary), pair.fidelity};
}

namespace {

constexpr double half_pi = 1.5707963267948966;

struct SimResult {
    std::array<double, 2> prob;                   // {no_click_click, click_no_click}
    std::array<Eigen::Matrix4cd, 2> conditional;  // normalized when prob > 0
    double inconclusive = 0.0;
    int cutoff = 0;
    Eigen::MatrixXcd qubits_mode;  // only when requested
};

int bus_cutoff(double alpha_sq, double eta) {
    // pre-loss coherent |a>, post-loss kicks reach amplitude 2 sqrt(eta) a
    return fock::cutoff_for(std::max(alpha_sq, 4.0 * eta * alpha_sq));
}

void finish(SimResult& r, double n_a, double n_b, double n_ab, const Eigen::Matrix4cd& rho_a,
            const Eigen::Matrix4cd& rho_b, const Eigen::Matrix4cd& rho_ab) {
    r.prob = {n_a - n_ab, n_b - n_ab};
    r.inconclusive = 1.0 - n_a - n_b + 2.0 * n_ab;
    const Eigen::Matrix4cd raw[2] = {rho_a - rho_ab, rho_b - rho_ab};
    for (int k = 0; k < 2; ++k)
        r.conditional[k] =
            r.prob[k] > 0.0 ? Eigen::Matrix4cd(raw[k] / r.prob[k]) : Eigen::Matrix4cd::Zero();
}

SimResult simulate_coherent(const ChannelParams& p, bool want_checkpoint) {
    using coherent::State;
    const double eta = p.eta();
    const double alpha = std::sqrt(p.alpha_sq);
    const double rea = std::sqrt(eta) * alpha;
    const complexd i1(0.0, 1.0);

    State s(2, {alpha});
    s.controlled_phase(0, 0, -half_pi);
    s.loss(0, eta);
    s.controlled_displacement(1, 0, -i1 * rea);
    s.controlled_phase(1, 0, -half_pi);
    s.displace(0, rea);
    s.convert_basis(0, coherent::Basis::computational);
    s.convert_basis(1, coherent::Basis::computational);
    s.merge_terms();

    SimResult r;
    r.cutoff = bus_cutoff(p.alpha_sq, eta);
    if (want_checkpoint) r.qubits_mode = s.qubit_mode_density(0, r.cutoff);

    s.append_mode(i1 * rea);
    s.beam_splitter(0, 1);

    State sa = s;
    sa.vacuum_project(0);
    State sb = s;
    sb.vacuum_project(1);
    State sab = sa;
    sab.vacuum_project(0);  // the remaining port moved down one slot

    finish(r, sa.norm_sq(), sb.norm_sq(), sab.norm_sq(), sa.qubit_density(), sb.qubit_density(),
           sab.qubit_density());
    return r;
}

SimResult simulate_fock(const ChannelParams& p, bool want_checkpoint) {
    using fock::TensorState;
    const double eta = p.eta();
    const double alpha = std::sqrt(p.alpha_sq);
    const double rea = std::sqrt(eta) * alpha;
    const complexd i1(0.0, 1.0);

    const int db = bus_cutoff(p.alpha_sq, eta);
    const int de = fock::cutoff_for((1.0 - eta) * p.alpha_sq);
    const int da = fock::cutoff_for(2.0 * eta * p.alpha_sq);
    Eigen::VectorXcd q0 = Eigen::VectorXcd::Unit(2, 0);

    // factors: atom B, atom C, bus, loss environment, splitter ancilla
    TensorState s = TensorState::product({q0, q0, fock::coherent_vector(alpha, db),
                                          Eigen::VectorXcd::Unit(de, 0),
                                          fock::coherent_vector(i1 * rea, da)});
    s.controlled_phase(0, 2, -half_pi);
    s.loss_into(2, 3, eta);
    s.controlled_displacement(1, 2, -i1 * rea);
    s.controlled_phase(1, 2, -half_pi);
    s.displace(2, rea);
    s.check_truncation({2, 3, 4}, 1e-8);

    SimResult r;
    r.cutoff = db;
    if (want_checkpoint) r.qubits_mode = s.reduced_density({0, 1, 2});

    s.beam_splitter(2, 4);
    s.check_truncation({2, 3, 4}, 1e-8);

    const TensorState sa = s.project_vacuum(2);   // drop the bus port
    const TensorState sb = s.project_vacuum(4);   // drop the ancilla port
    const TensorState sab = sa.project_vacuum(3); // ancilla slot after the bus was removed

    finish(r, sa.norm_sq(), sb.norm_sq(), sab.norm_sq(), sa.reduced_density({0, 1}),
           sb.reduced_density({0, 1}), sab.reduced_density({0, 1}));
    return r;
}

SimResult simulate(const ChannelParams& p, Engine engine, bool want_checkpoint) {
    check_params(p);
    return engine == Engine::coherent ? simulate_coherent(p, want_checkpoint)
                                      : simulate_fock(p, want_checkpoint);
}

std::optional<BellDiagonalPair> heralded_pair(const Eigen::Matrix4cd& rho, double prob,
                                              BellState dominant, BellState secondary) {
    if (!(prob > 0.0)) return std::nullopt;
    return BellDiagonalPair{dominant, secondary, fidelity_wrt(rho, dominant)};
}

}  // namespace

std::vector<DistributionOutcome> run_distribution(const ChannelParams& p, Engine engine) {
    const SimResult r = simulate(p, engine, false);
    std::vector<DistributionOutcome> out(3);
    out[0] = {Pattern::no_click_click, r.prob[0],
              heralded_pair(r.conditional[0], r.prob[0], {BellFamily::phi, -1},
                            {BellFamily::psi, -1})};
    out[1] = {Pattern::click_no_click, r.prob[1],
              heralded_pair(r.conditional[1], r.prob[1], {BellFamily::phi, +1},
                            {BellFamily::psi, +1})};
    out[2] = {Pattern::inconclusive, r.inconclusive, std::nullopt};
    return out;
}

Checkpoints protocol_checkpoints(const ChannelParams& p, Engine engine) {
    const SimResult r = simulate(p, engine, true);
    Checkpoints c;
    c.fock_cutoff = r.cutoff;
    c.qubits_mode = r.qubits_mode;
    c.conditional = r.conditional;
    c.probability = r.prob;
    return c;
}

}  // namespace qrep::distribution
