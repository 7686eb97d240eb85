#include "qrep/purification.hpp"

#include <cmath>
#include <stdexcept>

#include "qrep/qubits.hpp"

namespace qrep::purification {

Eigen::Matrix4cd xx_gate() { return xx_half_pi(); }

namespace {

// accepted records per label pair, indexed [stationary -][fresh -][b1*2+b2];
// rows transcribe the published postselection patterns: a + measured label
// accepts odd parity {01, 10}, a - label accepts even parity {00, 11}
constexpr bool accept_fresh[2][2][4] = {
    {{false, true, true, false}, {true, false, false, true}},   // stationary +
    {{false, true, true, false}, {true, false, false, true}},   // stationary -
};
constexpr bool accept_stationary[2][2][4] = {
    {{false, true, true, false}, {false, true, true, false}},   // stationary +
    {{true, false, false, true}, {true, false, false, true}},   // stationary -
};

int label_index(int label) { return label > 0 ? 0 : 1; }

void check_pumpable(const BellDiagonalPair& p, const char* which) {
    check_pair(p);
    if (!p.same_family() || p.dominant.sign != +1)
        throw std::invalid_argument(std::string(which) +
                                    " pair is not in the pumped same-family form");
}

}  // namespace

bool pattern_accepted(int stationary_label, int fresh_label, int bit_first, int bit_second,
                      MeasuredPair measured) {
    const int s = label_index(stationary_label), f = label_index(fresh_label);
    const int r = bit_first * 2 + bit_second;
    return measured == MeasuredPair::fresh ? accept_fresh[s][f][r] : accept_stationary[s][f][r];
}

std::vector<PumpOutcome> pump_round(const BellDiagonalPair& stationary,
                                    const BellDiagonalPair& fresh, MeasuredPair measured) {
    check_pumpable(stationary, "stationary");
    check_pumpable(fresh, "fresh");

    // qubits: 0, 1 = stationary halves, 2, 3 = fresh halves; one node holds
    // (0, 2), the other (1, 3)
    const Eigen::Matrix4cd u = xx_gate();
    const int ls = pattern_label(stationary), lf = pattern_label(fresh);
    const std::vector<int> measured_qubits =
        measured == MeasuredPair::fresh ? std::vector<int>{2, 3} : std::vector<int>{0, 1};

    std::array<Eigen::Matrix4cd, 4> record_density;
    record_density.fill(Eigen::Matrix4cd::Zero());

    const double w_s[2] = {stationary.fidelity, 1.0 - stationary.fidelity};
    const double w_f[2] = {fresh.fidelity, 1.0 - fresh.fidelity};
    const BellState comp_s[2] = {stationary.dominant, stationary.secondary};
    const BellState comp_f[2] = {fresh.dominant, fresh.secondary};

    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const double w = w_s[a] * w_f[b];
            if (w == 0.0) continue;
            Eigen::VectorXcd psi = kron_vec(bell_vector(comp_s[a]), bell_vector(comp_f[b]));
            apply_gate2(psi, u, 0, 2, 4);
            apply_gate2(psi, u, 1, 3, 4);
            for (int b1 = 0; b1 < 2; ++b1)
                for (int b2 = 0; b2 < 2; ++b2) {
                    const Eigen::VectorXcd rest = collapse(psi, measured_qubits, {b1, b2}, 4);
                    record_density[b1 * 2 + b2] += w * (rest * rest.adjoint());
                }
        }
    }

    const BellFamily survivor_family =
        (measured == MeasuredPair::fresh ? stationary : fresh).dominant.family == BellFamily::phi
            ? BellFamily::psi
            : BellFamily::phi;

    std::vector<PumpOutcome> out;
    for (int b1 = 0; b1 < 2; ++b1)
        for (int b2 = 0; b2 < 2; ++b2) {
            PumpOutcome o;
            o.bits = {b1, b2};
            const Eigen::Matrix4cd& rho = record_density[b1 * 2 + b2];
            o.probability = rho.trace().real();
            o.accepted = pattern_accepted(ls, lf, b1, b2, measured);
            if (o.accepted && o.probability > 0.0) {
                const Eigen::Matrix4cd cond = rho / o.probability;
                const BellState dom{survivor_family, +1}, sec{survivor_family, -1};
                o.survivor = BellDiagonalPair{dom, sec, fidelity_wrt(cond, dom)};
            }
            out.push_back(std::move(o));
        }
    return out;
}

PumpSchedule pump_schedule(double f, int rounds) {
    if (!(f > 0.5 && f <= 1.0))
        throw std::invalid_argument("base fidelity must lie in (1/2, 1]");
    if (rounds < 1) throw std::invalid_argument("at least one round required");
    PumpSchedule s;
    s.base_fidelity = f;
    s.pump_probability = 1.0;
    double F = f;
    for (int n = 0; n < rounds; ++n) {
        const double keep = F * f + (1.0 - F) * (1.0 - f);
        F = F * f / keep;
        s.fidelities.push_back(F);
        s.round_probabilities.push_back(0.5 * keep);
        s.pump_probability *= keep;  // 2 P_n
    }
    return s;
}

double purified_probability(const PumpSchedule& s, double p_dist) {
    if (!(p_dist >= 0.0 && p_dist <= 0.5))
        throw std::invalid_argument("conclusive-pattern probability outside [0, 1/2]");
    const int k = static_cast<int>(s.fidelities.size());
    return s.pump_probability * std::pow(2.0 * p_dist, k + 1);
}

double purified_probability_polynomial(double f, double p_dist) {
    // expanded form of prod_n (2 P_n) for four rounds; lowest power is f^2
    static constexpr double coeff[13] = {15.0,     -180.0,  1130.0,  -4700.0, 14088.0,
                                         -31584.0, 53776.0, -69600.0, 67648.0, -48000.0,
                                         23552.0,  -7168.0, 1024.0};
    double poly = 0.0;
    for (int i = 12; i >= 0; --i) poly = poly * f + coeff[i];
    poly *= f * f;
    return poly * std::pow(2.0 * p_dist, 5);
}

}  // namespace qrep::purification
