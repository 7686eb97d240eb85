#include "qrep/swapping.hpp"

#include <stdexcept>

#include "qrep/qubits.hpp"

namespace qrep {

std::array<Eigen::Vector4cd, 4> modified_bell_basis() {
    const Eigen::Matrix4cd u = xx_half_pi();
    // computational records |11>, |00>, |10>, |01> as state indices
    constexpr int record[4] = {3, 0, 2, 1};
    std::array<Eigen::Vector4cd, 4> m;
    for (int k = 0; k < 4; ++k) m[k] = u.col(record[k]);
    return m;
}

double analytic_swap_fidelity(double fidelity) {
    return fidelity * (3.0 + fidelity * (-6.0 + 4.0 * fidelity));
}

std::pair<BellState, BellState> outcome_lookup(int i, int j) {
    if (i < 1 || i > 4 || j < 1 || j > 4)
        throw std::out_of_range("record indices must lie in 1..4");
    constexpr BellFamily phi = BellFamily::phi, psi = BellFamily::psi;
    // dominant entries; the secondary is always the sign partner
    static const BellState table[4][4] = {
        {{psi, +1}, {psi, -1}, {phi, +1}, {phi, -1}},
        {{psi, -1}, {psi, +1}, {phi, -1}, {phi, +1}},
        {{phi, -1}, {phi, +1}, {psi, -1}, {psi, +1}},
        {{phi, +1}, {phi, -1}, {psi, +1}, {psi, -1}},
    };
    const BellState dom = table[i - 1][j - 1];
    return {dom, {dom.family, -dom.sign}};
}

namespace {

// weights of the four Bell components of the survivor plus the conditional
// density, accumulated over projections and input components
struct OutcomeAccumulator {
    double weight[2][2] = {};  // [family][sign index], sign index 0 = +1
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();

    void add(double w, const Eigen::Vector4cd& v) {
        rho += w * v * v.adjoint();
        for (int fam = 0; fam < 2; ++fam)
            for (int s = 0; s < 2; ++s) {
                const BellState b{fam == 0 ? BellFamily::phi : BellFamily::psi,
                                  s == 0 ? +1 : -1};
                weight[fam][s] += w * std::norm(bell_vector(b).dot(v));
            }
    }

    SwapOutcome finish(int i, int j) const {
        SwapOutcome out;
        out.i = i;
        out.j = j;
        out.probability = std::real(rho.trace());
        // the surviving components always share one family; pick it by weight
        const double wphi = weight[0][0] + weight[0][1];
        const double wpsi = weight[1][0] + weight[1][1];
        const int fam = wphi >= wpsi ? 0 : 1;
        const BellFamily family = fam == 0 ? BellFamily::phi : BellFamily::psi;
        const double wp = weight[fam][0], wm = weight[fam][1];
        const int sign = wp >= wm ? +1 : -1;
        out.pair = {{family, sign},
                    {family, -sign},
                    std::max(wp, wm) / (wp + wm)};
        out.density = rho / out.probability;
        return out;
    }
};

void check_swappable(const BellDiagonalPair& p) {
    check_pair(p);
    if (!p.same_family())
        throw std::invalid_argument("swap inputs must be same-family Bell mixtures");
}

}  // namespace

std::vector<SwapOutcome> swap_pairs(const BellDiagonalPair& left,
                                    const BellDiagonalPair& middle,
                                    const BellDiagonalPair& right,
                                    bool merge_degenerate_records) {
    check_swappable(left);
    check_swappable(middle);
    check_swappable(right);

    const auto basis = modified_bell_basis();
    const BellDiagonalPair* pairs[3] = {&left, &middle, &right};

    OutcomeAccumulator acc[4][4];
    for (int combo = 0; combo < 8; ++combo) {
        double w = 1.0;
        Eigen::VectorXcd psi(1);
        psi(0) = 1.0;
        for (int p = 0; p < 3; ++p) {
            const bool secondary = (combo >> p) & 1;
            w *= secondary ? 1.0 - pairs[p]->fidelity : pairs[p]->fidelity;
            psi = kron_vec(psi, bell_vector(secondary ? pairs[p]->secondary
                                                      : pairs[p]->dominant));
        }
        if (w == 0.0) continue;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                // contract qubits (0,3) with record i and (1,4) with record j,
                // leaving amplitudes on the survivor qubits (2,5)
                Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
                for (int idx = 0; idx < 64; ++idx) {
                    const int q0 = (idx >> 5) & 1, q1 = (idx >> 4) & 1,
                              q2 = (idx >> 3) & 1, q3 = (idx >> 2) & 1,
                              q4 = (idx >> 1) & 1, q5 = idx & 1;
                    const complexd mi = basis[i](q0 * 2 + q3);
                    const complexd mj = basis[j](q1 * 2 + q4);
                    v(q2 * 2 + q5) += std::conj(mi) * std::conj(mj) * psi(idx);
                }
                acc[i][j].add(w, v);
            }
        }
    }

    std::vector<SwapOutcome> out;
    if (!merge_degenerate_records) {
        out.reserve(16);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) out.push_back(acc[i][j].finish(i + 1, j + 1));
        return out;
    }

    // pool records 3 and 4 per measured pair; classes ordered {1, 2, merged}
    const int classes[3][2] = {{0, -1}, {1, -1}, {2, 3}};
    const int labels[3] = {1, 2, 0};
    out.reserve(9);
    for (int ci = 0; ci < 3; ++ci) {
        for (int cj = 0; cj < 3; ++cj) {
            OutcomeAccumulator merged;
            for (int a = 0; a < 2; ++a) {
                const int i = classes[ci][a];
                if (i < 0) continue;
                for (int b = 0; b < 2; ++b) {
                    const int j = classes[cj][b];
                    if (j < 0) continue;
                    merged.rho += acc[i][j].rho;
                    for (int fam = 0; fam < 2; ++fam)
                        for (int s = 0; s < 2; ++s)
                            merged.weight[fam][s] += acc[i][j].weight[fam][s];
                }
            }
            out.push_back(merged.finish(labels[ci], labels[cj]));
        }
    }
    return out;
}

}  // namespace qrep
