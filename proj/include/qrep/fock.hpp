#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Truncated Fock-space engine: dense amplitudes over a tensor product of
// qubit (dim 2) and mode (dim D) factors. Serves as a numeric oracle for the
// closed-form coherent engine. Every mode unitary is built as the exponential
// of a (skew-)Hermitian generator restricted to the truncated space, so norms
// are preserved exactly; truncation quality is policed separately by bounding
// the weight near the top of each mode ladder.

namespace qrep::fock {

using complexd = std::complex<double>;

struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TruncationReport {
    double worst_top_weight = 0.0;  // largest weight seen in the top two levels of a mode
    double bound = 1e-8;
};

// Fock cutoff heuristic: comfortably above the Poisson tail for mean photon
// number nbar.
int cutoff_for(double nbar);

// Truncated coherent state, renormalized; throws if the cut tail exceeds 1e-10.
Eigen::VectorXcd coherent_vector(complexd alpha, int dim);

class TensorState {
public:
    TensorState(std::vector<int> dims, Eigen::VectorXcd amps);
    static TensorState product(const std::vector<Eigen::VectorXcd>& factors);

    int factor_count() const { return static_cast<int>(dims_.size()); }
    int dim(int k) const { return dims_.at(k); }
    Eigen::Index size() const { return amps_.size(); }
    const Eigen::VectorXcd& amplitudes() const { return amps_; }

    void apply_factor(int k, const Eigen::MatrixXcd& u);
    // u acts on the pair (k, l) with row index i_k * dim(l) + i_l.
    void apply_pair(int k, int l, const Eigen::MatrixXcd& u);

    void hadamard(int q);
    void controlled_phase(int q, int m, double theta);
    void controlled_displacement(int q, int m, complexd beta);
    void displace(int m, complexd beta);
    // Beam-splitter loss: transmitted sqrt(eta) stays in m, sqrt(1-eta) enters
    // the (vacuum) factor env.
    void loss_into(int m, int env, double eta);
    // Balanced splitter (x_a, x_b) -> ((x_a + i x_b)/sqrt2, (i x_a + x_b)/sqrt2).
    void beam_splitter(int port_a, int port_b);
    void append_factor(const Eigen::VectorXcd& factor);

    double norm_sq() const { return amps_.squaredNorm(); }
    void scale(complexd c) { amps_ *= c; }

    double vacuum_weight(int m) const;
    // Unnormalized projection onto n_m = 0; the factor is removed.
    TensorState project_vacuum(int m) const;

    // Reduced density over the kept factors, in the order given.
    Eigen::MatrixXcd reduced_density(const std::vector<int>& keep) const;

    double top_level_weight(int m) const;
    // Throws TruncationError if any listed mode holds more than `bound` weight
    // in its top two levels; tracks the worst case in `report` if given.
    void check_truncation(const std::vector<int>& modes, double bound,
                          TruncationReport* report = nullptr) const;

private:
    std::vector<int> dims_;
    std::vector<Eigen::Index> strides_;
    Eigen::VectorXcd amps_;

    void rebuild_strides();
    void check_factor(int k) const;
    // Applies per-total-photon-number blocks of exp(generator) on modes (k, l).
    void apply_number_blocks(int k, int l, const std::vector<Eigen::MatrixXcd>& blocks);
};

// Displacement matrix exp(beta a^dag - conj(beta) a) on a dim-sized ladder.
Eigen::MatrixXcd displacement_matrix(complexd beta, int dim);

}  // namespace qrep::fock
