#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

// Exact engine for states of the form sum_k amp_k |qubits_k> |gamma_k1> |gamma_k2> ...
// Each term is a product of qubit basis vectors and coherent states, so every
// protocol step (conditional phase/displacement, loss, beam splitter, on/off
// detection) acts term by term in closed form. Lost light is kept as per-term
// environment records so norms and reduced densities stay exact.

namespace qrep::coherent {

using complexd = std::complex<double>;

enum class Basis { computational, diagonal };  // {|0>,|1>} vs {|+>,|->}

struct Term {
    std::uint32_t flags = 0;  // bit q set: qubit q in |1> (computational) or |-> (diagonal)
    std::vector<complexd> modes;
    std::vector<complexd> env;
    complexd amp = 1.0;
};

// <beta|gamma> = exp(-|beta|^2/2 - |gamma|^2/2 + conj(beta) gamma)
complexd coherent_overlap(complexd beta, complexd gamma);

class State {
public:
    State(int n_qubits, std::vector<complexd> modes);

    int qubit_count() const { return n_qubits_; }
    int mode_count() const { return n_modes_; }
    Basis basis(int q) const;
    const std::vector<Term>& terms() const { return terms_; }

    // Rewrites qubit q in the other basis; term count may double.
    void convert_basis(int q, Basis target);
    // Hadamard swaps the meaning of the stored flag, so it is a pure relabel.
    void apply_hadamard(int q);

    // exp(i theta sigma^X n) on (qubit q, mode m)
    void controlled_phase(int q, int m, double theta);
    // D(beta sigma^X) on (qubit q, mode m)
    void controlled_displacement(int q, int m, complexd beta);
    void displace(int m, complexd beta);
    void phase_rotate(int m, double theta);
    // Beam-splitter loss channel: keeps sqrt(eta) gamma, records sqrt(1-eta) gamma.
    void loss(int m, double eta);
    // Balanced splitter (x_a, x_b) -> ((x_a + i x_b)/sqrt2, (i x_a + x_b)/sqrt2).
    void beam_splitter(int port_a, int port_b);
    void append_mode(complexd gamma);

    // Unnormalized projection of mode m onto vacuum; the mode is removed.
    void vacuum_project(int m);
    // Demotes mode m to an inaccessible environment record.
    void trace_to_env(int m);

    complexd overlap(const State& other) const;  // <this|other>
    double norm_sq() const;
    void scale(complexd c);
    void merge_terms(double prune_below = 1e-14);

    // Reduced density over the qubits (qubit 0 = most significant index bit).
    Eigen::MatrixXcd qubit_density() const;
    // Reduced density over qubits (x) one mode expanded in the Fock basis.
    Eigen::MatrixXcd qubit_mode_density(int m, int fock_cutoff) const;

private:
    int n_qubits_;
    int n_modes_;
    std::vector<Basis> bases_;
    std::vector<Term> terms_;

    void check_qubit(int q) const;
    void check_mode(int m) const;
};

}  // namespace qrep::coherent
