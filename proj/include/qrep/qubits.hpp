#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

// Small dense-state helpers shared by the brute-force qubit simulations and
// both mode engines. Qubit 0 is the most significant bit of the state index.

namespace qrep {

using complexd = std::complex<double>;

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Eigen::VectorXcd kron_vec(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    Eigen::VectorXcd out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

inline Eigen::Matrix2cd pauli_x() {
    Eigen::Matrix2cd m;
    m << 0, 1, 1, 0;
    return m;
}

inline Eigen::Matrix2cd hadamard() {
    Eigen::Matrix2cd m;
    m << 1, 1, 1, -1;
    return m / std::sqrt(2.0);
}

// exp(-i pi/4 X(x)X): the two-qubit interaction used for pumping and for the
// modified-basis Bell measurement. Maps |ab> -> (|ab> - i|~a~b>)/sqrt(2).
inline Eigen::Matrix4cd xx_half_pi() {
    const complexd mi(0.0, -1.0);
    return (Eigen::Matrix4cd::Identity() + mi * kron(pauli_x(), pauli_x())) / std::sqrt(2.0);
}

// Apply a single-qubit gate at position q of an n-qubit state vector.
inline void apply_gate1(Eigen::VectorXcd& psi, const Eigen::Matrix2cd& u, int q, int n) {
    if (psi.size() != (Eigen::Index{1} << n)) throw std::invalid_argument("state size mismatch");
    const long stride = 1L << (n - 1 - q);
    for (long base = 0; base < psi.size(); ++base) {
        if (base & stride) continue;
        const complexd v0 = psi(base), v1 = psi(base + stride);
        psi(base) = u(0, 0) * v0 + u(0, 1) * v1;
        psi(base + stride) = u(1, 0) * v0 + u(1, 1) * v1;
    }
}

// Apply a two-qubit gate at positions (q1, q2); row index of u is (bit q1, bit q2).
inline void apply_gate2(Eigen::VectorXcd& psi, const Eigen::Matrix4cd& u, int q1, int q2, int n) {
    if (psi.size() != (Eigen::Index{1} << n)) throw std::invalid_argument("state size mismatch");
    if (q1 == q2) throw std::invalid_argument("distinct qubits required");
    const long s1 = 1L << (n - 1 - q1), s2 = 1L << (n - 1 - q2);
    for (long base = 0; base < psi.size(); ++base) {
        if ((base & s1) || (base & s2)) continue;
        complexd v[4] = {psi(base), psi(base + s2), psi(base + s1), psi(base + s1 + s2)};
        for (int r = 0; r < 4; ++r) {
            complexd acc = 0.0;
            for (int c = 0; c < 4; ++c) acc += u(r, c) * v[c];
            psi(base + (r >> 1) * s1 + (r & 1) * s2) = acc;
        }
    }
}

// Probability of measuring the given bit values on the listed qubits.
inline double outcome_probability(const Eigen::VectorXcd& psi, const std::vector<int>& qubits,
                                  const std::vector<int>& bits, int n) {
    double p = 0.0;
    for (long idx = 0; idx < psi.size(); ++idx) {
        bool match = true;
        for (size_t k = 0; k < qubits.size(); ++k)
            if (((idx >> (n - 1 - qubits[k])) & 1) != bits[k]) { match = false; break; }
        if (match) p += std::norm(psi(idx));
    }
    return p;
}

// Collapse onto the given bit values (unnormalized) and drop the measured qubits.
inline Eigen::VectorXcd collapse(const Eigen::VectorXcd& psi, const std::vector<int>& qubits,
                                 const std::vector<int>& bits, int n) {
    const int m = n - static_cast<int>(qubits.size());
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(Eigen::Index{1} << m);
    for (long idx = 0; idx < psi.size(); ++idx) {
        bool match = true;
        for (size_t k = 0; k < qubits.size(); ++k)
            if (((idx >> (n - 1 - qubits[k])) & 1) != bits[k]) { match = false; break; }
        if (!match) continue;
        long rest = 0;
        int pos = 0;
        for (int q = 0; q < n; ++q) {
            bool measured = false;
            for (int mq : qubits)
                if (mq == q) { measured = true; break; }
            if (measured) continue;
            rest |= ((idx >> (n - 1 - q)) & 1) << (m - 1 - pos);
            ++pos;
        }
        out(rest) += psi(idx);
    }
    return out;
}

// Density matrix of the listed qubits, all others traced out.
inline Eigen::MatrixXcd reduced_density(const Eigen::VectorXcd& psi, const std::vector<int>& keep,
                                        int n) {
    const int k = static_cast<int>(keep.size());
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(1L << k, 1L << k);
    for (long i = 0; i < psi.size(); ++i) {
        for (long j = 0; j < psi.size(); ++j) {
            long mask = ~0L;
            for (int q : keep) mask &= ~(1L << (n - 1 - q));
            if ((i & mask) != (j & mask)) continue;
            long r = 0, c = 0;
            for (int b = 0; b < k; ++b) {
                r |= ((i >> (n - 1 - keep[b])) & 1) << (k - 1 - b);
                c |= ((j >> (n - 1 - keep[b])) & 1) << (k - 1 - b);
            }
            rho(r, c) += psi(i) * std::conj(psi(j));
        }
    }
    return rho;
}

// Fock amplitudes <n|alpha> for n < cutoff (exact, not renormalized).
inline Eigen::VectorXcd coherent_fock_amplitudes(complexd alpha, int cutoff) {
    Eigen::VectorXcd c(cutoff);
    c(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < cutoff; ++n) c(n) = c(n - 1) * alpha / std::sqrt(double(n));
    return c;
}

}  // namespace qrep
