#include "qrep/coherent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qrep/qubits.hpp"

namespace qrep::coherent {

complexd coherent_overlap(complexd beta, complexd gamma) {
    return std::exp(-0.5 * std::norm(beta) - 0.5 * std::norm(gamma) + std::conj(beta) * gamma);
}

State::State(int n_qubits, std::vector<complexd> modes)
    : n_qubits_(n_qubits),
      n_modes_(static_cast<int>(modes.size())),
      bases_(n_qubits, Basis::computational) {
    if (n_qubits < 0 || n_qubits > 31) throw std::invalid_argument("unsupported qubit count");
    Term t;
    t.modes = std::move(modes);
    terms_.push_back(std::move(t));
}

Basis State::basis(int q) const {
    check_qubit(q);
    return bases_[q];
}

void State::check_qubit(int q) const {
    if (q < 0 || q >= n_qubits_) throw std::invalid_argument("qubit index out of range");
}

void State::check_mode(int m) const {
    if (m < 0 || m >= n_modes_) throw std::invalid_argument("mode index out of range");
}

void State::convert_basis(int q, Basis target) {
    check_qubit(q);
    if (bases_[q] == target) return;
    // |0> = (|+> + |->)/sqrt2 and |1> = (|+> - |->)/sqrt2; same matrix both ways.
    const double r = 1.0 / std::sqrt(2.0);
    std::vector<Term> out;
    out.reserve(2 * terms_.size());
    const std::uint32_t bit = 1u << q;
    for (const Term& t : terms_) {
        for (std::uint32_t f : {0u, 1u}) {
            Term nt = t;
            nt.flags = (t.flags & ~bit) | (f ? bit : 0u);
            nt.amp *= r * (((t.flags & bit) && f) ? -1.0 : 1.0);
            out.push_back(std::move(nt));
        }
    }
    terms_ = std::move(out);
    bases_[q] = target;
    merge_terms();
}

void State::apply_hadamard(int q) {
    check_qubit(q);
    bases_[q] = (bases_[q] == Basis::computational) ? Basis::diagonal : Basis::computational;
}

void State::controlled_phase(int q, int m, double theta) {
    check_qubit(q);
    check_mode(m);
    convert_basis(q, Basis::diagonal);
    const std::uint32_t bit = 1u << q;
    const complexd ep = std::polar(1.0, theta), em = std::polar(1.0, -theta);
    for (Term& t : terms_) t.modes[m] *= (t.flags & bit) ? em : ep;
}

void State::controlled_displacement(int q, int m, complexd beta) {
    check_qubit(q);
    check_mode(m);
    convert_basis(q, Basis::diagonal);
    const std::uint32_t bit = 1u << q;
    for (Term& t : terms_) {
        const complexd b = (t.flags & bit) ? -beta : beta;
        // D(b)|g> = exp(i Im(b conj(g))) |b + g>
        t.amp *= std::exp(complexd(0.0, std::imag(b * std::conj(t.modes[m]))));
        t.modes[m] += b;
    }
}

void State::displace(int m, complexd beta) {
    check_mode(m);
    for (Term& t : terms_) {
        t.amp *= std::exp(complexd(0.0, std::imag(beta * std::conj(t.modes[m]))));
        t.modes[m] += beta;
    }
}

void State::phase_rotate(int m, double theta) {
    check_mode(m);
    const complexd e = std::polar(1.0, theta);
    for (Term& t : terms_) t.modes[m] *= e;
}

void State::loss(int m, double eta) {
    check_mode(m);
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("transmissivity outside [0,1]");
    const double tkeep = std::sqrt(eta), tlose = std::sqrt(1.0 - eta);
    for (Term& t : terms_) {
        t.env.push_back(tlose * t.modes[m]);
        t.modes[m] *= tkeep;
    }
}

void State::beam_splitter(int port_a, int port_b) {
    check_mode(port_a);
    check_mode(port_b);
    if (port_a == port_b) throw std::invalid_argument("distinct ports required");
    const double r = 1.0 / std::sqrt(2.0);
    const complexd i(0.0, 1.0);
    for (Term& t : terms_) {
        const complexd xa = t.modes[port_a], xb = t.modes[port_b];
        t.modes[port_a] = (xa + i * xb) * r;
        t.modes[port_b] = (i * xa + xb) * r;
    }
}

void State::append_mode(complexd gamma) {
    for (Term& t : terms_) t.modes.push_back(gamma);
    ++n_modes_;
}

void State::vacuum_project(int m) {
    check_mode(m);
    for (Term& t : terms_) {
        t.amp *= std::exp(-0.5 * std::norm(t.modes[m]));  // <0|gamma>
        t.modes.erase(t.modes.begin() + m);
    }
    --n_modes_;
    merge_terms();
}

void State::trace_to_env(int m) {
    check_mode(m);
    for (Term& t : terms_) {
        t.env.push_back(t.modes[m]);
        t.modes.erase(t.modes.begin() + m);
    }
    --n_modes_;
}

complexd State::overlap(const State& other) const {
    if (n_qubits_ != other.n_qubits_ || n_modes_ != other.n_modes_ || bases_ != other.bases_)
        throw std::invalid_argument("overlap requires identical layout and bases");
    complexd acc = 0.0;
    for (const Term& a : terms_) {
        for (const Term& b : other.terms_) {
            if (a.flags != b.flags || a.env.size() != b.env.size()) continue;
            complexd w = std::conj(a.amp) * b.amp;
            for (int m = 0; m < n_modes_; ++m) w *= coherent_overlap(a.modes[m], b.modes[m]);
            for (size_t e = 0; e < a.env.size(); ++e) w *= coherent_overlap(a.env[e], b.env[e]);
            acc += w;
        }
    }
    return acc;
}

double State::norm_sq() const { return std::real(overlap(*this)); }

void State::scale(complexd c) {
    for (Term& t : terms_) t.amp *= c;
}

void State::merge_terms(double prune_below) {
    auto key_less = [](const Term& a, const Term& b) {
        if (a.flags != b.flags) return a.flags < b.flags;
        auto cmp = [](const std::vector<complexd>& x, const std::vector<complexd>& y) {
            for (size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
                if (x[i].real() != y[i].real()) return x[i].real() < y[i].real() ? -1 : 1;
                if (x[i].imag() != y[i].imag()) return x[i].imag() < y[i].imag() ? -1 : 1;
            }
            if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
            return 0;
        };
        if (int c = cmp(a.modes, b.modes); c != 0) return c < 0;
        return cmp(a.env, b.env) < 0;
    };
    auto key_equal = [&](const Term& a, const Term& b) {
        return !key_less(a, b) && !key_less(b, a);
    };
    std::sort(terms_.begin(), terms_.end(), key_less);
    std::vector<Term> out;
    for (Term& t : terms_) {
        if (!out.empty() && key_equal(out.back(), t))
            out.back().amp += t.amp;
        else
            out.push_back(std::move(t));
    }
    std::erase_if(out, [=](const Term& t) { return std::abs(t.amp) < prune_below; });
    terms_ = std::move(out);
}

Eigen::MatrixXcd State::qubit_density() const {
    const Eigen::Index dim = Eigen::Index{1} << n_qubits_;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    auto row_index = [&](std::uint32_t flags) {
        Eigen::Index r = 0;
        for (int q = 0; q < n_qubits_; ++q)
            r |= Eigen::Index{(flags >> q) & 1u} << (n_qubits_ - 1 - q);
        return r;
    };
    for (const Term& a : terms_) {
        for (const Term& b : terms_) {
            if (a.env.size() != b.env.size()) continue;
            complexd w = a.amp * std::conj(b.amp);
            for (int m = 0; m < n_modes_; ++m) w *= coherent_overlap(b.modes[m], a.modes[m]);
            for (size_t e = 0; e < a.env.size(); ++e) w *= coherent_overlap(b.env[e], a.env[e]);
            rho(row_index(a.flags), row_index(b.flags)) += w;
        }
    }
    return rho;
}

Eigen::MatrixXcd State::qubit_mode_density(int m, int fock_cutoff) const {
    check_mode(m);
    const Eigen::Index qdim = Eigen::Index{1} << n_qubits_;
    const Eigen::Index dim = qdim * fock_cutoff;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    auto row_index = [&](std::uint32_t flags) {
        Eigen::Index r = 0;
        for (int q = 0; q < n_qubits_; ++q)
            r |= Eigen::Index{(flags >> q) & 1u} << (n_qubits_ - 1 - q);
        return r;
    };
    std::vector<Eigen::VectorXcd> fock_of_term(terms_.size());
    for (size_t k = 0; k < terms_.size(); ++k)
        fock_of_term[k] = coherent_fock_amplitudes(terms_[k].modes[m], fock_cutoff);
    for (size_t ka = 0; ka < terms_.size(); ++ka) {
        for (size_t kb = 0; kb < terms_.size(); ++kb) {
            const Term& a = terms_[ka];
            const Term& b = terms_[kb];
            if (a.env.size() != b.env.size()) continue;
            complexd w = a.amp * std::conj(b.amp);
            for (int mm = 0; mm < n_modes_; ++mm)
                if (mm != m) w *= coherent_overlap(b.modes[mm], a.modes[mm]);
            for (size_t e = 0; e < a.env.size(); ++e) w *= coherent_overlap(b.env[e], a.env[e]);
            const Eigen::Index ra = row_index(a.flags) * fock_cutoff;
            const Eigen::Index rb = row_index(b.flags) * fock_cutoff;
            for (int na = 0; na < fock_cutoff; ++na)
                for (int nb = 0; nb < fock_cutoff; ++nb)
                    rho(ra + na, rb + nb) +=
                        w * fock_of_term[ka](na) * std::conj(fock_of_term[kb](nb));
        }
    }
    return rho;
}

}  // namespace qrep::coherent
