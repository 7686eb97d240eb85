#include "qrep/fock.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "qrep/qubits.hpp"

namespace qrep::fock {

int cutoff_for(double nbar) {
    if (nbar < 0.0) throw std::invalid_argument("negative mean photon number");
    return static_cast<int>(std::ceil(nbar + 10.0 * std::sqrt(nbar) + 10.0));
}

Eigen::VectorXcd coherent_vector(complexd alpha, int dim) {
    if (dim < 1) throw std::invalid_argument("empty mode ladder");
    Eigen::VectorXcd c = coherent_fock_amplitudes(alpha, dim);
    const double kept = c.squaredNorm();
    if (1.0 - kept > 1e-10)
        throw TruncationError("coherent state tail beyond cutoff: " + std::to_string(1.0 - kept));
    return c / std::sqrt(kept);
}

Eigen::MatrixXcd displacement_matrix(complexd beta, int dim) {
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 0; n + 1 < dim; ++n) {
        g(n + 1, n) = beta * std::sqrt(double(n + 1));        // beta a^dag
        g(n, n + 1) = -std::conj(beta) * std::sqrt(double(n + 1));  // -conj(beta) a
    }
    return g.exp();
}

TensorState::TensorState(std::vector<int> dims, Eigen::VectorXcd amps)
    : dims_(std::move(dims)), amps_(std::move(amps)) {
    Eigen::Index want = 1;
    for (int d : dims_) {
        if (d < 1) throw std::invalid_argument("factor dimension must be positive");
        want *= d;
    }
    if (want != amps_.size()) throw std::invalid_argument("amplitude size mismatch");
    rebuild_strides();
}

TensorState TensorState::product(const std::vector<Eigen::VectorXcd>& factors) {
    if (factors.empty()) throw std::invalid_argument("empty product");
    Eigen::VectorXcd amps = factors[0];
    std::vector<int> dims{static_cast<int>(factors[0].size())};
    for (size_t k = 1; k < factors.size(); ++k) {
        amps = kron_vec(amps, factors[k]);
        dims.push_back(static_cast<int>(factors[k].size()));
    }
    return TensorState(std::move(dims), std::move(amps));
}

void TensorState::rebuild_strides() {
    strides_.assign(dims_.size(), 1);
    for (int k = static_cast<int>(dims_.size()) - 2; k >= 0; --k)
        strides_[k] = strides_[k + 1] * dims_[k + 1];
}

void TensorState::check_factor(int k) const {
    if (k < 0 || k >= factor_count()) throw std::invalid_argument("factor index out of range");
}

void TensorState::apply_factor(int k, const Eigen::MatrixXcd& u) {
    check_factor(k);
    const int d = dims_[k];
    if (u.rows() != d || u.cols() != d) throw std::invalid_argument("operator shape mismatch");
    const Eigen::Index s = strides_[k];
    Eigen::VectorXcd slice(d);
    for (Eigen::Index base = 0; base < amps_.size(); ++base) {
        if ((base / s) % d != 0) continue;
        for (int n = 0; n < d; ++n) slice(n) = amps_(base + n * s);
        slice = u * slice;
        for (int n = 0; n < d; ++n) amps_(base + n * s) = slice(n);
    }
}

void TensorState::apply_pair(int k, int l, const Eigen::MatrixXcd& u) {
    check_factor(k);
    check_factor(l);
    if (k == l) throw std::invalid_argument("distinct factors required");
    const int dk = dims_[k], dl = dims_[l];
    if (u.rows() != dk * dl || u.cols() != dk * dl)
        throw std::invalid_argument("operator shape mismatch");
    const Eigen::Index sk = strides_[k], sl = strides_[l];
    Eigen::VectorXcd slice(dk * dl);
    for (Eigen::Index base = 0; base < amps_.size(); ++base) {
        if ((base / sk) % dk != 0 || (base / sl) % dl != 0) continue;
        for (int a = 0; a < dk; ++a)
            for (int b = 0; b < dl; ++b) slice(a * dl + b) = amps_(base + a * sk + b * sl);
        slice = u * slice;
        for (int a = 0; a < dk; ++a)
            for (int b = 0; b < dl; ++b) amps_(base + a * sk + b * sl) = slice(a * dl + b);
    }
}

void TensorState::hadamard(int q) {
    check_factor(q);
    if (dims_[q] != 2) throw std::invalid_argument("hadamard requires a qubit factor");
    apply_factor(q, qrep::hadamard());
}

void TensorState::controlled_phase(int q, int m, double theta) {
    check_factor(q);
    check_factor(m);
    if (dims_[q] != 2) throw std::invalid_argument("control must be a qubit factor");
    const int d = dims_[m];
    // exp(i theta sigma^X n) = P_+ (x) e^{i theta n} + P_- (x) e^{-i theta n}
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
    const Eigen::Matrix2cd x = pauli_x();
    const Eigen::Matrix2cd pp = (Eigen::Matrix2cd::Identity() + x) / 2.0;
    const Eigen::Matrix2cd pm = (Eigen::Matrix2cd::Identity() - x) / 2.0;
    Eigen::VectorXcd rotp(d), rotm(d);
    for (int n = 0; n < d; ++n) {
        rotp(n) = std::polar(1.0, theta * n);
        rotm(n) = std::polar(1.0, -theta * n);
    }
    u = kron(pp, rotp.asDiagonal().toDenseMatrix()) + kron(pm, rotm.asDiagonal().toDenseMatrix());
    apply_pair(q, m, u);
}

void TensorState::controlled_displacement(int q, int m, complexd beta) {
    check_factor(q);
    check_factor(m);
    if (dims_[q] != 2) throw std::invalid_argument("control must be a qubit factor");
    const int d = dims_[m];
    const Eigen::Matrix2cd x = pauli_x();
    const Eigen::Matrix2cd pp = (Eigen::Matrix2cd::Identity() + x) / 2.0;
    const Eigen::Matrix2cd pm = (Eigen::Matrix2cd::Identity() - x) / 2.0;
    const Eigen::MatrixXcd u =
        kron(pp, displacement_matrix(beta, d)) + kron(pm, displacement_matrix(-beta, d));
    apply_pair(q, m, u);
}

void TensorState::displace(int m, complexd beta) {
    check_factor(m);
    apply_factor(m, displacement_matrix(beta, dims_[m]));
}

void TensorState::apply_number_blocks(int k, int l, const std::vector<Eigen::MatrixXcd>& blocks) {
    const int dk = dims_[k], dl = dims_[l];
    const Eigen::Index sk = strides_[k], sl = strides_[l];
    Eigen::VectorXcd slice(std::min(dk, dl));
    for (Eigen::Index base = 0; base < amps_.size(); ++base) {
        if ((base / sk) % dk != 0 || (base / sl) % dl != 0) continue;
        for (int s = 0; s < dk + dl - 1; ++s) {
            const int lo = std::max(0, s - dl + 1), hi = std::min(dk - 1, s);
            const int bs = hi - lo + 1;
            for (int a = lo; a <= hi; ++a) slice(a - lo) = amps_(base + a * sk + (s - a) * sl);
            slice.head(bs) = blocks[s] * slice.head(bs);
            for (int a = lo; a <= hi; ++a) amps_(base + a * sk + (s - a) * sl) = slice(a - lo);
        }
    }
}

void TensorState::loss_into(int m, int env, double eta) {
    check_factor(m);
    check_factor(env);
    if (m == env) throw std::invalid_argument("distinct factors required");
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("transmissivity outside [0,1]");
    const double theta = std::atan2(std::sqrt(1.0 - eta), std::sqrt(eta));
    const int dm = dims_[m], de = dims_[env];
    // generator a_env^dag a_m - a_env a_m^dag, per total-photon block
    std::vector<Eigen::MatrixXcd> blocks(dm + de - 1);
    for (int s = 0; s < dm + de - 1; ++s) {
        const int lo = std::max(0, s - de + 1), hi = std::min(dm - 1, s);
        const int bs = hi - lo + 1;
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(bs, bs);
        for (int a = lo; a <= hi; ++a) {
            const int ne = s - a;
            if (a - 1 >= lo) g(a - 1 - lo, a - lo) = std::sqrt(double(a) * double(ne + 1));
            if (a + 1 <= hi) g(a + 1 - lo, a - lo) = -std::sqrt(double(a + 1) * double(ne));
        }
        blocks[s] = (theta * g).exp().cast<complexd>();
    }
    apply_number_blocks(m, env, blocks);
}

void TensorState::beam_splitter(int port_a, int port_b) {
    check_factor(port_a);
    check_factor(port_b);
    if (port_a == port_b) throw std::invalid_argument("distinct ports required");
    const int da = dims_[port_a], db = dims_[port_b];
    // exp(i pi/4 (a^dag b + a b^dag)) per total-photon block
    std::vector<Eigen::MatrixXcd> blocks(da + db - 1);
    for (int s = 0; s < da + db - 1; ++s) {
        const int lo = std::max(0, s - db + 1), hi = std::min(da - 1, s);
        const int bs = hi - lo + 1;
        Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(bs, bs);
        for (int a = lo; a <= hi; ++a) {
            const int nb = s - a;
            const complexd iq(0.0, M_PI / 4.0);
            if (a + 1 <= hi) g(a + 1 - lo, a - lo) = iq * std::sqrt(double(a + 1) * double(nb));
            if (a - 1 >= lo) g(a - 1 - lo, a - lo) = iq * std::sqrt(double(a) * double(nb + 1));
        }
        blocks[s] = g.exp();
    }
    apply_number_blocks(port_a, port_b, blocks);
}

void TensorState::append_factor(const Eigen::VectorXcd& factor) {
    amps_ = kron_vec(amps_, factor);
    dims_.push_back(static_cast<int>(factor.size()));
    rebuild_strides();
}

double TensorState::vacuum_weight(int m) const {
    check_factor(m);
    const int d = dims_[m];
    const Eigen::Index s = strides_[m];
    double w = 0.0;
    for (Eigen::Index idx = 0; idx < amps_.size(); ++idx)
        if ((idx / s) % d == 0) w += std::norm(amps_(idx));
    return w;
}

TensorState TensorState::project_vacuum(int m) const {
    check_factor(m);
    const int d = dims_[m];
    const Eigen::Index s = strides_[m];
    Eigen::VectorXcd out(amps_.size() / d);
    Eigen::Index j = 0;
    for (Eigen::Index idx = 0; idx < amps_.size(); ++idx)
        if ((idx / s) % d == 0) out(j++) = amps_(idx);
    std::vector<int> dims = dims_;
    dims.erase(dims.begin() + m);
    if (dims.empty()) dims.push_back(1);
    return TensorState(std::move(dims), std::move(out));
}

Eigen::MatrixXcd TensorState::reduced_density(const std::vector<int>& keep) const {
    Eigen::Index kdim = 1;
    for (int k : keep) {
        check_factor(k);
        kdim *= dims_[k];
    }
    const Eigen::Index tdim = amps_.size() / kdim;
    // M(t, r) = amplitude with kept multi-index r and traced multi-index t
    Eigen::MatrixXcd m(tdim, kdim);
    std::vector<bool> kept(dims_.size(), false);
    for (int k : keep) {
        if (kept[k]) throw std::invalid_argument("duplicate kept factor");
        kept[k] = true;
    }
    for (Eigen::Index idx = 0; idx < amps_.size(); ++idx) {
        Eigen::Index r = 0, t = 0;
        for (int k : keep) r = r * dims_[k] + (idx / strides_[k]) % dims_[k];
        for (int k = 0; k < factor_count(); ++k)
            if (!kept[k]) t = t * dims_[k] + (idx / strides_[k]) % dims_[k];
        m(t, r) = amps_(idx);
    }
    return (m.adjoint() * m).conjugate();
}

double TensorState::top_level_weight(int m) const {
    check_factor(m);
    const int d = dims_[m];
    const Eigen::Index s = strides_[m];
    double w = 0.0;
    for (Eigen::Index idx = 0; idx < amps_.size(); ++idx)
        if ((idx / s) % d >= d - 2) w += std::norm(amps_(idx));
    return w;
}

void TensorState::check_truncation(const std::vector<int>& modes, double bound,
                                   TruncationReport* report) const {
    for (int m : modes) {
        const double w = top_level_weight(m);
        if (report) {
            report->worst_top_weight = std::max(report->worst_top_weight, w);
            report->bound = bound;
        }
        if (w > bound)
            throw TruncationError("mode " + std::to_string(m) +
                                  " holds weight near cutoff: " + std::to_string(w));
    }
}

}  // namespace qrep::fock
