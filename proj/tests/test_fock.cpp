#include "doctest.h"

#include <cmath>
#include <complex>

#include "qrep/coherent.hpp"
#include "qrep/fock.hpp"
#include "qrep/qubits.hpp"

using qrep::fock::TensorState;
using qrep::fock::coherent_vector;
using qrep::fock::cutoff_for;
using qrep::fock::displacement_matrix;
using complexd = std::complex<double>;

namespace {
const complexd I(0.0, 1.0);

Eigen::VectorXcd qubit0() {
    Eigen::VectorXcd v(2);
    v << 1.0, 0.0;
    return v;
}
}  // namespace

TEST_CASE("coherent ladder is normalized with the right statistics") {
    const complexd alpha(1.1, -0.4);
    const int d = cutoff_for(std::norm(alpha));
    const Eigen::VectorXcd c = coherent_vector(alpha, d);
    CHECK(c.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
    double nbar = 0.0;
    for (int n = 0; n < d; ++n) nbar += n * std::norm(c(n));
    CHECK(nbar == doctest::Approx(std::norm(alpha)).epsilon(1e-10));
    CHECK_THROWS_AS(coherent_vector(3.0, 4), qrep::fock::TruncationError);
}

TEST_CASE("displacing vacuum makes a coherent state") {
    const complexd beta(0.7, 0.5);
    const int d = 30;
    Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(d);
    vac(0) = 1.0;
    const Eigen::VectorXcd got = displacement_matrix(beta, d) * vac;
    const Eigen::VectorXcd want = qrep::coherent_fock_amplitudes(beta, d);
    CHECK((got - want).norm() < 1e-10);
}

TEST_CASE("loss splits a coherent state between mode and environment") {
    const complexd gamma(1.3, 0.2);
    const double eta = 0.42;
    const int d = cutoff_for(std::norm(gamma)) + 6;
    TensorState s = TensorState::product(
        {coherent_vector(gamma, d), Eigen::VectorXcd::Unit(d, 0)});
    s.loss_into(0, 1, eta);
    CHECK(s.norm_sq() == doctest::Approx(1.0).epsilon(1e-12));
    const TensorState want = TensorState::product(
        {coherent_vector(std::sqrt(eta) * gamma, d),
         coherent_vector(std::sqrt(1.0 - eta) * gamma, d)});
    const complexd ov = want.amplitudes().dot(s.amplitudes());
    CHECK(std::abs(ov) == doctest::Approx(1.0).epsilon(1e-9));
    // sign convention: env amplitude is +sqrt(1-eta) gamma, not its negative
    CHECK(std::real(ov) > 0.99);
}

TEST_CASE("balanced splitter matches the pinned port convention") {
    const complexd ga(0.8, -0.3), gb(-0.2, 0.6);
    const int d = 26;
    TensorState s = TensorState::product({coherent_vector(ga, d), coherent_vector(gb, d)});
    s.beam_splitter(0, 1);
    const complexd oa = (ga + I * gb) / std::sqrt(2.0);
    const complexd ob = (I * ga + gb) / std::sqrt(2.0);
    const TensorState want =
        TensorState::product({coherent_vector(oa, d), coherent_vector(ob, d)});
    const complexd ov = want.amplitudes().dot(s.amplitudes());
    CHECK(std::abs(ov) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::arg(ov) == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("norm survives a full mixing chain") {
    const int d = 24;
    TensorState s = TensorState::product(
        {qubit0(), coherent_vector(0.9, d), Eigen::VectorXcd::Unit(d, 0)});
    s.hadamard(0);
    s.controlled_phase(0, 1, -M_PI / 2);
    s.loss_into(1, 2, 0.7);
    s.controlled_displacement(0, 1, complexd(0.0, -0.4));
    s.displace(1, complexd(0.3, 0.1));
    s.beam_splitter(1, 2);
    CHECK(s.norm_sq() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("vacuum weight and projection of a coherent mode") {
    const complexd gamma(0.9, 0.4);
    const int d = cutoff_for(std::norm(gamma));
    TensorState s = TensorState::product({qubit0(), coherent_vector(gamma, d)});
    CHECK(s.vacuum_weight(1) == doctest::Approx(std::exp(-std::norm(gamma))).epsilon(1e-10));
    TensorState p = s.project_vacuum(1);
    CHECK(p.factor_count() == 1);
    CHECK(p.norm_sq() == doctest::Approx(std::exp(-std::norm(gamma))).epsilon(1e-10));
}

TEST_CASE("truncation police flags crowded ladders") {
    const int d = 8;
    TensorState s = TensorState::product({Eigen::VectorXcd::Unit(d, 0)});
    s.displace(0, 2.5);  // nbar 6.25 against an 8-level ladder
    qrep::fock::TruncationReport report;
    CHECK_THROWS_AS(s.check_truncation({0}, 1e-8, &report), qrep::fock::TruncationError);
    CHECK(report.worst_top_weight > 1e-8);
    TensorState ok = TensorState::product({coherent_vector(0.5, 20)});
    ok.check_truncation({0}, 1e-8, &report);
}

TEST_CASE("reduced density traces out the other factors") {
    const int d = 12;
    TensorState s = TensorState::product({qubit0(), coherent_vector(0.6, d)});
    s.controlled_phase(0, 1, 0.8);
    const Eigen::MatrixXcd rho_q = s.reduced_density({0});
    CHECK(rho_q.rows() == 2);
    CHECK(std::abs(rho_q.trace() - 1.0) < 1e-12);
    // rho_00 = (1 + Re<a e^{i t}|a e^{-i t}>)/2 since |0> splits across the
    // sigma^X eigenbranches
    const complexd ov = qrep::coherent::coherent_overlap(
        0.6 * std::polar(1.0, 0.8), 0.6 * std::polar(1.0, -0.8));
    CHECK(std::abs(rho_q(0, 0) - 0.5 * (1.0 + ov.real())) < 1e-10);
    const Eigen::MatrixXcd rho_qm = s.reduced_density({0, 1});
    CHECK(rho_qm.rows() == 2 * d);
    CHECK(std::abs(rho_qm.trace() - 1.0) < 1e-12);
    // purity of the full (pure) state
    CHECK(std::abs((rho_qm * rho_qm).trace() - 1.0) < 1e-10);
}

TEST_CASE("conditional rotation agrees with the closed-form engine") {
    const double alpha = 1.0;
    const int d = cutoff_for(alpha * alpha);

    qrep::coherent::State cs(1, {alpha});
    cs.controlled_phase(0, 0, -M_PI / 2);
    cs.convert_basis(0, qrep::coherent::Basis::computational);
    const Eigen::MatrixXcd rho_c = cs.qubit_mode_density(0, d);

    TensorState fs = TensorState::product({qubit0(), coherent_vector(alpha, d)});
    fs.controlled_phase(0, 1, -M_PI / 2);
    const Eigen::MatrixXcd rho_f = fs.reduced_density({0, 1});

    CHECK((rho_c - rho_f).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("conditional displacement agrees with the closed-form engine") {
    const complexd gamma(0.5, -0.2), beta(0.0, -0.6);
    const int d = cutoff_for(2.0) + 4;

    qrep::coherent::State cs(1, {gamma});
    cs.apply_hadamard(0);  // put the control on the superposition branch
    cs.controlled_displacement(0, 0, beta);
    cs.convert_basis(0, qrep::coherent::Basis::computational);
    const Eigen::MatrixXcd rho_c = cs.qubit_mode_density(0, d);

    TensorState fs = TensorState::product({qubit0(), coherent_vector(gamma, d)});
    fs.hadamard(0);
    fs.controlled_displacement(0, 1, beta);
    const Eigen::MatrixXcd rho_f = fs.reduced_density({0, 1});

    CHECK((rho_c - rho_f).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lossy conditional chain agrees across engines") {
    // one full node interaction: rotate, lose light, displace back
    const double alpha = 1.2, eta = 0.55;
    const int d = cutoff_for(alpha * alpha) + 4;

    qrep::coherent::State cs(1, {alpha});
    cs.controlled_phase(0, 0, -M_PI / 2);
    cs.loss(0, eta);
    cs.controlled_displacement(0, 0, complexd(0.0, -std::sqrt(eta) * alpha));
    cs.convert_basis(0, qrep::coherent::Basis::computational);
    const Eigen::MatrixXcd rho_c = cs.qubit_mode_density(0, d);
    const Eigen::MatrixXcd rho_cq = cs.qubit_density();

    TensorState fs = TensorState::product(
        {qubit0(), coherent_vector(alpha, d), Eigen::VectorXcd::Unit(d, 0)});
    fs.controlled_phase(0, 1, -M_PI / 2);
    fs.loss_into(1, 2, eta);
    fs.controlled_displacement(0, 1, complexd(0.0, -std::sqrt(eta) * alpha));
    const Eigen::MatrixXcd rho_f = fs.reduced_density({0, 1});
    const Eigen::MatrixXcd rho_fq = fs.reduced_density({0});

    CHECK((rho_c - rho_f).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((rho_cq - rho_fq).cwiseAbs().maxCoeff() < 1e-10);
}
