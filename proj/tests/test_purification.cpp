#include "doctest.h"

#include <cmath>
#include <random>

#include "qrep/purification.hpp"
#include "qrep/qubits.hpp"

using namespace qrep;
using namespace qrep::purification;

namespace {

BellDiagonalPair canonical(BellFamily fam, double fidelity) {
    return {{fam, +1}, {fam, -1}, fidelity};
}

double recursion_fidelity(double F, double f) { return F * f / (F * f + (1 - F) * (1 - f)); }
double record_probability(double F, double f) { return 0.5 * (F * f + (1 - F) * (1 - f)); }

}  // namespace

TEST_CASE("protocol gate matches the published computational-basis action") {
    const Eigen::Matrix4cd u = xx_gate();
    const complexd i1(0.0, 1.0);
    const double r = 1.0 / std::sqrt(2.0);

    Eigen::Vector4cd e00 = Eigen::Vector4cd::Unit(0), e01 = Eigen::Vector4cd::Unit(1);
    Eigen::Vector4cd e10 = Eigen::Vector4cd::Unit(2), e11 = Eigen::Vector4cd::Unit(3);

    CHECK((u * e11 - (-i1 * r) * (e00 + i1 * e11)).norm() < 1e-15);
    CHECK((u * e00 - r * (e00 - i1 * e11)).norm() < 1e-15);
    CHECK((u * e10 - (-i1 * r) * (e01 + i1 * e10)).norm() < 1e-15);
    CHECK((u * e01 - r * (e01 - i1 * e10)).norm() < 1e-15);

    // four applications give the identity up to a global phase
    const Eigen::Matrix4cd u4 = u * u * u * u;
    CHECK((u4 + Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("first pumping round at the reference points") {
    const auto outcomes = pump_round(canonical(BellFamily::phi, 0.75),
                                     canonical(BellFamily::phi, 0.75));
    REQUIRE(outcomes.size() == 4);

    double total = 0.0;
    for (const auto& o : outcomes) total += o.probability;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    for (const auto& o : outcomes) {
        const bool odd = o.bits[0] != o.bits[1];
        CHECK(o.accepted == odd);  // both labels +
        if (o.accepted) {
            CHECK(o.probability == doctest::Approx(0.3125).epsilon(1e-12));
            REQUIRE(o.survivor.has_value());
            CHECK(o.survivor->fidelity == doctest::Approx(0.9).epsilon(1e-12));
            CHECK(o.survivor->dominant == BellState{BellFamily::psi, +1});
            CHECK(o.survivor->secondary == BellState{BellFamily::psi, -1});
        } else {
            CHECK(!o.survivor.has_value());
        }
    }
}

TEST_CASE("pure and fixed-point inputs") {
    for (const auto& o : pump_round(canonical(BellFamily::phi, 1.0),
                                    canonical(BellFamily::phi, 1.0)))
        if (o.accepted) {
            CHECK(o.probability == doctest::Approx(0.5).epsilon(1e-12));
            CHECK(o.survivor->fidelity == doctest::Approx(1.0).epsilon(1e-12));
        }
    for (const auto& o : pump_round(canonical(BellFamily::psi, 0.5),
                                    canonical(BellFamily::psi, 0.5)))
        if (o.accepted) {
            CHECK(o.probability == doctest::Approx(0.25).epsilon(1e-12));
            CHECK(o.survivor->fidelity == doctest::Approx(0.5).epsilon(1e-12));
        }
}

TEST_CASE("simulation matches the recursion for random inputs and all label combos") {
    std::mt19937_64 rng(411u);
    std::uniform_real_distribution<double> fid(0.5000001, 1.0);
    const BellFamily fams[2] = {BellFamily::phi, BellFamily::psi};

    for (int trial = 0; trial < 60; ++trial) {
        const double F = fid(rng), f = fid(rng);
        const BellFamily fs = fams[trial % 2], ff = fams[(trial / 2) % 2];
        const auto measured = (trial % 3 == 0) ? MeasuredPair::stationary : MeasuredPair::fresh;
        const auto outcomes = pump_round(canonical(fs, F), canonical(ff, f), measured);

        const BellFamily surv_in = measured == MeasuredPair::fresh ? fs : ff;
        const BellFamily surv_family =
            surv_in == BellFamily::phi ? BellFamily::psi : BellFamily::phi;

        int accepted_count = 0;
        for (const auto& o : outcomes) {
            if (!o.accepted) continue;
            ++accepted_count;
            CHECK(std::abs(o.probability - record_probability(F, f)) < 1e-10);
            REQUIRE(o.survivor.has_value());
            CHECK(std::abs(o.survivor->fidelity - recursion_fidelity(F, f)) < 1e-10);
            CHECK(o.survivor->dominant.family == surv_family);
            CHECK(o.survivor->dominant.sign == +1);
        }
        CHECK(accepted_count == 2);
    }
}

TEST_CASE("rejected records carry the complementary weight and no pair") {
    const double F = 0.85, f = 0.72;
    const double reject_p = 0.5 * (F * (1 - f) + (1 - F) * f);
    for (const auto& o : pump_round(canonical(BellFamily::phi, F), canonical(BellFamily::phi, f)))
        if (!o.accepted) {
            CHECK(o.probability == doctest::Approx(reject_p).epsilon(1e-12));
            CHECK(!o.survivor.has_value());
        }
}

TEST_CASE("inputs outside the pumped form are rejected") {
    const BellDiagonalPair raw{{BellFamily::phi, -1}, {BellFamily::psi, -1}, 0.8};
    const BellDiagonalPair flipped{{BellFamily::phi, -1}, {BellFamily::phi, +1}, 0.8};
    const BellDiagonalPair good = canonical(BellFamily::phi, 0.8);
    CHECK_THROWS_AS(pump_round(raw, good), std::invalid_argument);
    CHECK_THROWS_AS(pump_round(good, flipped), std::invalid_argument);
    CHECK_THROWS_AS(pump_round(good, BellDiagonalPair{{BellFamily::phi, +1},
                                                      {BellFamily::phi, -1}, 1.5}),
                    std::invalid_argument);
}

TEST_CASE("schedule iterates the recursion to the frozen fixed values") {
    const auto s = pump_schedule(0.75, 4);
    REQUIRE(s.fidelities.size() == 4);
    CHECK(s.fidelities[0] == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(s.fidelities[1] == doctest::Approx(27.0 / 28.0).epsilon(1e-14));
    CHECK(s.fidelities[2] == doctest::Approx(81.0 / 82.0).epsilon(1e-14));
    CHECK(s.fidelities[3] == doctest::Approx(243.0 / 244.0).epsilon(1e-14));
    CHECK(s.round_probabilities[0] == doctest::Approx(5.0 / 16.0).epsilon(1e-14));
    CHECK(s.round_probabilities[1] == doctest::Approx(7.0 / 20.0).epsilon(1e-14));
    CHECK(s.round_probabilities[2] == doctest::Approx(41.0 / 112.0).epsilon(1e-14));
    CHECK(s.round_probabilities[3] == doctest::Approx(61.0 / 164.0).epsilon(1e-14));

    double prod = 1.0;
    for (double p : s.round_probabilities) prod *= 2.0 * p;
    CHECK(s.pump_probability == doctest::Approx(prod).epsilon(1e-14));

    // monotone growth above the fixed point, collapse at it
    double prev = 0.75;
    for (double F : s.fidelities) {
        CHECK(F > prev);
        prev = F;
    }
    const auto flat = pump_schedule(0.5 + 1e-9, 4);
    CHECK(std::abs(flat.fidelities[3] - 0.5) < 1e-7);

    CHECK_THROWS_AS(pump_schedule(0.5, 4), std::invalid_argument);
    CHECK_THROWS_AS(pump_schedule(1.2, 4), std::invalid_argument);
    CHECK_THROWS_AS(pump_schedule(0.75, 0), std::invalid_argument);
}

TEST_CASE("product form telescopes to f^5 + (1-f)^5") {
    // 2 P_n = (f^{n+1} + (1-f)^{n+1}) / (f^n + (1-f)^n), so the four-round
    // product collapses and the distribution factor multiplies on top
    std::mt19937_64 rng(577u);
    std::uniform_real_distribution<double> fid(0.5000001, 1.0);
    const double p_dist = 0.26042914560599234;
    for (int k = 0; k < 200; ++k) {
        const double f = fid(rng);
        const double prod = purified_probability(pump_schedule(f, 4), p_dist);
        const double closed =
            (std::pow(f, 5) + std::pow(1.0 - f, 5)) * std::pow(2.0 * p_dist, 5);
        CHECK(prod == doctest::Approx(closed).epsilon(1e-12));
    }
    CHECK(purified_probability(pump_schedule(0.75, 4), p_dist) ==
          doctest::Approx((61.0 / 256.0) * std::pow(2.0 * p_dist, 5)).epsilon(1e-14));
}

TEST_CASE("expanded polynomial variant factors over composed pair parameters") {
    // the tabulated expansion is not the pumping product above: it multiplies
    // acceptance factors (1 + q^n)/2 for n = 2..5 with q = 2f - 1, i.e. it
    // composes the stationary pair multiplicatively instead of iterating the
    // pumping map, so the two agree only at f = 1/2 and f = 1
    std::mt19937_64 rng(311u);
    std::uniform_real_distribution<double> fid(0.5000001, 1.0);
    const double p_dist = 0.26042914560599234;
    for (int k = 0; k < 200; ++k) {
        const double f = fid(rng);
        const double q = 2.0 * f - 1.0;
        double factored = 1.0;
        for (int n = 2; n <= 5; ++n) factored *= 0.5 * (1.0 + std::pow(q, n));
        CHECK(purified_probability_polynomial(f, p_dist) ==
              doctest::Approx(factored * std::pow(2.0 * p_dist, 5)).epsilon(1e-12));
    }
    // frozen point: coefficients give 25245/262144 at f = 3/4, while the
    // pumping product gives 61/256 there
    CHECK(purified_probability_polynomial(0.75, p_dist) ==
          doctest::Approx((25245.0 / 262144.0) * std::pow(2.0 * p_dist, 5))
              .epsilon(1e-14));
    // at f=1 the polynomial factor collapses to 1, matching the product form
    CHECK(purified_probability_polynomial(1.0, p_dist) ==
          doctest::Approx(std::pow(2.0 * p_dist, 5)).epsilon(1e-12));
    CHECK(purified_probability(pump_schedule(1.0, 4), p_dist) ==
          doctest::Approx(std::pow(2.0 * p_dist, 5)).epsilon(1e-12));
}

TEST_CASE("pass probability composes rounds and distributions") {
    const auto s = pump_schedule(0.75, 4);
    const double p_dist = 0.2;
    CHECK(purified_probability(s, p_dist) ==
          doctest::Approx(s.pump_probability * std::pow(0.4, 5)).epsilon(1e-14));
    CHECK_THROWS_AS(purified_probability(s, 0.7), std::invalid_argument);

    // rounds beyond four keep multiplying conclusive factors
    const auto s6 = pump_schedule(0.75, 6);
    CHECK(purified_probability(s6, p_dist) ==
          doctest::Approx(s6.pump_probability * std::pow(0.4, 7)).epsilon(1e-14));
}
