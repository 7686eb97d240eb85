#include "qrep/chain.hpp"

#include <cmath>
#include <stdexcept>

#include "qrep/distribution.hpp"
#include "qrep/purification.hpp"

namespace qrep {

namespace {

void check_segments(int segments) {
    if (segments < 1) throw std::invalid_argument("chain needs at least one segment");
}

// Exact expectation of the maximum of N geometric variables by inclusion-
// exclusion: sum_j C(N,j) (-1)^{j+1} / (1 - (1-p)^j). The terms alternate and
// grow to ~C(N,N/2) before the sum collapses to O(1/p), so the evaluation
// loses about N bits to cancellation. Up to N = 40 every binomial is an exact
// integer in 64-bit precision and extended-precision Neumaier accumulation
// keeps the relative error near 1e-10 even at p = 1e-6; past that the series
// form below takes over.
double attempts_inclusion_exclusion(int n, double p) {
    long double sum = 0.0L;
    long double comp = 0.0L;
    long double binom = 1.0L;  // C(n, j), exact integers throughout
    const long double lq = log1pl(-static_cast<long double>(p));
    for (int j = 1; j <= n; ++j) {
        binom = binom * (n - j + 1) / j;
        const long double denom = -expm1l(j * lq);
        const long double term = ((j & 1) ? binom : -binom) / denom;
        const long double t = sum + term;
        comp += (fabsl(sum) >= fabsl(term)) ? (sum - t) + term : (term - t) + sum;
        sum = t;
    }
    return static_cast<double>(sum + comp);
}

// For larger N the binomials stop being exact and the cancellation outruns
// extended precision, so evaluate the expectation directly as
// sum_{t>=0} [1 - (1 - q^t)^N] with q = 1-p. Terms decay like N q^t; cutting
// at 1e-12 leaves a relative truncation below ~1e-12/p against a sum of at
// least 1/p. Cost is about 28/p terms, so sub-second down to p = 1e-6.
double attempts_direct_series(int n, double p) {
    const double q = 1.0 - p;
    const double lq = std::log1p(-p);
    double sum = 0.0;
    double comp = 0.0;
    double qt = 1.0;  // q^t
    for (long t = 0;; ++t) {
        if (t && (t & 4095) == 0) qt = std::exp(t * lq);  // undo multiplicative drift
        const double term = -std::expm1(n * std::log1p(-qt));
        if (term < 1e-12) break;
        const double s = sum + term;
        comp += (sum >= term) ? (sum - s) + term : (term - s) + sum;
        sum = s;
        qt *= q;
    }
    return sum + comp;
}

}  // namespace

double chain_fidelity(double fidelity, int segments) {
    check_segments(segments);
    return 0.5 * (1.0 + std::pow(2.0 * fidelity - 1.0, segments));
}

double expected_attempts(int segments, double success_probability) {
    check_segments(segments);
    if (!(success_probability > 0.0) || success_probability > 1.0)
        throw std::invalid_argument("per-round success probability must be in (0, 1]");
    if (segments <= 40) return attempts_inclusion_exclusion(segments, success_probability);
    return attempts_direct_series(segments, success_probability);
}

double plan_segment_length(double f_final, int segments, double alpha_sq, int rounds) {
    check_segments(segments);
    if (rounds < 1) throw std::invalid_argument("pumping depth must be at least one round");
    if (!(alpha_sq > 0.0)) throw std::invalid_argument("bus photon number must be positive");
    if (!(f_final > 0.5) || f_final > 1.0)
        throw std::invalid_argument("final fidelity target must be in (1/2, 1]");
    if (f_final == 1.0) return 0.0;  // only a lossless segment chains to exactly 1

    // Segment fidelity the pumping rounds must deliver.
    const double needed = 0.5 * (1.0 + std::pow(2.0 * f_final - 1.0, 1.0 / segments));

    // Invert the pumping recursion: the pumped fidelity is monotone in the
    // base fidelity, running (1/2, 1] onto itself.
    double lo = 0.5, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double pumped = purification::pump_schedule(mid, rounds).fidelities.back();
        (pumped < needed ? lo : hi) = mid;
    }
    const double f = 0.5 * (lo + hi);

    // Invert the channel map f = (1 + e^{-2 a^2 (1 - eta)})/2. The fidelity
    // floor at eta -> 0 may still sit above the requested target.
    const double eta = 1.0 + std::log(2.0 * f - 1.0) / (2.0 * alpha_sq);
    if (!(eta > 0.0))
        throw std::domain_error("target final fidelity is below the channel's infinite-length floor");
    return -attenuation_length_km * std::log(eta);
}

RepeaterPlan make_plan(double alpha_sq, double ell_km, int segments, int rounds,
                       double p_sw, const RateModel& model) {
    check_segments(segments);
    if (rounds < 1) throw std::invalid_argument("pumping depth must be at least one round");
    if (!(p_sw > 0.0) || p_sw > 1.0)
        throw std::invalid_argument("swapping efficiency must be in (0, 1]");
    if (!(ell_km > 0.0))
        throw std::invalid_argument("plans need a positive segment length");

    RepeaterPlan plan;
    plan.alpha_sq = alpha_sq;
    plan.ell_km = ell_km;
    plan.segments = segments;
    plan.rounds = rounds;
    plan.p_sw = p_sw;

    const auto metrics = distribution::analytic_metrics({alpha_sq, ell_km});
    plan.f = metrics.f;
    const auto schedule = purification::pump_schedule(metrics.f, rounds);
    plan.pumped_fidelity = schedule.fidelities.back();
    plan.p_pd = purification::purified_probability(schedule, metrics.p_dist);
    plan.p_total = p_sw * p_sw * plan.p_pd;
    plan.f_final = chain_fidelity(plan.pumped_fidelity, segments);
    plan.attempts = expected_attempts(segments, plan.p_total);
    plan.rate_rescaled = rescaled_rate(plan, model);
    return plan;
}

double rescaled_rate(const RepeaterPlan& plan, const RateModel& model) {
    if (!(plan.ell_km > 0.0))
        throw std::invalid_argument("rate is defined only for a positive segment length");
    const double cycle_m = crossings_per_cycle * plan.ell_km * 1000.0;
    return model.light_speed_m_s / (cycle_m * plan.attempts);
}

}  // namespace qrep
