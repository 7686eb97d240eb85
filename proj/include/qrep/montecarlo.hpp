#pragma once

#include <cstdint>
#include <vector>

#include "qrep/chain.hpp"
#include "qrep/rng.hpp"

// Discrete-attempt simulation of the protocol schedule, used to validate the
// closed-form success probabilities and waiting-time factors against actual
// coin flips.

namespace qrep::montecarlo {

// Per-attempt probabilities of one segment: a distribution attempt is
// conclusive with p_conclusive, pumping round n succeeds with p_round[n-1]
// (both accepted records count).
struct SegmentModel {
    double p_conclusive = 1.0;
    std::vector<double> p_round;
};
SegmentModel segment_model(const RepeaterPlan& plan);

// Runs one segment to completion: distribution attempts retry until
// conclusive, a failed pumping round discards everything and restarts the
// segment from scratch. Returns the total number of distribution attempts
// consumed. A segment whose nine coin flips all succeed on the first try
// finishes in exactly p_round.size() + 1 attempts.
long simulate_segment(const SegmentModel& model, Xoshiro256& rng);
long simulate_segment(const RepeaterPlan& plan, Xoshiro256& rng);

struct TrialConfig {
    RepeaterPlan plan;
    long trials = 100000;  // statistics are meaningful from ~1000 up
    std::uint64_t seed = 0;
    // Default counts whole protocol passes, each succeeding with p_total
    // (the event the waiting-time factor Z_N describes). The finer variant
    // simulates every distribution attempt and pumping round instead; its
    // attempt counts are lower and are not comparable to Z_N.
    bool fine_grained_retry = false;
    int threads = 0;  // 0 picks the hardware count
};

struct TrialStats {
    long trials = 0;
    int segments = 0;
    // first-try success rate of a fresh segment: estimates p_total in the
    // default mode, the distribution+pumping probability p_pd in the fine one
    double success_probability = 0.0;
    double success_stderr = 0.0;
    // attempts until one segment completes, averaged over all segments
    double attempts_per_segment = 0.0;
    double attempts_stderr = 0.0;
    // attempts until the slowest of the N segments completes; the default
    // mode's value estimates expected_attempts(N, p_total)
    double max_attempts = 0.0;
    double max_stderr = 0.0;
};

// Simulates config.trials independent chains of plan.segments segments.
// Bit-identical results for a fixed (seed, trials, segments) regardless of
// thread count: trials are partitioned into fixed blocks, each block draws
// from its own jump-ahead substream, and block results combine in index
// order with integer accumulators.
TrialStats estimate_chain(const TrialConfig& config);

}  // namespace qrep::montecarlo
