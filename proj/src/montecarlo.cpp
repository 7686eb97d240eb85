#include "qrep/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "qrep/distribution.hpp"
#include "qrep/purification.hpp"

namespace qrep::montecarlo {

namespace {

// fixed partition of trials so results cannot depend on thread scheduling
constexpr long block_size = 4096;

struct BlockTotals {
    std::uint64_t first_try = 0;  // segments whose first pass succeeded
    std::uint64_t attempts = 0;
    unsigned __int128 attempts_sq = 0;
    std::uint64_t max_sum = 0;
    unsigned __int128 max_sq = 0;
};

void check_model(const SegmentModel& model) {
    const auto valid = [](double p) { return p > 0.0 && p <= 1.0; };
    if (!valid(model.p_conclusive))
        throw std::invalid_argument("conclusive-pattern probability must be in (0, 1]");
    for (const double p : model.p_round)
        if (!valid(p)) throw std::invalid_argument("round probability must be in (0, 1]");
}

// draws until the first success, counting the successful draw
long sample_geometric(double p, Xoshiro256& rng) {
    long n = 1;
    while (!rng.bernoulli(p)) ++n;
    return n;
}

}  // namespace

SegmentModel segment_model(const RepeaterPlan& plan) {
    const auto metrics = distribution::analytic_metrics({plan.alpha_sq, plan.ell_km});
    const auto schedule = purification::pump_schedule(metrics.f, plan.rounds);
    SegmentModel model;
    model.p_conclusive = 2.0 * metrics.p_dist;  // either single-click pattern heralds
    model.p_round.reserve(schedule.round_probabilities.size());
    for (const double p : schedule.round_probabilities)
        model.p_round.push_back(2.0 * p);  // either accepted record keeps the pair
    return model;
}

long simulate_segment(const SegmentModel& model, Xoshiro256& rng) {
    check_model(model);
    long attempts = 0;
    for (;;) {
        // stationary pair first, then one fresh pair per pumping round;
        // inconclusive distributions just retry, a rejected round record
        // discards all atoms and starts the segment over
        attempts += sample_geometric(model.p_conclusive, rng);
        bool restarted = false;
        for (const double p_round : model.p_round) {
            attempts += sample_geometric(model.p_conclusive, rng);
            if (!rng.bernoulli(p_round)) {
                restarted = true;
                break;
            }
        }
        if (!restarted) return attempts;
    }
}

long simulate_segment(const RepeaterPlan& plan, Xoshiro256& rng) {
    return simulate_segment(segment_model(plan), rng);
}

TrialStats estimate_chain(const TrialConfig& config) {
    const RepeaterPlan& plan = config.plan;
    if (config.trials < 1) throw std::invalid_argument("need at least one trial");
    if (plan.segments < 1) throw std::invalid_argument("need at least one segment");

    SegmentModel model;
    if (config.fine_grained_retry) {
        model = segment_model(plan);
        check_model(model);
    } else if (!(plan.p_total > 0.0) || plan.p_total > 1.0) {
        throw std::invalid_argument("per-cycle success probability must be in (0, 1]");
    }
    // a first pass is one cycle by default, k+1 distribution attempts when fine
    const std::uint64_t pass_length =
        config.fine_grained_retry ? model.p_round.size() + 1 : 1;

    const long blocks = (config.trials + block_size - 1) / block_size;
    std::vector<Xoshiro256> streams;
    streams.reserve(blocks);
    Xoshiro256 master(config.seed);
    for (long b = 0; b < blocks; ++b) {
        streams.push_back(master);
        master.jump();
    }

    std::vector<BlockTotals> totals(blocks);
    std::atomic<long> next_block{0};
    const auto worker = [&] {
        for (;;) {
            const long b = next_block.fetch_add(1);
            if (b >= blocks) return;
            Xoshiro256 rng = streams[b];
            BlockTotals& t = totals[b];
            const long hi = std::min(config.trials, (b + 1) * block_size);
            for (long trial = b * block_size; trial < hi; ++trial) {
                std::uint64_t worst = 0;
                for (int s = 0; s < plan.segments; ++s) {
                    const auto n = static_cast<std::uint64_t>(
                        config.fine_grained_retry ? simulate_segment(model, rng)
                                                  : sample_geometric(plan.p_total, rng));
                    if (n == pass_length) ++t.first_try;
                    t.attempts += n;
                    t.attempts_sq += static_cast<unsigned __int128>(n) * n;
                    worst = std::max(worst, n);
                }
                t.max_sum += worst;
                t.max_sq += static_cast<unsigned __int128>(worst) * worst;
            }
        }
    };

    long thread_count =
        config.threads > 0
            ? config.threads
            : static_cast<long>(std::max(1u, std::thread::hardware_concurrency()));
    thread_count = std::min(thread_count, blocks);
    std::vector<std::thread> pool;
    for (long i = 1; i < thread_count; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    BlockTotals sum;
    for (const auto& t : totals) {  // index order, integer adds: order-exact
        sum.first_try += t.first_try;
        sum.attempts += t.attempts;
        sum.attempts_sq += t.attempts_sq;
        sum.max_sum += t.max_sum;
        sum.max_sq += t.max_sq;
    }

    const auto sample_stats = [](double total, double total_sq, double n, double& mean,
                                 double& stderr_out) {
        mean = total / n;
        const double var = n > 1 ? std::max(0.0, (total_sq - total * total / n) / (n - 1)) : 0.0;
        stderr_out = std::sqrt(var / n);
    };

    TrialStats stats;
    stats.trials = config.trials;
    stats.segments = plan.segments;
    const double draws = static_cast<double>(config.trials) * plan.segments;
    stats.success_probability = static_cast<double>(sum.first_try) / draws;
    stats.success_stderr = std::sqrt(
        std::max(0.0, stats.success_probability * (1.0 - stats.success_probability)) / draws);
    sample_stats(static_cast<double>(sum.attempts), static_cast<double>(sum.attempts_sq),
                 draws, stats.attempts_per_segment, stats.attempts_stderr);
    sample_stats(static_cast<double>(sum.max_sum), static_cast<double>(sum.max_sq),
                 static_cast<double>(config.trials), stats.max_attempts, stats.max_stderr);
    return stats;
}

}  // namespace qrep::montecarlo
