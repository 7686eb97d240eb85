#include "qrep/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>

#include "qrep/chain.hpp"
#include "qrep/constants.hpp"
#include "qrep/distribution.hpp"
#include "qrep/fock.hpp"
#include "qrep/hamiltonians.hpp"
#include "qrep/montecarlo.hpp"
#include "qrep/purification.hpp"
#include "qrep/swapping.hpp"

namespace qrep::cli {

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;        // bad flags, keys, values, paths
constexpr int exit_infeasible = 2;    // no operating point satisfies the request
constexpr int exit_verification = 3;  // a numerical cross-check tripped

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_one_double(const std::string& text) {
    const std::string t = trim(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("not a number: '" + text + "'");
    }
    if (used != t.size() || !std::isfinite(v))
        throw std::invalid_argument("not a finite number: '" + text + "'");
    return v;
}

}  // namespace

std::vector<double> parse_values(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) throw std::invalid_argument("empty value list");
    if (t.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(t);
        for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
        if (parts.size() != 3)
            throw std::invalid_argument("grid must be start:stop:step, got '" + text + "'");
        const double start = parse_one_double(parts[0]);
        const double stop = parse_one_double(parts[1]);
        const double step = parse_one_double(parts[2]);
        if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
        if (stop < start) throw std::invalid_argument("grid stop is below its start");
        std::vector<double> out;
        // endpoints count as on-grid when within half a step
        for (long k = 0; ; ++k) {
            const double v = start + static_cast<double>(k) * step;
            if (v > stop + 0.5 * step) break;
            out.push_back(v);
            if (k > 1000000) throw std::invalid_argument("grid has over a million points");
        }
        return out;
    }
    std::vector<double> out;
    std::stringstream ss(t);
    for (std::string part; std::getline(ss, part, ',');) out.push_back(parse_one_double(part));
    if (out.empty()) throw std::invalid_argument("empty value list");
    return out;
}

std::vector<int> parse_int_values(const std::string& text) {
    std::vector<int> out;
    for (double v : parse_values(text)) {
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-9 || std::abs(r) > 1e9)
            throw std::invalid_argument("expected an integer, got '" + format_double(v) + "'");
        out.push_back(static_cast<int>(r));
    }
    return out;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::stringstream ss(text);
    int lineno = 0;
    for (std::string line; std::getline(ss, line);) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        " has no '=': '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + " has no key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

namespace {

// ---------------------------------------------------------------- config ---

struct Effective {
    std::string command;
    std::map<std::string, std::string> kv;  // defaults already folded in

    const std::string& raw(const std::string& key) const { return kv.at(key); }

    double get_double(const std::string& key) const {
        const auto vs = parse_values(raw(key));
        if (vs.size() != 1)
            throw std::invalid_argument(key + " takes a single value");
        return vs[0];
    }
    int get_int(const std::string& key) const {
        const auto vs = parse_int_values(raw(key));
        if (vs.size() != 1)
            throw std::invalid_argument(key + " takes a single value");
        return vs[0];
    }
    std::uint64_t get_seed() const {
        const std::string t = trim(raw("seed"));
        try {
            std::size_t used = 0;
            const std::uint64_t v = std::stoull(t, &used);
            if (used != t.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("seed must be a nonnegative integer, got '" + t + "'");
        }
    }
    // sorted without duplicates: row order never depends on how a list was typed
    std::vector<double> get_values(const std::string& key) const {
        auto vs = parse_values(raw(key));
        std::sort(vs.begin(), vs.end());
        vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
        return vs;
    }
    std::vector<int> get_int_values(const std::string& key) const {
        auto vs = parse_int_values(raw(key));
        std::sort(vs.begin(), vs.end());
        vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
        return vs;
    }
};

struct OptionSpec {
    const char* key;
    const char* flag;
    const char* fallback;  // value when neither config file nor flag sets it
    const char* help;
};

struct CommandSpec {
    const char* name;
    const char* help;
    std::vector<OptionSpec> options;
};

const std::vector<CommandSpec>& command_table() {
    static const std::vector<CommandSpec> table = {
        {"distribute", "heralded-pair metrics with closed-form and engine cross-checks",
         {{"alpha_sq", "--alpha-sq", "0.25,1,2,3", "bus photon number grid"},
          {"ell_km", "--ell", "0,5,25,50", "segment length grid (km)"},
          {"ell0_km", "--ell0", "25", "fiber attenuation length (km)"},
          {"seed", "--seed", "1", "provenance seed"},
          {"out", "--out", "", "CSV path (default stdout)"}}},
        {"purify", "pumping fidelity and success-probability tables",
         {{"alpha_sq", "--alpha-sq", "1", "bus photon number"},
          {"ell_km", "--ell", "25", "segment length (km)"},
          {"ell0_km", "--ell0", "25", "fiber attenuation length (km)"},
          {"fidelity", "--fidelity", "", "base fidelity list (default: the channel's)"},
          {"rounds", "--rounds", "4", "pumping rounds"},
          {"seed", "--seed", "1", "provenance seed"},
          {"out", "--out", "", "CSV path (default stdout)"}}},
        {"swap", "all sixteen connection outcomes per input fidelity",
         {{"fidelity", "--fidelity", "0.9", "input pair fidelity list"},
          {"seed", "--seed", "1", "provenance seed"},
          {"out", "--out", "", "CSV path (default stdout)"}}},
        {"fig2", "pumped fidelities and pass probability against segment length",
         {{"alpha_sq", "--alpha-sq", "1,2,3", "bus photon number grid"},
          {"ell_km", "--ell", "0:200:5", "segment length grid (km)"},
          {"seed", "--seed", "1", "provenance seed"},
          {"out", "--out", "", "CSV path (default stdout)"}}},
        {"fig4", "planned segment lengths, total reach, and rescaled rates",
         {{"alpha_sq", "--alpha-sq", "1,2,3", "bus photon number grid"},
          {"f_final", "--f-final", "0.8,0.85,0.9,0.95", "end-to-end fidelity targets"},
          {"segments", "--segments", "3:25:2", "chain segment counts"},
          {"rounds", "--rounds", "4", "pumping rounds"},
          {"p_sw", "--p-sw", "1", "per-connection success probability"},
          {"seed", "--seed", "1", "provenance seed"},
          {"out", "--out", "", "CSV path (default stdout)"}}},
        {"montecarlo", "sampled waiting times against the closed-form expectation",
         {{"segments", "--segments", "1,2,3,7", "chain segment counts"},
          {"p", "--p", "0.5,0.1", "extra per-attempt success probabilities"},
          {"alpha_sq", "--alpha-sq", "1", "bus photon number of the reference plan"},
          {"ell_km", "--ell", "25", "segment length of the reference plan (km)"},
          {"rounds", "--rounds", "4", "pumping rounds of the reference plan"},
          {"p_sw", "--p-sw", "1", "per-connection success probability"},
          {"trials", "--trials", "100000", "chains sampled per row"},
          {"seed", "--seed", "1", "sampling seed"},
          {"out", "--out", "", "CSV path (default stdout)"}}},
        {"verify-hamiltonians", "full-model vs effective-evolution comparison sweep",
         {{"mode", "--mode", "both", "displacement, phase, or both"},
          {"ratio", "--ratio", "", "detuning ratio list (default per mode)"},
          {"cutoff", "--cutoff", "14", "photon ladder size"},
          {"seed", "--seed", "1", "provenance seed"},
          {"out", "--out", "", "CSV path (default stdout)"}}},
        {"selftest", "closed-loop consistency suite over every module",
         {{"seed", "--seed", "1", "provenance seed"},
          {"out", "--out", "", "optional CSV of check results"}}},
    };
    return table;
}

// any key some command understands; config files may hold keys for several
// commands at once, but a key outside this set is a typo and is rejected
const std::map<std::string, bool>& known_keys() {
    static const std::map<std::string, bool> keys = [] {
        std::map<std::string, bool> k;
        for (const auto& cmd : command_table())
            for (const auto& opt : cmd.options) k[opt.key] = true;
        return k;
    }();
    return keys;
}

std::string provenance_line(const Effective& eff) {
    std::string canon = eff.command + "\n";
    for (const auto& [k, v] : eff.kv)
        if (k != "out") canon += k + "=" + v + "\n";
    char hash[24];
    std::snprintf(hash, sizeof hash, "0x%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon)));
    return std::string("# qrepsim ") + version_string + " config_hash=" + hash +
           " seed=" + trim(eff.raw("seed"));
}

// ----------------------------------------------------------------- output ---

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

std::string render_table(const Effective& eff, const Table& t) {
    std::string out = provenance_line(eff) + "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        out += (c ? "," : "") + t.columns[c];
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + row[c];
        out += "\n";
    }
    return out;
}

int write_table(const Effective& eff, const Table& t) {
    const std::string body = render_table(eff, t);
    const std::string& path = eff.raw("out");
    if (path.empty()) {
        std::cout << body;
        return exit_ok;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        std::cerr << "cannot open '" << path << "' for writing\n";
        return exit_config;
    }
    f << body;
    if (!f) {
        std::cerr << "short write to '" << path << "'\n";
        return exit_config;
    }
    return exit_ok;
}

// ------------------------------------------------------------ worker pool ---

void parallel_for(std::size_t count, std::size_t max_workers,
                  const std::function<void(std::size_t)>& body) {
    std::size_t hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 4;
    const std::size_t workers = std::min({count, hw, max_workers});
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ------------------------------------------------------------- validation ---

double positive(double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
    return v;
}

double nonnegative(double v, const char* what) {
    if (!(v >= 0.0)) throw std::invalid_argument(std::string(what) + " must be nonnegative");
    return v;
}

double unit_fidelity(double v, const char* what) {
    if (!(v >= 0.5 && v <= 1.0))
        throw std::invalid_argument(std::string(what) + " must lie in [0.5, 1]");
    return v;
}

// ------------------------------------------------------------- distribute ---

int cmd_distribute(const Effective& eff) {
    using distribution::ChannelParams;
    using distribution::Engine;
    const auto alphas = eff.get_values("alpha_sq");
    const auto ells = eff.get_values("ell_km");
    const double ell0 = positive(eff.get_double("ell0_km"), "ell0_km");
    for (double a : alphas) positive(a, "alpha_sq");
    for (double l : ells) nonnegative(l, "ell_km");

    struct Row {
        double alpha, ell, eta, f, p;
        double delta_closed, delta_engines;
    };
    std::vector<Row> rows(alphas.size() * ells.size());
    parallel_for(rows.size(), 8, [&](std::size_t i) {
        const double a = alphas[i / ells.size()];
        const double l = ells[i % ells.size()];
        ChannelParams ch;
        ch.alpha_sq = a;
        ch.ell_km = l;
        ch.ell0_km = ell0;
        const auto m = distribution::analytic_metrics(ch);
        double dc = 0.0;
        for (auto engine : {Engine::coherent, Engine::fock}) {
            const auto outs = distribution::run_distribution(ch, engine);
            double total = 0.0;
            for (const auto& o : outs) total += o.probability;
            dc = std::max(dc, std::abs(total - 1.0));
            for (int k = 0; k < 2; ++k) {
                dc = std::max(dc, std::abs(outs[k].probability - m.p_dist));
                dc = std::max(dc, std::abs(outs[k].pair->fidelity - m.f));
            }
        }
        const auto ca = distribution::protocol_checkpoints(ch, Engine::coherent);
        const auto cf = distribution::protocol_checkpoints(ch, Engine::fock);
        double de = 0.0;
        for (int k = 0; k < 2; ++k) {
            de = std::max(de, (ca.conditional[k] - cf.conditional[k]).cwiseAbs().maxCoeff());
            de = std::max(de, std::abs(ca.probability[k] - cf.probability[k]));
        }
        if (ca.fock_cutoff == cf.fock_cutoff)
            de = std::max(de, (ca.qubits_mode - cf.qubits_mode).cwiseAbs().maxCoeff());
        rows[i] = {a, l, ch.eta(), m.f, m.p_dist, dc, de};
    });

    Table t;
    t.columns = {"alpha_sq", "ell_km",           "ell0_km",      "eta",
                 "f",        "p_dist",           "delta_closed_form",
                 "delta_engines"};
    double worst = 0.0;
    for (const auto& r : rows) {
        worst = std::max({worst, r.delta_closed, r.delta_engines});
        t.rows.push_back({format_double(r.alpha), format_double(r.ell), format_double(ell0),
                          format_double(r.eta), format_double(r.f), format_double(r.p),
                          format_double(r.delta_closed), format_double(r.delta_engines)});
    }
    const int rc = write_table(eff, t);
    if (rc != exit_ok) return rc;
    if (worst > 1e-8) {
        std::cerr << "engine cross-check drift " << format_double(worst) << " exceeds 1e-8\n";
        return exit_verification;
    }
    return exit_ok;
}

// ----------------------------------------------------------------- purify ---

int cmd_purify(const Effective& eff) {
    distribution::ChannelParams ch;
    ch.alpha_sq = positive(eff.get_double("alpha_sq"), "alpha_sq");
    ch.ell_km = nonnegative(eff.get_double("ell_km"), "ell_km");
    ch.ell0_km = positive(eff.get_double("ell0_km"), "ell0_km");
    const int rounds = eff.get_int("rounds");
    if (rounds < 1 || rounds > 64) throw std::invalid_argument("rounds must be in 1..64");
    const auto m = distribution::analytic_metrics(ch);

    std::vector<double> fs;
    if (trim(eff.raw("fidelity")).empty())
        fs = {m.f};
    else
        for (double f : eff.get_values("fidelity")) {
            if (!(f > 0.5 && f <= 1.0))
                throw std::invalid_argument("fidelity must lie in (0.5, 1]");
            fs.push_back(f);
        }

    Table t;
    t.columns = {"alpha_sq", "ell_km", "ell0_km", "f", "round", "fidelity", "p_round",
                 "p_purified"};
    for (double f : fs) {
        const auto s = purification::pump_schedule(f, rounds);
        for (int n = 1; n <= rounds; ++n) {
            const auto partial = purification::pump_schedule(f, n);
            t.rows.push_back({format_double(ch.alpha_sq), format_double(ch.ell_km),
                              format_double(ch.ell0_km), format_double(f), std::to_string(n),
                              format_double(s.fidelities[n - 1]),
                              format_double(s.round_probabilities[n - 1]),
                              format_double(purification::purified_probability(partial, m.p_dist))});
        }
    }
    return write_table(eff, t);
}

// ------------------------------------------------------------------- swap ---

int cmd_swap(const Effective& eff) {
    Table t;
    t.columns = {"fidelity",  "i",
                 "j",         "probability",
                 "dominant",  "secondary",
                 "outcome_fidelity", "table_dominant",
                 "table_secondary",  "f_s"};
    for (double f : eff.get_values("fidelity")) {
        unit_fidelity(f, "fidelity");
        const BellDiagonalPair pair{{BellFamily::phi, +1}, {BellFamily::phi, -1}, f};
        const double fs = analytic_swap_fidelity(f);
        for (const auto& o : swap_pairs(pair, pair, pair)) {
            const auto table = outcome_lookup(o.i, o.j);
            t.rows.push_back({format_double(f), std::to_string(o.i), std::to_string(o.j),
                              format_double(o.probability), to_string(o.pair.dominant),
                              to_string(o.pair.secondary), format_double(o.pair.fidelity),
                              to_string(table.first), to_string(table.second),
                              format_double(fs)});
        }
    }
    return write_table(eff, t);
}

// ------------------------------------------------------------------- fig2 ---

struct Fig2Point {
    double f, f1, f2, f4, fs, p_pd;
};

Fig2Point fig2_point(double alpha_sq, double ell_km) {
    distribution::ChannelParams ch;
    ch.alpha_sq = alpha_sq;
    ch.ell_km = ell_km;
    const auto m = distribution::analytic_metrics(ch);
    const auto s = purification::pump_schedule(m.f, 4);
    Fig2Point p;
    p.f = m.f;
    p.f1 = s.fidelities[0];
    p.f2 = s.fidelities[1];
    p.f4 = s.fidelities[3];
    p.fs = analytic_swap_fidelity(p.f4);
    p.p_pd = purification::purified_probability(s, m.p_dist);
    return p;
}

int cmd_fig2(const Effective& eff) {
    const auto alphas = eff.get_values("alpha_sq");
    const auto ells = eff.get_values("ell_km");
    for (double a : alphas) positive(a, "alpha_sq");
    for (double l : ells) nonnegative(l, "ell_km");

    std::vector<Fig2Point> pts(alphas.size() * ells.size());
    parallel_for(pts.size(), 8, [&](std::size_t i) {
        pts[i] = fig2_point(alphas[i / ells.size()], ells[i % ells.size()]);
    });

    Table t;
    t.columns = {"alpha_sq", "ell_km", "f", "F1", "F2", "F4", "F_S", "P_pd"};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& p = pts[i];
        t.rows.push_back({format_double(alphas[i / ells.size()]),
                          format_double(ells[i % ells.size()]), format_double(p.f),
                          format_double(p.f1), format_double(p.f2), format_double(p.f4),
                          format_double(p.fs), format_double(p.p_pd)});
    }
    return write_table(eff, t);
}

// ------------------------------------------------------------------- fig4 ---

int cmd_fig4(const Effective& eff) {
    const auto alphas = eff.get_values("alpha_sq");
    const auto targets = eff.get_values("f_final");
    const auto ns = eff.get_int_values("segments");
    const int rounds = eff.get_int("rounds");
    const double p_sw = eff.get_double("p_sw");
    for (double a : alphas) positive(a, "alpha_sq");
    for (double f : targets)
        if (!(f > 0.5 && f < 1.0))
            throw std::invalid_argument("f_final targets must lie in (0.5, 1)");
    for (int n : ns)
        if (n < 1) throw std::invalid_argument("segments must be at least 1");
    if (rounds < 1 || rounds > 64) throw std::invalid_argument("rounds must be in 1..64");
    if (!(p_sw > 0.0 && p_sw <= 1.0))
        throw std::invalid_argument("p_sw must lie in (0, 1]");

    struct Row {
        double ell = 0.0, rate = 0.0;
    };
    const std::size_t count = alphas.size() * targets.size() * ns.size();
    std::vector<Row> rows(count);
    try {
        parallel_for(count, 8, [&](std::size_t i) {
            const double a = alphas[i / (targets.size() * ns.size())];
            const double f = targets[(i / ns.size()) % targets.size()];
            const int n = ns[i % ns.size()];
            double ell = 0.0;
            try {
                ell = plan_segment_length(f, n, a, rounds);
            } catch (const std::domain_error&) {
                throw std::domain_error("no segment length reaches F_final=" + format_double(f) +
                                        " at alpha_sq=" + format_double(a) + ", N=" +
                                        std::to_string(n) + ": the target sits below the" +
                                        " channel's infinite-length fidelity floor");
            }
            const auto plan = make_plan(a, ell, n, rounds, p_sw);
            rows[i] = {ell, plan.rate_rescaled};
        });
    } catch (const std::domain_error& e) {
        std::cerr << e.what() << "\n";
        return exit_infeasible;
    }

    Table t;
    t.columns = {"alpha_sq", "f_final", "N", "rounds", "p_sw", "ell_km", "L_km",
                 "rate_rescaled"};
    for (std::size_t i = 0; i < count; ++i) {
        const double a = alphas[i / (targets.size() * ns.size())];
        const double f = targets[(i / ns.size()) % targets.size()];
        const int n = ns[i % ns.size()];
        t.rows.push_back({format_double(a), format_double(f), std::to_string(n),
                          std::to_string(rounds), format_double(p_sw),
                          format_double(rows[i].ell), format_double(n * rows[i].ell),
                          format_double(rows[i].rate)});
    }
    return write_table(eff, t);
}

// ------------------------------------------------------------- montecarlo ---

int cmd_montecarlo(const Effective& eff) {
    const auto ns = eff.get_int_values("segments");
    for (int n : ns)
        if (n < 1) throw std::invalid_argument("segments must be at least 1");
    const long trials = eff.get_int("trials");
    if (trials < 100) throw std::invalid_argument("trials must be at least 100");
    const std::uint64_t seed = eff.get_seed();
    const double alpha = positive(eff.get_double("alpha_sq"), "alpha_sq");
    const double ell = nonnegative(eff.get_double("ell_km"), "ell_km");
    const int rounds = eff.get_int("rounds");
    if (rounds < 1 || rounds > 64) throw std::invalid_argument("rounds must be in 1..64");
    const double p_sw = eff.get_double("p_sw");
    if (!(p_sw > 0.0 && p_sw <= 1.0))
        throw std::invalid_argument("p_sw must lie in (0, 1]");

    auto ps = eff.get_values("p");
    for (double p : ps)
        if (!(p > 0.0 && p <= 1.0))
            throw std::invalid_argument("p values must lie in (0, 1]");
    // the physical operating point rides along with the synthetic probes
    ps.push_back(make_plan(alpha, ell, 1, rounds, p_sw).p_total);
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());

    Table t;
    t.columns = {"segments", "p", "trials", "seed", "z_analytic", "z_mc", "z_stderr",
                 "deviation_sigmas"};
    double worst = 0.0;
    for (int n : ns)
        for (double p : ps) {
            RepeaterPlan sp;
            sp.segments = n;
            sp.p_total = p;
            montecarlo::TrialConfig cfg;
            cfg.plan = sp;
            cfg.trials = trials;
            cfg.seed = seed;
            const auto stats = montecarlo::estimate_chain(cfg);
            const double z = expected_attempts(n, p);
            const double dev = std::abs(stats.max_attempts - z) /
                               std::max(stats.max_stderr, 1e-300);
            worst = std::max(worst, dev);
            t.rows.push_back({std::to_string(n), format_double(p), std::to_string(trials),
                              std::to_string(seed), format_double(z),
                              format_double(stats.max_attempts),
                              format_double(stats.max_stderr), format_double(dev)});
        }
    const int rc = write_table(eff, t);
    if (rc != exit_ok) return rc;
    if (worst > 3.0) {
        std::cerr << "sampled waiting time off by " << format_double(worst)
                  << " standard errors (gate: 3)\n";
        return exit_verification;
    }
    return exit_ok;
}

// ---------------------------------------------------- verify-hamiltonians ---

int cmd_verify_hamiltonians(const Effective& eff) {
    namespace ham = hamiltonians;
    const std::string mode = trim(eff.raw("mode"));
    if (mode != "displacement" && mode != "phase" && mode != "both")
        throw std::invalid_argument("mode must be displacement, phase, or both");
    const int cutoff = eff.get_int("cutoff");
    if (cutoff < 2 || cutoff > 64) throw std::invalid_argument("cutoff must be in 2..64");

    std::vector<std::pair<ham::EffectiveMode, double>> tasks;
    const bool custom = !trim(eff.raw("ratio")).empty();
    const auto ratios = custom ? eff.get_values("ratio") : std::vector<double>{};
    for (double r : ratios) positive(r, "ratio");
    if (mode != "phase")
        for (double r : custom ? ratios : std::vector<double>{10, 20, 40, 80})
            tasks.push_back({ham::EffectiveMode::displacement, r});
    if (mode != "displacement")
        // long integrations: by default only the pinned comparison point
        for (double r : custom ? ratios : std::vector<double>{20})
            tasks.push_back({ham::EffectiveMode::phase, r});

    struct Row {
        ham::FullHamiltonianParams params;
        double t = 0.0;
        ham::RegimeError err;
        bool dispersive = false;
    };
    std::vector<Row> rows(tasks.size());
    std::string failure;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto [m, r] = tasks[i];
        const auto params = (m == ham::EffectiveMode::displacement)
                                ? ham::displacement_demo(r, cutoff)
                                : ham::phase_demo(r, cutoff);
        const double t = ham::demo_time(params, m);
        Row row;
        row.params = params;
        row.t = t;
        try {
            row.err = ham::regime_error(params, m, t);
        } catch (const fock::TruncationError& e) {
            failure = std::string("photon ladder overflow at ratio ") + format_double(r) +
                      ": " + e.what();
            row.err.infidelity = 1.0;
            row.err.leakage = 1.0;
        }
        row.dispersive = params.dispersive();
        rows[i] = row;
    }

    Table t;
    t.columns = {"mode",    "ratio",   "g",       "omega",          "delta_l",
                 "delta_c", "cutoff",  "t",       "infidelity",     "leakage",
                 "leakage_bound", "dispersive", "regime_warning"};
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& [m, r] = tasks[i];
        const auto& row = rows[i];
        const auto& p = row.params;
        const double bound = ham::leakage_bound_constant * (p.g * p.g + p.omega * p.omega) /
                             (4.0 * p.delta_l * p.delta_l);
        if (row.dispersive && row.err.leakage > bound && failure.empty())
            failure = "leakage " + format_double(row.err.leakage) + " above the dispersive bound " +
                      format_double(bound) + " at ratio " + format_double(r);
        t.rows.push_back({m == ham::EffectiveMode::displacement ? "displacement" : "phase",
                          format_double(r), format_double(p.g), format_double(p.omega),
                          format_double(p.delta_l), format_double(p.delta_c),
                          std::to_string(p.cutoff), format_double(row.t),
                          format_double(row.err.infidelity), format_double(row.err.leakage),
                          format_double(bound), row.dispersive ? "1" : "0",
                          row.err.regime_warning ? "1" : "0"});
    }
    const int rc = write_table(eff, t);
    if (rc != exit_ok) return rc;
    if (!failure.empty()) {
        std::cerr << failure << "\n";
        return exit_verification;
    }
    return exit_ok;
}

// --------------------------------------------------------------- selftest ---

using CheckResult = std::optional<std::string>;  // failure detail, empty = pass

std::filesystem::path selftest_scratch(int index) {
    static const auto stamp =
        std::chrono::steady_clock::now().time_since_epoch().count();
    return std::filesystem::temp_directory_path() /
           ("qrep_selftest_" + std::to_string(stamp) + "_" + std::to_string(index) + ".csv");
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// data rows of a rendered table, split into cells
std::vector<std::vector<double>> parse_csv_rows(const std::string& body) {
    std::vector<std::vector<double>> rows;
    std::stringstream ss(body);
    bool header_seen = false;
    for (std::string line; std::getline(ss, line);) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<double> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(std::stod(cell));
        rows.push_back(cells);
    }
    return rows;
}

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

CheckResult check_distribution_closed_forms() {
    using distribution::Engine;
    for (double a : {0.25, 1.0, 2.0, 3.0})
        for (double l : {0.0, 5.0, 25.0, 50.0}) {
            distribution::ChannelParams ch;
            ch.alpha_sq = a;
            ch.ell_km = l;
            const auto m = distribution::analytic_metrics(ch);
            const double f_ref = 0.5 * (1.0 + std::exp(-2.0 * a * (1.0 - ch.eta())));
            const double p_ref = 0.5 * (1.0 - std::exp(-2.0 * ch.eta() * a));
            if (std::abs(m.f - f_ref) > 1e-14 || std::abs(m.p_dist - p_ref) > 1e-14)
                return "analytic metrics drifted from their closed forms";
            for (auto engine : {Engine::coherent, Engine::fock}) {
                const auto outs = distribution::run_distribution(ch, engine);
                for (int k = 0; k < 2; ++k) {
                    if (std::abs(outs[k].probability - p_ref) > 1e-8)
                        return "heralding probability off at alpha_sq=" + format_double(a) +
                               " ell=" + format_double(l);
                    if (std::abs(outs[k].pair->fidelity - f_ref) > 1e-8)
                        return "heralded fidelity off at alpha_sq=" + format_double(a) +
                               " ell=" + format_double(l);
                }
            }
        }
    return {};
}

CheckResult check_engine_agreement() {
    using distribution::Engine;
    for (double a : {0.25, 1.0, 2.0, 3.0})
        for (double l : {0.0, 5.0, 25.0, 50.0}) {
            distribution::ChannelParams ch;
            ch.alpha_sq = a;
            ch.ell_km = l;
            const auto ca = distribution::protocol_checkpoints(ch, Engine::coherent);
            const auto cf = distribution::protocol_checkpoints(ch, Engine::fock);
            for (int k = 0; k < 2; ++k) {
                if ((ca.conditional[k] - cf.conditional[k]).cwiseAbs().maxCoeff() > 1e-8)
                    return "conditional states disagree at alpha_sq=" + format_double(a) +
                           " ell=" + format_double(l);
                if (std::abs(ca.probability[k] - cf.probability[k]) > 1e-8)
                    return "pattern probabilities disagree at alpha_sq=" + format_double(a);
            }
        }
    return {};
}

CheckResult check_pumping_recursion() {
    for (double f : {0.6, 0.75, 0.9}) {
        const auto s = purification::pump_schedule(f, 4);
        BellDiagonalPair stationary{{BellFamily::phi, +1}, {BellFamily::phi, -1}, f};
        const BellDiagonalPair fresh = stationary;
        for (int n = 1; n <= 4; ++n) {
            const auto outcomes = purification::pump_round(stationary, fresh);
            int accepted = 0;
            for (const auto& o : outcomes) {
                if (!o.accepted) continue;
                ++accepted;
                if (std::abs(o.probability - s.round_probabilities[n - 1]) > 1e-12)
                    return "round probability off at f=" + format_double(f) +
                           " n=" + std::to_string(n);
                if (std::abs(o.survivor->fidelity - s.fidelities[n - 1]) > 1e-12)
                    return "pumped fidelity off at f=" + format_double(f) +
                           " n=" + std::to_string(n);
                stationary = *o.survivor;
            }
            if (accepted != 2) return "expected two accepted records per round";
        }
    }
    return {};
}

CheckResult check_swap_composition() {
    const double f = 0.9;
    const BellDiagonalPair pair{{BellFamily::phi, +1}, {BellFamily::phi, -1}, f};
    const double fs = analytic_swap_fidelity(f);
    for (const auto& o : swap_pairs(pair, pair, pair)) {
        if (std::abs(o.probability - 1.0 / 16.0) > 1e-12) return "outcomes are not uniform";
        if (std::abs(o.pair.fidelity - fs) > 1e-12)
            return "conditional fidelity disagrees with the closed form";
    }
    for (double g : {0.55, 0.7, 0.9, 0.99})
        if (std::abs(chain_fidelity(g, 3) - analytic_swap_fidelity(g)) > 1e-15)
            return "three-segment composition disagrees with the single-swap form";
    return {};
}

CheckResult check_waiting_times() {
    if (std::abs(expected_attempts(2, 0.5) - 8.0 / 3.0) > 1e-12)
        return "two-segment waiting factor is not 8/3 at p=1/2";
    for (double p : {0.05, 0.3, 0.9})
        if (!close_rel(expected_attempts(1, p), 1.0 / p, 1e-12))
            return "single-segment waiting factor is not 1/p";
    return {};
}

CheckResult check_mc_determinism() {
    RepeaterPlan sp;
    sp.segments = 3;
    sp.p_total = 0.5;
    montecarlo::TrialConfig one;
    one.plan = sp;
    one.trials = 20000;
    one.seed = 99;
    one.threads = 1;
    montecarlo::TrialConfig many = one;
    many.threads = 0;
    const auto s1 = montecarlo::estimate_chain(one);
    const auto s2 = montecarlo::estimate_chain(many);
    if (s1.max_attempts != s2.max_attempts || s1.attempts_per_segment != s2.attempts_per_segment ||
        s1.success_probability != s2.success_probability)
        return "sampled statistics depend on the thread count";
    return {};
}

CheckResult check_fig2_closed_loop() {
    const auto p1 = selftest_scratch(1), p2 = selftest_scratch(2);
    const std::vector<std::string> args = {"fig2", "--alpha-sq", "1,2", "--ell", "0:50:25"};
    auto with_out = [&](const std::filesystem::path& p) {
        auto a = args;
        a.push_back("--out");
        a.push_back(p.string());
        return a;
    };
    if (run_command(with_out(p1)) != 0 || run_command(with_out(p2)) != 0)
        return "table generation failed";
    const std::string b1 = read_file(p1), b2 = read_file(p2);
    std::error_code ec;
    std::filesystem::remove(p1, ec);
    std::filesystem::remove(p2, ec);
    if (b1.empty() || b1 != b2) return "reruns are not byte-identical";
    const auto rows = parse_csv_rows(b1);
    if (rows.size() != 6) return "expected 6 rows, got " + std::to_string(rows.size());
    for (const auto& r : rows) {
        const auto p = fig2_point(r[0], r[1]);
        const double want[6] = {p.f, p.f1, p.f2, p.f4, p.fs, p.p_pd};
        for (int c = 0; c < 6; ++c)
            if (!close_rel(r[2 + c], want[c], 1e-9))
                return "row is not recomputable from its own keys";
    }
    return {};
}

CheckResult check_fig4_closed_loop() {
    const auto p1 = selftest_scratch(3);
    if (run_command({"fig4", "--alpha-sq", "1", "--f-final", "0.9", "--segments", "3:5:2",
                     "--out", p1.string()}) != 0)
        return "table generation failed";
    const auto rows = parse_csv_rows(read_file(p1));
    std::error_code ec;
    std::filesystem::remove(p1, ec);
    if (rows.size() != 2) return "expected 2 rows, got " + std::to_string(rows.size());
    for (const auto& r : rows) {
        const int n = static_cast<int>(r[2]);
        const double ell = plan_segment_length(r[1], n, r[0], static_cast<int>(r[3]));
        if (!close_rel(r[5], ell, 1e-9)) return "planned length is not recomputable";
        if (!close_rel(r[6], n * ell, 1e-9)) return "total reach is not N times the segment";
        const auto plan = make_plan(r[0], r[5], n, static_cast<int>(r[3]), r[4]);
        if (!close_rel(r[7], plan.rate_rescaled, 1e-9)) return "rate is not recomputable";
        if (!close_rel(plan.f_final, r[1], 1e-9)) return "plan does not hit its fidelity target";
    }
    return {};
}

int cmd_selftest(const Effective& eff) {
    const std::vector<std::pair<std::string, std::function<CheckResult()>>> checks = {
        {"distribution closed forms", check_distribution_closed_forms},
        {"engine agreement", check_engine_agreement},
        {"pumping recursion vs four-qubit rounds", check_pumping_recursion},
        {"swap composition", check_swap_composition},
        {"waiting-time factors", check_waiting_times},
        {"monte carlo thread determinism", check_mc_determinism},
        {"fig2 closed loop", check_fig2_closed_loop},
        {"fig4 closed loop", check_fig4_closed_loop},
    };
    Table t;
    t.columns = {"check", "status", "detail"};
    int failures = 0;
    for (const auto& [name, fn] : checks) {
        CheckResult r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r = std::string("exception; ") + e.what();
        }
        if (r) {
            ++failures;
            std::cout << "FAIL " << name << ": " << *r << "\n";
        } else {
            std::cout << "ok   " << name << "\n";
        }
        std::string detail = r.value_or("");
        std::replace(detail.begin(), detail.end(), ',', ';');
        t.rows.push_back({name, r ? "fail" : "ok", detail});
    }
    std::cout << (failures ? "selftest FAILED (" + std::to_string(failures) + ")" : "selftest passed")
              << "\n";
    if (!trim(eff.raw("out")).empty()) {
        const int rc = write_table(eff, t);
        if (rc != exit_ok) return rc;
    }
    return failures ? exit_verification : exit_ok;
}

// --------------------------------------------------------------- dispatch ---

int dispatch(const Effective& eff) {
    if (eff.command == "distribute") return cmd_distribute(eff);
    if (eff.command == "purify") return cmd_purify(eff);
    if (eff.command == "swap") return cmd_swap(eff);
    if (eff.command == "fig2") return cmd_fig2(eff);
    if (eff.command == "fig4") return cmd_fig4(eff);
    if (eff.command == "montecarlo") return cmd_montecarlo(eff);
    if (eff.command == "verify-hamiltonians") return cmd_verify_hamiltonians(eff);
    if (eff.command == "selftest") return cmd_selftest(eff);
    throw std::logic_error("unhandled command " + eff.command);
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"quantum repeater protocol tables"};
    app.name("qrep");
    app.require_subcommand(1);

    // stable storage for option values; nodes never move on insert
    std::map<std::pair<std::string, std::string>, std::string> holders;
    std::map<std::string, std::string> config_paths;
    std::map<std::string, CLI::App*> subs;
    for (const auto& cmd : command_table()) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        subs[cmd.name] = sub;
        for (const auto& opt : cmd.options)
            sub->add_option(opt.flag, holders[{cmd.name, opt.key}], opt.help);
        sub->add_option("--config", config_paths[cmd.name],
                        "key = value file; QREP_CONFIG names the default");
    }

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const auto& spec = *std::find_if(command_table().begin(), command_table().end(),
                                     [&](const CommandSpec& c) { return c.name == sub->get_name(); });

    Effective eff;
    eff.command = spec.name;
    for (const auto& opt : spec.options) eff.kv[opt.key] = opt.fallback;

    std::string config_path = config_paths[eff.command];
    if (config_path.empty())
        if (const char* env = std::getenv("QREP_CONFIG")) config_path = env;
    if (!config_path.empty()) {
        std::ifstream f(config_path, std::ios::binary);
        if (!f) {
            std::cerr << "cannot read config file '" << config_path << "'\n";
            return exit_config;
        }
        std::ostringstream ss;
        ss << f.rdbuf();
        std::map<std::string, std::string> file_kv;
        try {
            file_kv = parse_config_text(ss.str());
        } catch (const std::exception& e) {
            std::cerr << config_path << ": " << e.what() << "\n";
            return exit_config;
        }
        for (const auto& [k, v] : file_kv) {
            if (!known_keys().count(k)) {
                std::cerr << config_path << ": unknown key '" << k << "'\n";
                return exit_config;
            }
            if (eff.kv.count(k)) eff.kv[k] = v;  // keys for other commands ride along
        }
    }
    for (const auto& opt : spec.options)
        if (sub->count(opt.flag)) eff.kv[opt.key] = holders[{eff.command, opt.key}];

    try {
        return dispatch(eff);
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return exit_config;
    }
}

}  // namespace qrep::cli
