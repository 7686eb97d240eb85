#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

// Batch front end over the protocol modules: parameter sweeps, figure data,
// Monte Carlo validation, and full-model comparisons, all emitted as CSV with
// a provenance comment line naming the code version, a hash of the effective
// configuration, and the seed. Tables are plot-ready; nothing interactive.

namespace qrep::cli {

// `start:stop:step` grids (endpoints inclusive within half a step) or comma
// lists; a bare number is a one-element list. Throws std::invalid_argument.
std::vector<double> parse_values(const std::string& text);

// Same, for integer parameters; fractional entries are rejected.
std::vector<int> parse_int_values(const std::string& text);

// Flat `key = value` config lines; '#' starts a comment, blank lines are
// skipped, later duplicates win. Throws on lines with no '='.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// FNV-1a over the canonical command + sorted key=value serialization; printed
// as config_hash in provenance lines.
std::uint64_t fnv1a64(const std::string& text);

// %.12g, the fixed table number format, so reruns are byte-identical.
std::string format_double(double value);

// Runs one subcommand with its flags, e.g. {"fig2", "--ell", "0:200:5"}.
// Subcommands: distribute, purify, swap, fig2, fig4, montecarlo,
// verify-hamiltonians, selftest. Flag values can also come from a
// `key = value` config file (--config PATH, or the QREP_CONFIG environment
// variable); command-line values win. Returns the process exit code:
// 0 success, 1 invalid configuration or usage, 2 infeasible plan,
// 3 numerical verification failure.
int run_command(const std::vector<std::string>& args);

}  // namespace qrep::cli
