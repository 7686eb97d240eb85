#include "qrep/hamiltonians.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <unsupported/Eigen/MatrixFunctions>

#include "qrep/fock.hpp"

namespace qrep::hamiltonians {

namespace {

constexpr double pi = 3.14159265358979323846;
const complexd iu(0.0, 1.0);

void check_params(const FullHamiltonianParams& p) {
    if (p.cutoff < 2) throw std::invalid_argument("cutoff must be at least 2");
    if (!(p.g >= 0.0) || !(p.omega >= 0.0))
        throw std::invalid_argument("couplings must be nonnegative");
    if (!std::isfinite(p.delta_l) || !std::isfinite(p.delta_c))
        throw std::invalid_argument("detunings must be finite");
}

// J1 rate that competes with the drive shift and with the exchange detuning.
double exchange_rate(const FullHamiltonianParams& p) {
    return p.g * p.omega / (8.0 * std::abs(p.delta_l));
}

}  // namespace

double FullHamiltonianParams::small_delta() const {
    if (delta_l == 0.0) throw std::domain_error("small_delta needs delta_l != 0");
    return delta() - omega * omega / (2.0 * delta_l);
}

bool FullHamiltonianParams::dispersive() const {
    return std::min(std::abs(delta_l), std::abs(delta_c)) >= 10.0 * std::max(g, omega);
}

bool FullHamiltonianParams::strong_driving() const {
    if (delta_l == 0.0 || omega <= 0.0) return false;
    double shift = omega * omega / (2.0 * std::abs(delta_l));
    return shift >= 10.0 * std::max(std::abs(delta()), exchange_rate(*this));
}

bool FullHamiltonianParams::phase_regime() const {
    if (delta_l == 0.0 || g <= 0.0 || omega <= 0.0) return false;
    double sd = small_delta();
    double shift = omega * omega / (2.0 * std::abs(delta_l));
    return sd > 0.0 && shift > sd && sd >= 10.0 * exchange_rate(*this);
}

EffectiveCouplings effective_couplings(const FullHamiltonianParams& params) {
    check_params(params);
    if (params.delta_l == 0.0) throw std::domain_error("delta_l is zero");
    EffectiveCouplings c;
    c.j1 = params.g * params.omega / (4.0 * params.delta_l);
    if (params.g * params.omega != 0.0) {
        double sd = params.small_delta();
        if (sd == 0.0) throw std::domain_error("small_delta is zero");
        double go = params.g * params.omega;
        c.j2 = go * go / (32.0 * params.delta_l * params.delta_l * sd);
    }
    return c;
}

State basis_state(int level, int n, int cutoff) {
    if (level < 0 || level > 2) throw std::invalid_argument("level must be 0, 1, or 2");
    if (cutoff < 2 || n < 0 || n >= cutoff) throw std::invalid_argument("fock index out of range");
    State s = State::Zero(3 * cutoff);
    s[level * cutoff + n] = 1.0;
    return s;
}

State coherent_state(int level, complexd alpha, int cutoff) {
    if (level < 0 || level > 2) throw std::invalid_argument("level must be 0, 1, or 2");
    if (cutoff < 2) throw std::invalid_argument("cutoff must be at least 2");
    State s = State::Zero(3 * cutoff);
    s.segment(level * cutoff, cutoff) = fock::coherent_vector(alpha, cutoff);
    return s;
}

namespace {

// Right-hand side -i H(t) psi of the interaction-picture model. Blocks of
// length c: 0, 1, e. The -i multiplying the coupling rows belongs to the
// model itself; the outer -i is the Schrodinger equation.
struct Rhs {
    const FullHamiltonianParams& p;

    void operator()(double t, const State& y, State& out) const {
        const int c = p.cutoff;
        const double dl = p.delta_l, g = p.g, om = p.omega, delta = p.delta_l - p.delta_c;
        const complexd ph = std::exp(-iu * dl * t);
        out.resize(3 * c);
        for (int b = 0; b < 3; ++b)
            for (int n = 0; n < c; ++n) out[b * c + n] = delta * double(n) * y[b * c + n];
        for (int n = 0; n < c; ++n) {
            complexd a_y0 = (n + 1 < c) ? std::sqrt(double(n + 1)) * y[n + 1] : complexd(0.0);
            complexd at_ye = (n > 0) ? std::sqrt(double(n)) * y[2 * c + n - 1] : complexd(0.0);
            out[2 * c + n] += -iu * ph * (0.5 * g * a_y0 + 0.5 * om * (y[n] + y[c + n]));
            out[n] += iu * std::conj(ph) * (0.5 * g * at_ye + 0.5 * om * y[2 * c + n]);
            out[c + n] += iu * std::conj(ph) * 0.5 * om * y[2 * c + n];
        }
        out *= -iu;
    }
};

double excited_population(const State& y, int c) {
    return y.segment(2 * c, c).squaredNorm();
}

void check_truncation(const State& y, int c) {
    for (int b = 0; b < 3; ++b)
        if (std::norm(y[b * c + c - 1]) > 1e-8)
            throw fock::TruncationError("weight reached the top fock level during integration");
}

}  // namespace

Trajectory integrate_full(const FullHamiltonianParams& params, const State& initial, double t) {
    check_params(params);
    const int c = params.cutoff;
    if (initial.size() != 3 * c) throw std::invalid_argument("state size must be 3*cutoff");
    if (std::abs(initial.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("initial state must be normalized");
    if (!(t >= 0.0)) throw std::invalid_argument("duration must be nonnegative");

    Trajectory traj{initial, excited_population(initial, c), initial.norm(), 0};
    if (t == 0.0) return traj;

    // Dormand-Prince 5(4) with the first-same-as-last evaluation reused.
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    constexpr double rtol = 1e-10, atol = 1e-12;

    Rhs rhs{params};
    State y = initial, k1(3 * c), k2(3 * c), k3(3 * c), k4(3 * c), k5(3 * c), k6(3 * c),
        k7(3 * c), ytmp(3 * c), ynew(3 * c);
    rhs(0.0, y, k1);

    double freq = std::max({std::abs(params.delta_l), std::abs(params.delta()), params.g,
                            params.omega, 1.0});
    double h = std::min(t, 0.02 / freq);
    double time = 0.0;
    while (time < t) {
        h = std::min(h, t - time);
        if (h < 1e-14 * t) throw std::runtime_error("step size underflow in integrate_full");

        ytmp = y + h * (a21 * k1);
        rhs(time + h / 5, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(time + 3 * h / 10, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(time + 4 * h / 5, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(time + 8 * h / 9, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(time + h, ytmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(time + h, ynew, k7);

        double err = 0.0;
        for (int i = 0; i < 3 * c; ++i) {
            complexd de = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                               e7 * k7[i]);
            double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += std::norm(de) / (sc * sc);
        }
        err = std::sqrt(err / (3 * c));

        if (err <= 1.0) {
            time += h;
            y.swap(ynew);
            k1.swap(k7);
            ++traj.steps;
            traj.max_excited_population =
                std::max(traj.max_excited_population, excited_population(y, c));
            check_truncation(y, c);
        }
        double scale = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h *= std::clamp(scale, 0.2, 5.0);
    }
    traj.state = y;
    traj.final_norm = y.norm();
    return traj;
}

namespace {

// Split the qubit blocks into sigma_x eigenbranches, apply per-branch maps,
// recombine. The e block rides along unchanged: the effective models live on
// the {0,1} subspace.
template <typename Plus, typename Minus>
State on_x_branches(const State& s, int c, Plus plus, Minus minus) {
    Eigen::VectorXcd p = (s.segment(0, c) + s.segment(c, c)) / std::sqrt(2.0);
    Eigen::VectorXcd m = (s.segment(0, c) - s.segment(c, c)) / std::sqrt(2.0);
    plus(p);
    minus(m);
    State out = s;
    out.segment(0, c) = (p + m) / std::sqrt(2.0);
    out.segment(c, c) = (p - m) / std::sqrt(2.0);
    return out;
}

}  // namespace

Eigen::MatrixXcd displacement_operator(complexd beta, int cutoff) {
    if (cutoff < 2) throw std::invalid_argument("cutoff must be at least 2");
    Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(cutoff, cutoff);
    for (int n = 0; n + 1 < cutoff; ++n) {
        gen(n + 1, n) = beta * std::sqrt(double(n + 1));
        gen(n, n + 1) = -std::conj(beta) * std::sqrt(double(n + 1));
    }
    return gen.exp();
}

State effective_evolve(const FullHamiltonianParams& params, EffectiveMode mode,
                       const State& initial, double t) {
    check_params(params);
    const int c = params.cutoff;
    if (initial.size() != 3 * c) throw std::invalid_argument("state size must be 3*cutoff");
    EffectiveCouplings cpl = effective_couplings(params);
    if (mode == EffectiveMode::displacement) {
        // exp(-i phi (a+a')) = D(-i phi) on the +x branch, D(+i phi) on -x.
        complexd beta = -iu * (cpl.j1 / 2.0) * t;
        Eigen::MatrixXcd up = displacement_operator(beta, c);
        Eigen::MatrixXcd dn = displacement_operator(-beta, c);
        return on_x_branches(
            initial, c, [&](Eigen::VectorXcd& v) { v = up * v; },
            [&](Eigen::VectorXcd& v) { v = dn * v; });
    }
    Eigen::VectorXcd ph(c);
    for (int n = 0; n < c; ++n) ph[n] = std::exp(-iu * (cpl.j2 / 2.0) * double(n) * t);
    return on_x_branches(
        initial, c, [&](Eigen::VectorXcd& v) { v = v.cwiseProduct(ph); },
        [&](Eigen::VectorXcd& v) { v = v.cwiseProduct(ph.conjugate()); });
}

State comparison_frame(const FullHamiltonianParams& params, EffectiveMode mode,
                       const State& evolved, double t) {
    check_params(params);
    const int c = params.cutoff;
    if (evolved.size() != 3 * c) throw std::invalid_argument("state size must be 3*cutoff");
    if (params.delta_l == 0.0) throw std::domain_error("delta_l is zero");

    State out = evolved;
    double delta = params.delta();
    for (int b = 0; b < 3; ++b)
        for (int n = 0; n < c; ++n) out[b * c + n] *= std::exp(iu * delta * double(n) * t);

    double ang = params.omega * params.omega / (4.0 * params.delta_l) * t;
    if (mode == EffectiveMode::phase) ang += effective_couplings(params).j2 / 4.0 * t;
    complexd up = std::exp(iu * ang), dn = std::exp(-iu * ang);
    return on_x_branches(
        out, c, [&](Eigen::VectorXcd& v) { v *= up; }, [&](Eigen::VectorXcd& v) { v *= dn; });
}

RegimeError regime_error(const FullHamiltonianParams& params, EffectiveMode mode, double t,
                         const std::vector<State>& test_states) {
    check_params(params);
    if (test_states.empty()) throw std::invalid_argument("no test states");

    RegimeError result;
    result.per_state.assign(test_states.size(), 0.0);
    std::vector<double> leaks(test_states.size(), 0.0);
    std::vector<std::exception_ptr> errors(test_states.size());

    auto run_one = [&](std::size_t i) {
        try {
            Trajectory traj = integrate_full(params, test_states[i], t);
            State framed = comparison_frame(params, mode, traj.state, t);
            State target = effective_evolve(params, mode, test_states[i], t);
            double overlap = std::norm(complexd(target.dot(framed)));
            result.per_state[i] = 1.0 - overlap;
            leaks[i] = traj.max_excited_population;
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(test_states.size());
    for (std::size_t i = 0; i < test_states.size(); ++i) pool.emplace_back(run_one, i);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    result.infidelity = *std::max_element(result.per_state.begin(), result.per_state.end());
    result.leakage = *std::max_element(leaks.begin(), leaks.end());
    result.regime_warning = mode == EffectiveMode::displacement
                                ? !(params.dispersive() && params.strong_driving())
                                : !(params.dispersive() && params.phase_regime());
    return result;
}

RegimeError regime_error(const FullHamiltonianParams& params, EffectiveMode mode, double t) {
    const int c = params.cutoff;
    std::vector<State> states{basis_state(0, 0, c), coherent_state(0, 0.5, c),
                              basis_state(1, 0, c), coherent_state(1, 0.5, c)};
    return regime_error(params, mode, t, states);
}

FullHamiltonianParams displacement_demo(double ratio, int cutoff) {
    if (!(ratio > 0.0)) throw std::invalid_argument("ratio must be positive");
    FullHamiltonianParams p;
    p.g = 1.0;
    p.omega = 1.0;
    p.delta_l = ratio;
    p.delta_c = ratio;  // Delta = 0
    p.cutoff = cutoff;
    check_params(p);
    return p;
}

FullHamiltonianParams phase_demo(double ratio, int cutoff) {
    if (!(ratio > 0.0)) throw std::invalid_argument("ratio must be positive");
    FullHamiltonianParams p;
    p.omega = 1.0;
    p.g = 0.08;  // keeps the exchange rate at small_delta/10
    p.delta_l = ratio;
    double sd = p.omega * p.omega / (10.0 * ratio);  // drive shift = 5 sd
    p.delta_c = ratio - 6.0 * sd;                    // Delta = 6 sd, so small_delta = sd
    p.cutoff = cutoff;
    check_params(p);
    return p;
}

double stroboscopic_time(const FullHamiltonianParams& params, double raw) {
    check_params(params);
    if (!(raw > 0.0)) throw std::invalid_argument("raw time must be positive");
    double period;
    if (params.g == 0.0) {
        double rabi = std::sqrt(params.delta_l * params.delta_l + 2.0 * params.omega * params.omega);
        if (rabi == 0.0) throw std::domain_error("no frame frequency at g = omega = delta_l = 0");
        period = 2.0 * pi / rabi;
    } else {
        if (params.delta_l == 0.0) throw std::domain_error("delta_l is zero");
        period = 2.0 * pi / std::abs(params.delta_l);
    }
    long long k = std::max(1ll, std::llround(raw / period));
    return double(k) * period;
}

double demo_time(const FullHamiltonianParams& params, EffectiveMode mode) {
    EffectiveCouplings cpl = effective_couplings(params);
    double raw;
    if (mode == EffectiveMode::displacement) {
        if (cpl.j1 == 0.0) throw std::domain_error("no displacement rate at these parameters");
        raw = 0.6 / std::abs(cpl.j1);  // |beta| = 0.3
    } else {
        if (cpl.j2 == 0.0) throw std::domain_error("no phase rate at these parameters");
        raw = pi / (4.0 * std::abs(cpl.j2));  // conditional phase pi/8 per photon
        // Land on a closure of the residual exchange dressing, else its
        // micromotion (amplitude ~ coupling/small_delta) contaminates the
        // comparison with an effect that is not the model's to answer for.
        double period = 2.0 * pi / std::abs(params.small_delta());
        raw = double(std::max(1ll, std::llround(raw / period))) * period;
    }
    return stroboscopic_time(params, raw);
}

}  // namespace qrep::hamiltonians
