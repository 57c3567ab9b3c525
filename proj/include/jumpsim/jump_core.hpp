#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jumpsim/rng.hpp"

namespace jumpsim {

struct BoundViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Transition mechanism of a time-inhomogeneous pure jump process.
// Contract: rate_bound(t, x, w) dominates total_rate(s, x) for all
// s in [t, t + w] (checked during thinning), and sample_jump never
// returns x itself.
template <typename State>
class JumpKernel {
public:
    virtual ~JumpKernel() = default;

    virtual double total_rate(double t, const State& x) const = 0;
    virtual double rate_bound(double t, const State& x, double window) const = 0;
    virtual State sample_jump(double t, const State& x, Rng& rng) const = 0;

    // Coercive function used by the explosion guard and the drift
    // checks; defaults to 0 (guard disabled).
    virtual double lyapunov(const State& x) const { return 0.0; }

    // Exact jump decomposition in terms of the particle-count change:
    // list of (delta_count, rate) pairs summing to total_rate. Empty
    // when the kernel cannot enumerate it.
    virtual std::vector<std::pair<int, double>> count_jump_rates(
        double t, const State& x) const {
        (void)t;
        (void)x;
        return {};
    }

    // Full finite-support enumeration (target state, rate); empty when
    // the jump measure is not finitely supported.
    virtual std::vector<std::pair<State, double>> enumerate_jumps(
        double t, const State& x) const {
        (void)t;
        (void)x;
        return {};
    }
};

enum class Termination { horizon_reached, absorbed, cap_exceeded };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::horizon_reached: return "horizon_reached";
        case Termination::absorbed: return "absorbed";
        case Termination::cap_exceeded: return "cap_exceeded";
    }
    return "?";
}

template <typename State>
struct Trajectory {
    double start_time = 0.0;
    State start_state{};
    std::vector<std::pair<double, State>> events;
    Termination terminated = Termination::horizon_reached;

    const State& final_state() const {
        return events.empty() ? start_state : events.back().second;
    }
    double final_time(double horizon_end) const {
        return terminated == Termination::horizon_reached
                   ? horizon_end
                   : (events.empty() ? start_time : events.back().first);
    }
};

struct SimOptions {
    double horizon = 1.0;
    std::uint64_t seed = 0;
    std::size_t max_events = 1000000;
    double lyapunov_cap = std::numeric_limits<double>::infinity();
    double lookahead_window = 1.0;

    void validate() const {
        if (horizon <= 0.0) throw std::invalid_argument("horizon must be > 0");
        if (max_events == 0) throw std::invalid_argument("max_events must be > 0");
        if (lookahead_window <= 0.0)
            throw std::invalid_argument("lookahead_window must be > 0");
    }
};

// First jump after t, by thinning against the kernel's window bound.
// Returns nullopt if no jump occurs before t_end.
template <typename State>
std::optional<std::pair<double, State>> next_jump(const JumpKernel<State>& kernel,
                                                  double t, const State& x,
                                                  double t_end, double window,
                                                  Rng& rng) {
    double cur = t;
    while (cur < t_end) {
        double window_end = std::min(cur + window, t_end);
        double bound = kernel.rate_bound(cur, x, window_end - cur);
        if (bound <= 0.0) {
            // Nothing can fire in this window; absorbing if this holds
            // forever, which the caller observes as horizon exhaustion.
            cur = window_end;
            continue;
        }
        while (cur < window_end) {
            double candidate = cur + rng.exponential(bound);
            if (candidate >= window_end) {
                cur = window_end;
                break;
            }
            double q = kernel.total_rate(candidate, x);
            if (q > bound * (1.0 + 1e-9)) {
                throw BoundViolated("total_rate " + std::to_string(q) +
                                    " exceeds declared bound " +
                                    std::to_string(bound));
            }
            if (rng.uniform() * bound < q) {
                return std::make_pair(candidate, kernel.sample_jump(candidate, x, rng));
            }
            cur = candidate;
        }
    }
    return std::nullopt;
}

template <typename State>
Trajectory<State> simulate_path(const JumpKernel<State>& kernel, const State& x0,
                                double s, const SimOptions& opts, Rng& rng) {
    opts.validate();
    Trajectory<State> traj;
    traj.start_time = s;
    traj.start_state = x0;
    double t_end = s + opts.horizon;
    double t = s;
    State x = x0;
    while (true) {
        if (traj.events.size() >= opts.max_events ||
            kernel.lyapunov(x) >= opts.lyapunov_cap) {
            traj.terminated = Termination::cap_exceeded;
            return traj;
        }
        auto jump = next_jump(kernel, t, x, t_end, opts.lookahead_window, rng);
        if (!jump) {
            // A path that jumped into a zero-rate state ends absorbed;
            // a start state that simply never fires ran out the horizon.
            bool dead = !traj.events.empty() &&
                        kernel.rate_bound(t, x, t_end - t) == 0.0;
            traj.terminated =
                dead ? Termination::absorbed : Termination::horizon_reached;
            return traj;
        }
        t = jump->first;
        x = jump->second;
        traj.events.emplace_back(t, x);
    }
}

struct EnsembleStats {
    double mean = 0.0;
    double stderror = 0.0;
    std::size_t replicates = 0;
    std::size_t capped = 0;
};

inline EnsembleStats summarize(const std::vector<double>& values,
                               std::size_t capped = 0) {
    EnsembleStats st;
    st.replicates = values.size();
    st.capped = capped;
    if (values.empty()) return st;
    double sum = 0.0;
    for (double v : values) sum += v;
    st.mean = sum / values.size();
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - st.mean) * (v - st.mean);
        st.stderror = std::sqrt(ss / (values.size() - 1.0) / values.size());
    }
    return st;
}

// L(t)F(x): exact summation when the kernel enumerates its jump
// measure, Monte Carlo over sample_jump otherwise. stderr is 0 in the
// exact case.
template <typename State>
EnsembleStats evaluate_generator(const JumpKernel<State>& kernel,
                                 const std::function<double(const State&)>& F,
                                 double t, const State& x,
                                 std::size_t mc_samples, Rng& rng) {
    double q = kernel.total_rate(t, x);
    if (q == 0.0) return {0.0, 0.0, 0, 0};
    auto support = kernel.enumerate_jumps(t, x);
    double fx = F(x);
    if (!support.empty()) {
        double v = 0.0;
        for (const auto& [y, rate] : support) v += rate * (F(y) - fx);
        return {v, 0.0, 0, 0};
    }
    std::vector<double> draws;
    draws.reserve(mc_samples);
    for (std::size_t i = 0; i < mc_samples; ++i) {
        State y = kernel.sample_jump(t, x, rng);
        draws.push_back(q * (F(y) - fx));
    }
    return summarize(draws);
}

// Exact generator for observables that depend on the state only
// through the particle count, via count_jump_rates.
template <typename State>
std::optional<double> generator_count_form(
    const JumpKernel<State>& kernel,
    const std::function<double(double)>& F_of_count, double t, const State& x,
    double count) {
    auto rates = kernel.count_jump_rates(t, x);
    double q = kernel.total_rate(t, x);
    if (rates.empty() && q != 0.0) return std::nullopt;
    double v = 0.0;
    double fx = F_of_count(count);
    for (const auto& [dk, rate] : rates)
        v += rate * (F_of_count(count + dk) - fx);
    return v;
}

// Martingale residual M_{s,F}(t) = F(X(t)) - F(X(s)) - int_s^t
// L(r)F(X(r)) dr along one trajectory. The time integral uses midpoint
// quadrature between jumps; the generator uses the exact count form
// when available and Monte Carlo otherwise.
template <typename State>
double martingale_residual(const JumpKernel<State>& kernel,
                           const Trajectory<State>& traj, double horizon_end,
                           const std::function<double(const State&)>& F,
                           const std::function<double(double)>& F_of_count,
                           const std::function<double(const State&)>& count_of,
                           double quadrature_step, Rng& rng,
                           std::size_t mc_samples = 256) {
    double integral = 0.0;
    double seg_start = traj.start_time;
    const State* state = &traj.start_state;
    auto segment = [&](double a, double b, const State& x) {
        if (b <= a) return;
        double n = count_of(x);
        auto steps = static_cast<std::size_t>(std::ceil((b - a) / quadrature_step));
        double h = (b - a) / static_cast<double>(steps);
        for (std::size_t i = 0; i < steps; ++i) {
            double r = a + (static_cast<double>(i) + 0.5) * h;
            auto exact = generator_count_form(kernel, F_of_count, r, x, n);
            double lf;
            if (exact) {
                lf = *exact;
            } else {
                lf = evaluate_generator(kernel, F, r, x, mc_samples, rng).mean;
            }
            integral += h * lf;
        }
    };
    for (const auto& [tj, xj] : traj.events) {
        segment(seg_start, tj, *state);
        seg_start = tj;
        state = &xj;
    }
    segment(seg_start, horizon_end, *state);
    return F(traj.final_state()) - F(traj.start_state) - integral;
}

}  // namespace jumpsim
