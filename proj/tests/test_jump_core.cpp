#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "jumpsim/configuration.hpp"
#include "jumpsim/ensemble.hpp"
#include "jumpsim/jump_core.hpp"

using namespace jumpsim;

namespace {

// Counter with constant jump rate c; state increments on every jump.
struct ConstantKernel : JumpKernel<int> {
    double c;
    explicit ConstantKernel(double rate) : c(rate) {}
    double total_rate(double, const int&) const override { return c; }
    double rate_bound(double, const int&, double) const override { return c; }
    int sample_jump(double, const int& x, Rng&) const override { return x + 1; }
    std::vector<std::pair<int, double>> count_jump_rates(
        double, const int&) const override {
        return {{+1, c}};
    }
};

// Rate q(t) = t with the exact window envelope t + w.
struct LinearRateKernel : JumpKernel<int> {
    double total_rate(double t, const int&) const override { return t; }
    double rate_bound(double t, const int&, double w) const override {
        return t + w;
    }
    int sample_jump(double, const int& x, Rng&) const override { return x + 1; }
};

// Declares a bound below its true rate: must trip the thinning check.
struct LyingKernel : JumpKernel<int> {
    double total_rate(double, const int&) const override { return 2.0; }
    double rate_bound(double, const int&, double) const override { return 1.0; }
    int sample_jump(double, const int& x, Rng&) const override { return x + 1; }
};

// Death chain: each of x individuals dies at rate m.
struct PureDeathKernel : JumpKernel<int> {
    double m;
    explicit PureDeathKernel(double rate) : m(rate) {}
    double total_rate(double, const int& x) const override { return m * x; }
    double rate_bound(double, const int& x, double) const override {
        return m * x;
    }
    int sample_jump(double, const int& x, Rng&) const override { return x - 1; }
    double lyapunov(const int& x) const override {
        return lyapunov_V_count(x);
    }
    std::vector<std::pair<int, double>> count_jump_rates(
        double, const int& x) const override {
        if (x == 0) return {};
        return {{-1, m * x}};
    }
    std::vector<std::pair<int, double>> enumerate_jumps(
        double, const int& x) const override {
        if (x == 0) return {};
        return {{x - 1, m * x}};
    }
};

double ks_statistic(std::vector<double> draws,
                    const std::function<double(double)>& cdf) {
    std::sort(draws.begin(), draws.end());
    double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        double f = cdf(draws[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    }
    return d;
}

}  // namespace

TEST_CASE("constant-rate waiting times pass a KS test vs Exponential") {
    const double c = 1.7;
    ConstantKernel kernel(c);
    Rng rng = Rng::stream(21, 0);
    const std::size_t n = 100000;
    std::vector<double> draws;
    draws.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto j = next_jump(kernel, 0.0, 0, 100.0, 1.0, rng);
        REQUIRE(j.has_value());
        draws.push_back(j->first);
    }
    double d = ks_statistic(draws,
                            [c](double u) { return 1.0 - std::exp(-c * u); });
    // 1% critical value ~ 1.63 / sqrt(n)
    CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("time-linear rate matches its explicit waiting-time law") {
    LinearRateKernel kernel;
    Rng rng = Rng::stream(22, 0);
    const std::size_t n = 100000;
    std::vector<double> draws;
    draws.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto j = next_jump(kernel, 0.0, 0, 50.0, 1.0, rng);
        REQUIRE(j.has_value());
        draws.push_back(j->first);
    }
    double d = ks_statistic(
        draws, [](double u) { return 1.0 - std::exp(-0.5 * u * u); });
    CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("invalid bound declarations are a hard error") {
    LyingKernel kernel;
    Rng rng = Rng::stream(23, 0);
    CHECK_THROWS_AS(next_jump(kernel, 0.0, 0, 100.0, 1.0, rng), BoundViolated);
}

TEST_CASE("zero-rate start runs out the horizon") {
    ConstantKernel kernel(0.0);
    Rng rng = Rng::stream(24, 0);
    SimOptions opts;
    opts.horizon = 5.0;
    auto traj = simulate_path(kernel, 0, 0.0, opts, rng);
    CHECK(traj.events.empty());
    CHECK(traj.terminated == Termination::horizon_reached);
}

TEST_CASE("paths that hit a dead state end absorbed") {
    PureDeathKernel kernel(4.0);
    Rng rng = Rng::stream(25, 0);
    SimOptions opts;
    opts.horizon = 20.0;
    auto traj = simulate_path(kernel, 3, 0.0, opts, rng);
    CHECK(traj.final_state() == 0);
    CHECK(traj.events.size() == 3);
    CHECK(traj.terminated == Termination::absorbed);
}

TEST_CASE("trajectory invariants and determinism") {
    ConstantKernel kernel(2.0);
    SimOptions opts;
    opts.horizon = 3.0;
    Rng r1 = Rng::stream(42, 0);
    Rng r2 = Rng::stream(42, 0);
    auto a = simulate_path(kernel, 0, 0.5, opts, r1);
    auto b = simulate_path(kernel, 0, 0.5, opts, r2);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].first == b.events[i].first);
        CHECK(a.events[i].second == b.events[i].second);
    }
    double prev = a.start_time;
    for (const auto& [t, x] : a.events) {
        CHECK(t > prev);
        prev = t;
    }
}

TEST_CASE("caps convert runaway paths into cap_exceeded") {
    ConstantKernel kernel(100.0);
    SimOptions opts;
    opts.horizon = 10.0;
    opts.max_events = 5;
    Rng rng = Rng::stream(26, 0);
    auto traj = simulate_path(kernel, 0, 0.0, opts, rng);
    CHECK(traj.terminated == Termination::cap_exceeded);
    CHECK(traj.events.size() == 5);
}

TEST_CASE("pure death: survivor count is Binomial(n0, exp(-mt))") {
    const int n0 = 20;
    const double m = 1.0, t = 1.0;
    PureDeathKernel kernel(m);
    const std::size_t reps = 10000;
    SimOptions opts;
    opts.horizon = t;
    auto finals = run_replicates<double>(reps, 27, 1, [&](std::size_t, Rng& rng) {
        auto traj = simulate_path(kernel, n0, 0.0, opts, rng);
        return static_cast<double>(traj.final_state());
    });
    auto st = summarize(finals);
    double p = std::exp(-m * t);
    double exact_mean = n0 * p;
    double exact_var = n0 * p * (1.0 - p);
    CHECK(std::abs(st.mean - exact_mean) <= 3.0 * st.stderror);
    double var = 0.0;
    for (double v : finals) var += (v - st.mean) * (v - st.mean);
    var /= static_cast<double>(reps - 1);
    CHECK(std::abs(var - exact_var) <= 0.2);
}

TEST_CASE("ensemble of the constant observable") {
    PureDeathKernel kernel(1.0);
    auto st = ensemble_expectation<int>(
        kernel, 10, 0.0, 1.0, [](const int&) { return 1.0; }, 500, 28);
    CHECK(st.mean == 1.0);
    CHECK(st.stderror == 0.0);
    CHECK(st.capped == 0);
}

TEST_CASE("generator evaluation, exact and Monte Carlo") {
    PureDeathKernel kernel(0.7);
    Rng rng = Rng::stream(29, 0);
    auto F = [](const int& x) { return static_cast<double>(x); };

    auto exact = evaluate_generator<int>(kernel, F, 0.3, 9, 0, rng);
    CHECK(exact.stderror == 0.0);
    CHECK(exact.mean == doctest::Approx(-0.7 * 9.0));

    auto constant = evaluate_generator<int>(
        kernel, [](const int&) { return 5.0; }, 0.3, 9, 0, rng);
    CHECK(constant.mean == 0.0);

    // Force the MC branch through a kernel without enumeration.
    ConstantKernel ck(2.0);
    auto mc = evaluate_generator<int>(ck, F, 0.0, 4, 20000, rng);
    CHECK(std::abs(mc.mean - 2.0) <= 3.0 * mc.stderror + 1e-12);
}

TEST_CASE("martingale residual is centered for pure death") {
    PureDeathKernel kernel(1.0);
    const std::size_t reps = 10000;
    SimOptions opts;
    opts.horizon = 1.0;
    auto residuals = run_replicates<double>(
        reps, 30, 1, [&](std::size_t, Rng& rng) {
            auto traj = simulate_path(kernel, 15, 0.0, opts, rng);
            return martingale_residual<int>(
                kernel, traj, 1.0,
                [](const int& x) { return static_cast<double>(x); },
                [](double n) { return n; },
                [](const int& x) { return static_cast<double>(x); }, 1e-2,
                rng);
        });
    auto st = summarize(residuals);
    CHECK(std::abs(st.mean) <= 3.0 * st.stderror);

    // Constant F along an absorbed path is identically zero.
    Rng rng = Rng::stream(31, 0);
    auto traj = simulate_path(kernel, 0, 0.0, opts, rng);
    double r = martingale_residual<int>(
        kernel, traj, 1.0, [](const int&) { return 3.0; },
        [](double) { return 3.0; },
        [](const int& x) { return static_cast<double>(x); }, 1e-2, rng);
    CHECK(r == 0.0);
}

TEST_CASE("serial and parallel replicate maps agree exactly") {
    ConstantKernel kernel(3.0);
    SimOptions opts;
    opts.horizon = 2.0;
    auto work = [&](std::size_t, Rng& rng) {
        auto traj = simulate_path(kernel, 0, 0.0, opts, rng);
        return static_cast<double>(traj.final_state());
    };
    auto serial = run_replicates_serial<double>(512, 99, work);
    auto parallel = run_replicates_parallel<double>(512, 99, 0, work);
    CHECK(serial == parallel);
}
