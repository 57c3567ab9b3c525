#pragma once

#include <cstdint>
#include <vector>

#include <omp.h>

#include "jumpsim/jump_core.hpp"
#include "jumpsim/rng.hpp"

namespace jumpsim {

// Replicate map with one independent RNG stream per replicate. The
// parallel and serial variants produce identical vectors: streams are
// derived from (master_seed, index) only and results land at their
// replicate slot, so aggregation is order-independent.

template <typename T, typename Work>
std::vector<T> run_replicates_serial(std::size_t n, std::uint64_t master_seed,
                                     Work&& work) {
    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::stream(master_seed, i);
        out[i] = work(i, rng);
    }
    return out;
}

template <typename T, typename Work>
std::vector<T> run_replicates_parallel(std::size_t n, std::uint64_t master_seed,
                                       int workers, Work&& work) {
    std::vector<T> out(n);
    if (workers <= 0) workers = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 16) num_threads(workers)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        Rng rng = Rng::stream(master_seed, static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] =
            work(static_cast<std::size_t>(i), rng);
    }
    return out;
}

template <typename T, typename Work>
std::vector<T> run_replicates(std::size_t n, std::uint64_t master_seed,
                              int workers, Work&& work) {
    if (workers == 1) return run_replicates_serial<T>(n, master_seed, work);
    return run_replicates_parallel<T>(n, master_seed, workers, work);
}

// Monte Carlo estimate of U(s,t)F(x0) = E[F(X(t))] over independent
// paths. Capped paths are counted separately and excluded from the
// average.
template <typename State>
EnsembleStats ensemble_expectation(const JumpKernel<State>& kernel,
                                   const State& x0, double s, double t,
                                   const std::function<double(const State&)>& F,
                                   std::size_t replicates,
                                   std::uint64_t master_seed,
                                   const SimOptions& base_opts = {},
                                   int workers = 0) {
    SimOptions opts = base_opts;
    opts.horizon = t - s;
    struct Draw {
        double value;
        bool capped;
    };
    auto draws = run_replicates<Draw>(
        replicates, master_seed, workers, [&](std::size_t, Rng& rng) -> Draw {
            auto traj = simulate_path(kernel, x0, s, opts, rng);
            if (traj.terminated == Termination::cap_exceeded)
                return {0.0, true};
            return {F(traj.final_state()), false};
        });
    std::vector<double> values;
    values.reserve(replicates);
    std::size_t capped = 0;
    for (const auto& d : draws) {
        if (d.capped) {
            ++capped;
        } else {
            values.push_back(d.value);
        }
    }
    return summarize(values, capped);
}

}  // namespace jumpsim
