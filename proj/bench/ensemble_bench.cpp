// Serial vs OpenMP ensemble benchmark: identical replicate streams,
// timed back to back, with a bitwise equality check on the results.

#include <chrono>
#include <cstdio>

#include "jumpsim/analysis.hpp"
#include "jumpsim/ensemble.hpp"
#include "jumpsim/models.hpp"

using namespace jumpsim;

namespace {

SpatialModel desk_bdlp() {
    BdlpParams p;
    p.dim = 2;
    p.m.time = constant_profile(1.0);
    p.lam.time = constant_profile(0.5);
    p.a_minus = gaussian_kernel(2, 0.1, 0.5);
    p.a_plus = gaussian_dispersal(2, 0.3);
    return make_bdlp(std::move(p));
}

Configuration initial(int n, Rng& rng) {
    Configuration eta(2);
    std::vector<double> x(2);
    while (eta.size() < static_cast<std::size_t>(n)) {
        x[0] = rng.uniform(-1.0, 1.0);
        x[1] = rng.uniform(-1.0, 1.0);
        if (eta.find(x.data()) == Configuration::npos) eta.insert(x);
    }
    return eta;
}

double timed(const char* label, std::vector<double>& sink, auto&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    sink = fn();
    auto t1 = std::chrono::steady_clock::now();
    double sec = std::chrono::duration<double>(t1 - t0).count();
    double mean = 0.0;
    for (double v : sink) mean += v;
    mean /= sink.empty() ? 1.0 : static_cast<double>(sink.size());
    std::printf("%-10s %8.3f s   mean final count %.4f\n", label, sec, mean);
    return sec;
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t replicates = argc > 1 ? std::stoul(argv[1]) : 2000;
    SpatialModel model = desk_bdlp();
    Rng init = Rng::stream(1, 0);
    Configuration eta0 = initial(20, init);
    SimOptions opts;
    opts.horizon = 2.0;

    auto work = [&](std::size_t, Rng& rng) {
        auto tr = simulate_path(*model.kernel, eta0, 0.0, opts, rng);
        return static_cast<double>(tr.final_state().size());
    };

    std::printf("replicates: %zu, threads available: %d\n", replicates,
                omp_get_max_threads());
    std::vector<double> serial, parallel;
    double ts = timed("serial", serial, [&] {
        return run_replicates_serial<double>(replicates, 1, work);
    });
    double tp = timed("openmp", parallel, [&] {
        return run_replicates_parallel<double>(replicates, 1, 0, work);
    });
    bool identical = serial == parallel;
    std::printf("speedup: %.2fx, results identical: %s\n", ts / tp,
                identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
