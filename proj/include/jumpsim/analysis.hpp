#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jumpsim/ensemble.hpp"
#include "jumpsim/models.hpp"
#include "jumpsim/series_solver.hpp"

namespace jumpsim {

struct VerificationReport {
    std::string condition;      // "B", "D", "E", "doob", "moments", "xcheck"
    double constant = 0.0;      // c, a(T), b(T) or b-hat
    double worst_violation = 0.0;  // <= 0 iff pass for threshold checks
    int configs_tested = 0;
    bool pass = false;
    std::string detail;

    std::string to_json() const;
};

std::string reports_to_json(const std::vector<VerificationReport>& reports);
std::string reports_to_table(const std::vector<VerificationReport>& reports);

// Poisson point processes at several intensities plus tight adversarial
// clusters; the test bed for the universally-quantified conditions.
std::vector<Configuration> verification_configs(int dim, std::uint64_t seed,
                                                int per_family = 100);

// Drift condition L(t)V <= c V over grid x configs; c defaults to the
// model's own constant, an override builds counter-cases.
VerificationReport check_condition_B(const SpatialModel& model,
                                     const std::vector<double>& t_grid,
                                     const std::vector<Configuration>& configs,
                                     std::optional<double> c_override = {});

// Total-rate bound q(t,eta) <= a(T) V(eta), sup over a t-grid on [0,T].
VerificationReport check_condition_D(const SpatialModel& model, double T,
                                     const std::vector<Configuration>& configs,
                                     std::optional<double> a_override = {},
                                     int t_points = 1000);

// Lower rate comparability: estimates b(T) = inf q(t,eta)/q(T,eta) over
// q(T,eta) > 0; flagged (pass = false) when the estimate degenerates.
VerificationReport check_condition_E(const SpatialModel& model, double T,
                                     const std::vector<Configuration>& configs,
                                     int t_points = 1000);

struct GrowthTestResult {
    double empirical = 0.0;
    double stderror = 0.0;
    double bound = 0.0;
    std::size_t capped = 0;
    bool pass = false;
};

// E[V(X(t))] <= V(eta0) exp(integral of c) by ensemble mean.
GrowthTestResult expectation_growth_test(const SpatialModel& model,
                                         const Configuration& eta0, double s,
                                         double t, std::size_t replicates,
                                         std::uint64_t seed, int workers = 1);

struct DoobRow {
    double threshold = 0.0;
    double empirical = 0.0;
    double stderror = 0.0;  // binomial
    double bound = 0.0;
    bool pass = false;
};

// P(sup_[s,T] V >= a) vs V(eta0) exp(integral of c) / a; the running
// sup is exact since V changes only at jumps.
std::vector<DoobRow> doob_bound_test(const SpatialModel& model,
                                     const Configuration& eta0, double s,
                                     double T,
                                     const std::vector<double>& thresholds,
                                     std::size_t replicates,
                                     std::uint64_t seed, int workers = 1);

struct MomentBoundResult {
    double first_empirical = 0.0;
    double first_stderror = 0.0;
    double first_bound = 0.0;
    double second_empirical = 0.0;  // E(|eta| + |eta|^2)
    double second_stderror = 0.0;
    double second_bound = 0.0;
    bool pass = false;
};

MomentBoundResult moment_bound_test(const SpatialModel& model,
                                    const Configuration& eta0, double s,
                                    double t, std::size_t replicates,
                                    std::uint64_t seed, int workers = 1);

// Count-process adapter so FiniteKernels run through the simulator.
class CountKernel : public JumpKernel<int> {
public:
    explicit CountKernel(FiniteKernel k) : k_(std::move(k)) {}

    double total_rate(double t, const int& i) const override {
        return k_.q(t, i);
    }
    double rate_bound(double t, const int& i, double window) const override;
    int sample_jump(double t, const int& i, Rng& rng) const override;
    double lyapunov(const int& i) const override {
        return lyapunov_V_count(i);
    }
    std::vector<std::pair<int, double>> count_jump_rates(
        double t, const int& i) const override;

    const FiniteKernel& kernel() const { return k_; }

private:
    FiniteKernel k_;
};

struct CrossCheckResult {
    double tv_distance = 0.0;
    std::vector<double> empirical;  // law of the count at t
    std::vector<double> solver_row;
    double solver_defect = 0.0;
};

// Empirical law of X(t) started at `start` vs the minimal-solution row.
CrossCheckResult simulator_vs_solver(const FiniteKernel& kernel, int start,
                                     double s, double t, double step,
                                     std::size_t replicates,
                                     std::uint64_t seed, int workers = 1);

// Reduces the model and runs the cross check; NotReducible if it can't.
CrossCheckResult simulator_vs_solver(const SpatialModel& model, double s,
                                     double t, int truncation, int start,
                                     double step, std::size_t replicates,
                                     std::uint64_t seed, int workers = 1);

}  // namespace jumpsim
