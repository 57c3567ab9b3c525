#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace jumpsim {

struct GridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Time-dependent rate matrix on a truncated finite state space.
// rate(t, i, j) is the jump intensity i -> j for i != j; the diagonal
// is excluded by construction. `targets[i]` lists the states reachable
// from i (empty vector of vectors means dense).
struct FiniteKernel {
    int n_states = 0;
    std::function<double(double, int, int)> rate;
    std::vector<std::vector<int>> targets;
    // Rate of leaving the truncation entirely from state i; counted in
    // q(t, i) with no in-range target, so it shows up as defect.
    std::function<double(double, int)> escape_rate;
    // sup of q(., i) over [t, t+w]; used as thinning envelope when the
    // kernel runs through the simulator. Unset means time-constant.
    std::function<double(double, int, double)> q_bound;
    std::string name = "finite";

    double q(double t, int i) const;
    const std::vector<int>& targets_of(int i) const;
    // Dense Q(t) with zero diagonal.
    Eigen::MatrixXd rate_matrix(double t) const;
    // Generator A(t) = Q(t) - diag(q(t, .)).
    Eigen::MatrixXd generator(double t) const;

private:
    mutable std::vector<std::vector<int>> dense_targets_;
};

struct SeriesInfo {
    int terms_used = 0;
    bool tail_converged = false;  // true if stopped on the mass tolerance
    std::vector<double> term_mass;  // max row sum of each added term
};

// Mass of the added term below this stops the series summation.
inline constexpr double kSeriesTailTolerance = 1e-10;

// P^(n)(s, .; t, .) on a uniform grid of the given step. step must
// tile [s, t].
Eigen::MatrixXd series_term(const FiniteKernel& kernel, int n, double s,
                            double t, double step);

struct MinimalSolution {
    Eigen::MatrixXd transition;  // sum of the first N+1 terms
    Eigen::VectorXd defect;      // 1 - row sum, per source state
    SeriesInfo info;
};

MinimalSolution minimal_solution(const FiniteKernel& kernel, double s, double t,
                                 double step, int n_max);

// sum alpha^n P^(n); alpha in (0, 1], alpha = 0 yields the bare n = 0
// term by convention.
Eigen::MatrixXd regularized_solution(const FiniteKernel& kernel, double alpha,
                                     double s, double t, double step, int n_max);

// Max-abs residual of the backward equation
// dP/ds = q(s,i) P - sum_k Q(s,i,k) P(k,.), central differences in s
// over interior grid nodes.
double backward_residual(const FiniteKernel& kernel, double s, double t,
                         double step, int n_max);

// Max-abs residual of the forward equation
// dP/dt(s,x;t,j) = -q(t,j) P(.,j) + sum_y P(.,y) Q(t,y,j).
double forward_residual(const FiniteKernel& kernel, double s, double t,
                        double step, int n_max);

// Composition of exact homogeneous solutions with rates frozen at the
// left endpoint of each mesh interval.
Eigen::MatrixXd chernoff_approximation(const FiniteKernel& kernel, double s,
                                       double t, double mesh);

struct DensityVector {
    Eigen::VectorXd weights;
    double time = 0.0;
    double mass() const { return weights.sum(); }
};

struct DensityEvolution {
    DensityVector density;
    SeriesInfo info;
    // Mass added by each series term; sum(mu0) minus the running total
    // is the conservativeness defect sequence.
    std::vector<double> term_mass_contribution;
};

// mu_t(j) = sum_i mu0(i) P(s,i;t,{j}) via the adjoint series
// recursion; works at state counts where the full matrix tables would
// not fit.
DensityEvolution evolve_density(const FiniteKernel& kernel,
                                const Eigen::VectorXd& mu0, double s, double t,
                                double step, int n_max);

// Defect after N terms, for N = 0..N_max (or until the series tail is
// exhausted), mass-weighted by mu0.
std::vector<std::pair<int, double>> conservativeness_report(
    const FiniteKernel& kernel, const Eigen::VectorXd& mu0, double s, double t,
    double step, int n_max);

std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::string& kernel_name,
                          double s, double t, double step, int n_terms);

// Shared fixtures.
FiniteKernel two_state_constant(double a, double b);
// 2-state chain with rates (1+t) forward and back_scale*(1+t) back.
FiniteKernel two_state_time_dependent(double back_scale = 0.5);
// Birth beta(t), death i*delta, states 0..n-1 (no birth at the cut).
FiniteKernel immigration_death(std::function<double(double)> beta, double delta,
                               int n_states);
// Pure birth i -> i+1 at rate growth*(i+1); truncated, so mass escapes.
FiniteKernel truncated_pure_birth(double growth, int n_states);

}  // namespace jumpsim
