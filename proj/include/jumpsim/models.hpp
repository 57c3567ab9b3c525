#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "jumpsim/configuration.hpp"
#include "jumpsim/jump_core.hpp"
#include "jumpsim/series_solver.hpp"

namespace jumpsim {

struct NotReducible : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EnvelopeViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scalar intensity profile in t with an exact window supremum, used
// both for rate evaluation and for thinning envelopes.
struct TimeProfile {
    std::function<double(double)> f;
    std::function<double(double, double)> sup_window;  // sup over [t, t+w]
    double sup_norm = 0.0;

    double operator()(double t) const { return f(t); }
};

TimeProfile constant_profile(double c);
// base + amp * sin(freq * t + phase), assumed nonnegative.
TimeProfile sinusoidal_profile(double base, double amp, double freq = 1.0,
                               double phase = 0.0);

// Separable intensity m(t, x) = time(t) * space(x) with a declared
// spatial sup; space == nullptr means spatially constant.
struct SpaceTimeField {
    TimeProfile time;
    std::function<double(const double*, int)> space;
    double space_sup = 1.0;

    double operator()(double t, const double* x, int dim) const {
        double v = time(t);
        if (space) v *= space(x, dim);
        return v;
    }
    double sum_over(double t, const Configuration& eta) const;
    double sup_window(double t, double w) const {
        return time.sup_window(t, w) * space_sup;
    }
    double sup_norm() const { return time.sup_norm * space_sup; }
};

struct DispersalStats {
    long long proposed = 0;
    long long accepted = 0;
};

// Offspring displacement density a+ with either a direct sampler or a
// rejection envelope a* (integrable, dominating, directly sampleable).
struct Dispersal {
    int dim = 2;
    std::function<double(const double*, int)> density;
    std::function<void(Rng&, double*)> direct_sampler;
    std::function<double(const double*, int)> envelope_density;  // a*, unnormalized
    std::function<void(Rng&, double*)> envelope_sampler;  // samples a*/mass
    double support_radius = 0.0;  // 0 = unbounded
};

Dispersal gaussian_dispersal(int dim, double sigma);
// Radial density c / (lambda + |u|^2)^alpha in d = 2, alpha > 1.
Dispersal powerlaw_dispersal(double lambda, double alpha);
// Same law, but exposed only through a rejection envelope (a heavier
// power-law), to exercise the envelope path.
Dispersal powerlaw_dispersal_rejection(double lambda, double alpha,
                                       double envelope_lambda);

// Child position y = x + u with u ~ dispersal density; rejection under
// the envelope when no direct sampler exists.
void dispersal_sample(const Dispersal& d, const double* x, Rng& rng,
                      double* out, DispersalStats* stats = nullptr);

// --- Bolker-Dieckmann-Law-Pacala -----------------------------------

struct BdlpParams {
    int dim = 2;
    SpaceTimeField m;    // death intensity
    SpaceTimeField lam;  // branching intensity
    PairKernel a_minus;  // additive competition
    Dispersal a_plus;    // offspring displacement
};

class BdlpKernel : public JumpKernel<Configuration> {
public:
    explicit BdlpKernel(BdlpParams p) : p_(std::move(p)) {}

    double total_rate(double t, const Configuration& eta) const override;
    double rate_bound(double t, const Configuration& eta,
                      double window) const override;
    Configuration sample_jump(double t, const Configuration& eta,
                              Rng& rng) const override;
    double lyapunov(const Configuration& eta) const override {
        return lyapunov_V(eta);
    }
    std::vector<std::pair<int, double>> count_jump_rates(
        double t, const Configuration& eta) const override;

    const BdlpParams& params() const { return p_; }
    double death_rate(double t, const Configuration& eta) const;
    double birth_rate(double t, const Configuration& eta) const;

private:
    BdlpParams p_;
};

// --- Dieckmann-Law (translation invariant, facilitation b+) --------

struct DlParams {
    int dim = 2;
    TimeProfile m;
    TimeProfile lam;
    PairKernel a_minus;
    PairKernel b_plus;
    Dispersal a_plus;
    double stability_b = 0.0;  // declared constant of a- - b+
};

class DlKernel : public JumpKernel<Configuration> {
public:
    explicit DlKernel(DlParams p) : p_(std::move(p)) {}

    double total_rate(double t, const Configuration& eta) const override;
    double rate_bound(double t, const Configuration& eta,
                      double window) const override;
    Configuration sample_jump(double t, const Configuration& eta,
                              Rng& rng) const override;
    double lyapunov(const Configuration& eta) const override {
        return lyapunov_V(eta);
    }
    std::vector<std::pair<int, double>> count_jump_rates(
        double t, const Configuration& eta) const override;

    const DlParams& params() const { return p_; }
    double death_rate(double t, const Configuration& eta) const;
    double birth_rate(double t, const Configuration& eta) const;

private:
    DlParams p_;
};

// --- Generalized Dieckmann-Law (cluster births) --------------------

struct GdlParams {
    int dim = 2;
    SpaceTimeField m;
    SpaceTimeField lam;
    PairKernel a_minus;
    PairKernel b_plus;
    TimeProfile a_scale;  // a-(t, u) = a_scale(t) * a_minus(u)
    TimeProfile b_scale;  // b+(t, u) = b_scale(t) * b_plus(u)
    Dispersal a_plus;
};

// Offspring count law: zero-truncated Poisson(1),
// P(k) = (1/k!) / (e - 1), k >= 1.
double gdl_cluster_pmf(int k);
int sample_cluster_size(Rng& rng);
inline constexpr int kGdlClusterCut = 24;  // tail beyond this < 1e-24

// Samples the nonempty offspring group of a parent at x.
Configuration gdl_sample_cluster(const GdlParams& p, double t, const double* x,
                                 Rng& rng);

class GdlKernel : public JumpKernel<Configuration> {
public:
    explicit GdlKernel(GdlParams p);

    double total_rate(double t, const Configuration& eta) const override;
    double rate_bound(double t, const Configuration& eta,
                      double window) const override;
    Configuration sample_jump(double t, const Configuration& eta,
                              Rng& rng) const override;
    double lyapunov(const Configuration& eta) const override {
        return lyapunov_V(eta);
    }
    std::vector<std::pair<int, double>> count_jump_rates(
        double t, const Configuration& eta) const override;

    const GdlParams& params() const { return p_; }
    double death_rate(double t, const Configuration& eta) const;
    // Total cluster-birth rate, (e-1)/e factor included.
    double birth_rate(double t, const Configuration& eta) const;

private:
    GdlParams p_;
};

// Validates the theorem hypothesis b+(t, u) <= a-(t, u) on a (t, u)
// grid; throws std::invalid_argument on violation.
void validate_gdl_hypothesis(const GdlParams& p, double t_max);

// --- Shared model handle -------------------------------------------

enum class ModelKind { bdlp, dl, gdl };

struct SpatialModel {
    ModelKind kind;
    std::shared_ptr<JumpKernel<Configuration>> kernel;
    int dim = 2;

    // Exact L(t)V for V(eta) = |eta| + |eta|^2 (birth integrals reduce
    // to counting since V depends only on |eta|).
    double lyapunov_drift(double t, const Configuration& eta) const;
    // Closed-form condition constants for the shipped coefficient
    // families.
    double condition_B_constant() const;
    double condition_D_constant(double t_max) const;
};

SpatialModel make_bdlp(BdlpParams p);
SpatialModel make_dl(DlParams p);
SpatialModel make_gdl(GdlParams p);

// Count-process reduction for spatially constant, non-interacting
// coefficients; throws NotReducible otherwise.
FiniteKernel meanfield_reduction(const SpatialModel& model, int n_states);

// Smallest b with E+(eta) <= b |eta| + E-(eta) over the samples.
double stability_estimate(const PairKernel& a_minus, const PairKernel& b_plus,
                          const std::vector<Configuration>& samples);

}  // namespace jumpsim
