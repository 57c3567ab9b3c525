#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "jumpsim/rng.hpp"

namespace jumpsim {

struct DuplicatePoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingPoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SamplerUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two points closer than this (euclidean) count as the same point.
inline constexpr double kPointTolerance = 1e-12;

// Pairwise interaction with a hard or effective cutoff radius. Beyond
// `cutoff` the kernel is treated as zero; kernels without compact
// support must declare the radius where their relative tail mass is
// below 1e-10.
struct PairKernel {
    std::function<double(const double* u, int dim)> f;  // displacement x - y
    double cutoff = 0.0;
    double sup = 0.0;  // sup norm, used for rate envelopes

    double operator()(const double* u, int dim) const { return f(u, dim); }
};

PairKernel gaussian_kernel(int dim, double amplitude, double sigma);
PairKernel indicator_kernel(double amplitude, double radius);
PairKernel constant_kernel(double amplitude, double radius);

// A finite point configuration in R^d with a cell-grid spatial index.
// Value-like: copies are independent states.
class Configuration {
public:
    explicit Configuration(int dim = 2);
    Configuration(int dim, const std::vector<std::vector<double>>& pts);

    int dim() const { return dim_; }
    std::size_t size() const { return coords_.size() / dim_; }
    bool empty() const { return coords_.empty(); }

    const double* point(std::size_t i) const { return coords_.data() + i * dim_; }
    std::vector<double> point_vec(std::size_t i) const;

    void insert(const double* x);
    void insert(const std::vector<double>& x);
    // Removes the point matching x within tolerance.
    void remove(const double* x);
    void remove_index(std::size_t i);

    // Index of the point equal to x within tolerance, or npos.
    std::size_t find(const double* x) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    // Set equality within the distinctness tolerance, insertion-order
    // independent.
    bool set_equal(const Configuration& other) const;

    // sum_{y in eta, y != x-slot} a(x - y), accelerated by the cell
    // grid; `self` (npos for external x) excludes that point.
    double pair_sum(const PairKernel& a, const double* x,
                    std::size_t self = npos) const;
    double pair_sum_brute(const PairKernel& a, const double* x,
                          std::size_t self = npos) const;

    // Full double sum sum_x sum_{y != x} a(x - y).
    double interaction_energy(const PairKernel& a) const;
    double interaction_energy_brute(const PairKernel& a) const;

    std::string to_json() const;
    static Configuration from_json(int dim, const std::string& text);
    std::string to_csv() const;

private:
    void rebuild_grid(double cell) const;
    std::uint64_t cell_key(const double* x) const;
    void grid_insert(std::size_t i) const;
    void grid_erase(std::size_t i) const;

    int dim_;
    std::vector<double> coords_;

    // Lazy index; keyed by the kernel cutoff in use.
    mutable double cell_ = 0.0;
    mutable std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid_;
};

inline double lyapunov_V(const Configuration& c) {
    double n = static_cast<double>(c.size());
    return n + n * n;
}
inline double lyapunov_V_count(double n) { return n + n * n; }

// Lebesgue-Poisson exponential: prod_{x in eta} f(x); empty product 1.
double e_lambda(const std::function<double(const double*, int)>& f,
                const Configuration& eta);

// Intensity measure f(x)dx with finite total mass. Sampling uses the
// direct sampler when present, otherwise rejection under the envelope.
struct IntensityFunction {
    int dim = 2;
    std::function<double(const double*, int)> density;
    double total_mass = 0.0;
    // Draws a position with law density/total_mass.
    std::function<void(Rng&, double*)> direct_sampler;
    // Rejection fallback: envelope density g (normalized), sampler for
    // g and a constant M with density <= M * g * total_mass-ish scale.
    std::function<double(const double*, int)> envelope_density;
    std::function<void(Rng&, double*)> envelope_sampler;
    double envelope_bound = 0.0;
};

IntensityFunction uniform_box_intensity(int dim, double lo, double hi,
                                        double total_mass);

// Poisson point process with the given intensity: count ~
// Poisson(total_mass), positions i.i.d. density/total_mass.
Configuration sample_poisson_pp(const IntensityFunction& intensity, Rng& rng);

// Both sides of the sum-integral identity for product-form
// G(xi, eta\xi) = e_lambda(g; xi) e_lambda(h; eta\xi): the left side by
// explicit subset enumeration, the right side by the closed-form
// product e_lambda(g + h; eta). Enumeration is capped at |eta| <= 12.
struct SubsetSumCheck {
    double lhs;
    double rhs;
};
SubsetSumCheck subset_sum_check(
    const std::function<double(const double*, int)>& g,
    const std::function<double(const double*, int)>& h,
    const Configuration& eta);

}  // namespace jumpsim
