#include "jumpsim/configuration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace jumpsim {

namespace {

double dist2(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) {
        double u = a[k] - b[k];
        s += u * u;
    }
    return s;
}

}  // namespace

PairKernel gaussian_kernel(int dim, double amplitude, double sigma) {
    PairKernel k;
    k.sup = amplitude;
    // Radius where the value drops below 1e-10 relative.
    k.cutoff = sigma * std::sqrt(2.0 * std::log(1e10));
    double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    k.f = [amplitude, inv2s2](const double* u, int d) {
        double r2 = 0.0;
        for (int i = 0; i < d; ++i) r2 += u[i] * u[i];
        return amplitude * std::exp(-r2 * inv2s2);
    };
    (void)dim;
    return k;
}

PairKernel indicator_kernel(double amplitude, double radius) {
    PairKernel k;
    k.sup = amplitude;
    k.cutoff = radius;
    double r2max = radius * radius;
    k.f = [amplitude, r2max](const double* u, int d) {
        double r2 = 0.0;
        for (int i = 0; i < d; ++i) r2 += u[i] * u[i];
        return r2 <= r2max ? amplitude : 0.0;
    };
    return k;
}

PairKernel constant_kernel(double amplitude, double radius) {
    return indicator_kernel(amplitude, radius);
}

Configuration::Configuration(int dim) : dim_(dim) {}

Configuration::Configuration(int dim, const std::vector<std::vector<double>>& pts)
    : dim_(dim) {
    for (const auto& p : pts) insert(p);
}

std::vector<double> Configuration::point_vec(std::size_t i) const {
    const double* p = point(i);
    return std::vector<double>(p, p + dim_);
}

std::size_t Configuration::find(const double* x) const {
    double tol2 = kPointTolerance * kPointTolerance;
    for (std::size_t i = 0; i < size(); ++i) {
        if (dist2(point(i), x, dim_) <= tol2) return i;
    }
    return npos;
}

void Configuration::insert(const double* x) {
    if (find(x) != npos) throw DuplicatePoint("point already present");
    coords_.insert(coords_.end(), x, x + dim_);
    if (cell_ > 0.0) grid_insert(size() - 1);
}

void Configuration::insert(const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != dim_)
        throw std::invalid_argument("point dimension mismatch");
    insert(x.data());
}

void Configuration::remove(const double* x) {
    std::size_t i = find(x);
    if (i == npos) throw MissingPoint("point not present");
    remove_index(i);
}

void Configuration::remove_index(std::size_t i) {
    std::size_t n = size();
    if (i >= n) throw MissingPoint("index out of range");
    if (cell_ > 0.0) {
        grid_erase(i);
        if (i + 1 != n) grid_erase(n - 1);
    }
    if (i + 1 != n) {
        std::copy(coords_.end() - dim_, coords_.end(),
                  coords_.begin() + i * dim_);
    }
    coords_.resize(coords_.size() - dim_);
    if (cell_ > 0.0 && i < size()) grid_insert(i);
}

bool Configuration::set_equal(const Configuration& other) const {
    if (dim_ != other.dim_ || size() != other.size()) return false;
    std::vector<bool> used(size(), false);
    double tol2 = kPointTolerance * kPointTolerance;
    for (std::size_t i = 0; i < size(); ++i) {
        bool matched = false;
        for (std::size_t j = 0; j < size(); ++j) {
            if (!used[j] && dist2(point(i), other.point(j), dim_) <= tol2) {
                used[j] = true;
                matched = true;
                break;
            }
        }
        if (!matched) return false;
    }
    return true;
}

std::uint64_t Configuration::cell_key(const double* x) const {
    // 21 bits per axis, offset to keep coordinates positive.
    std::uint64_t key = 1469598103934665603ULL;
    for (int k = 0; k < dim_; ++k) {
        auto c = static_cast<std::int64_t>(std::floor(x[k] / cell_)) + (1 << 20);
        key ^= static_cast<std::uint64_t>(c);
        key *= 1099511628211ULL;
    }
    return key;
}

void Configuration::grid_insert(std::size_t i) const {
    grid_[cell_key(point(i))].push_back(static_cast<std::uint32_t>(i));
}

void Configuration::grid_erase(std::size_t i) const {
    auto it = grid_.find(cell_key(point(i)));
    if (it == grid_.end()) return;
    auto& v = it->second;
    v.erase(std::remove(v.begin(), v.end(), static_cast<std::uint32_t>(i)),
            v.end());
    if (v.empty()) grid_.erase(it);
}

void Configuration::rebuild_grid(double cell) const {
    cell_ = cell;
    grid_.clear();
    for (std::size_t i = 0; i < size(); ++i) grid_insert(i);
}

double Configuration::pair_sum_brute(const PairKernel& a, const double* x,
                                     std::size_t self) const {
    double s = 0.0;
    std::vector<double> u(dim_);
    double r2max = a.cutoff > 0.0 ? a.cutoff * a.cutoff
                                  : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < size(); ++j) {
        if (j == self) continue;
        const double* y = point(j);
        double r2 = 0.0;
        for (int k = 0; k < dim_; ++k) {
            u[k] = x[k] - y[k];
            r2 += u[k] * u[k];
        }
        if (r2 <= r2max) s += a(u.data(), dim_);
    }
    return s;
}

double Configuration::pair_sum(const PairKernel& a, const double* x,
                               std::size_t self) const {
    if (a.cutoff <= 0.0) return pair_sum_brute(a, x, self);
    if (cell_ != a.cutoff) rebuild_grid(a.cutoff);
    double s = 0.0;
    double u[16];
    double r2max = a.cutoff * a.cutoff;
    // Enumerate neighbor cells of x; dim is small at desk scale.
    std::vector<std::int64_t> base(dim_), off(dim_, -1);
    for (int k = 0; k < dim_; ++k)
        base[k] = static_cast<std::int64_t>(std::floor(x[k] / cell_));
    while (true) {
        std::uint64_t key = 1469598103934665603ULL;
        for (int k = 0; k < dim_; ++k) {
            key ^= static_cast<std::uint64_t>(base[k] + off[k] + (1 << 20));
            key *= 1099511628211ULL;
        }
        auto it = grid_.find(key);
        if (it != grid_.end()) {
            for (std::uint32_t j : it->second) {
                if (j == self) continue;
                const double* y = point(j);
                double r2 = 0.0;
                for (int k = 0; k < dim_; ++k) {
                    u[k] = x[k] - y[k];
                    r2 += u[k] * u[k];
                }
                if (r2 <= r2max) s += a(u, dim_);
            }
        }
        int k = 0;
        for (; k < dim_; ++k) {
            if (++off[k] <= 1) break;
            off[k] = -1;
        }
        if (k == dim_) break;
    }
    return s;
}

double Configuration::interaction_energy(const PairKernel& a) const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += pair_sum(a, point(i), i);
    return s;
}

double Configuration::interaction_energy_brute(const PairKernel& a) const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
        s += pair_sum_brute(a, point(i), i);
    return s;
}

std::string Configuration::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < size(); ++i) {
        nlohmann::json pt = nlohmann::json::array();
        for (int k = 0; k < dim_; ++k) pt.push_back(point(i)[k]);
        arr.push_back(pt);
    }
    return arr.dump();
}

Configuration Configuration::from_json(int dim, const std::string& text) {
    auto arr = nlohmann::json::parse(text);
    Configuration c(dim);
    for (const auto& pt : arr) {
        std::vector<double> x;
        for (const auto& v : pt) x.push_back(v.get<double>());
        c.insert(x);
    }
    return c;
}

std::string Configuration::to_csv() const {
    std::ostringstream out;
    for (int k = 0; k < dim_; ++k) out << (k ? "," : "") << "x" << (k + 1);
    out << "\n";
    for (std::size_t i = 0; i < size(); ++i) {
        for (int k = 0; k < dim_; ++k) {
            if (k) out << ",";
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", point(i)[k]);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

double e_lambda(const std::function<double(const double*, int)>& f,
                const Configuration& eta) {
    double p = 1.0;
    for (std::size_t i = 0; i < eta.size(); ++i) p *= f(eta.point(i), eta.dim());
    return p;
}

IntensityFunction uniform_box_intensity(int dim, double lo, double hi,
                                        double total_mass) {
    IntensityFunction f;
    f.dim = dim;
    f.total_mass = total_mass;
    double vol = std::pow(hi - lo, dim);
    double level = total_mass / vol;
    f.density = [lo, hi, level](const double* x, int d) {
        for (int k = 0; k < d; ++k)
            if (x[k] < lo || x[k] > hi) return 0.0;
        return level;
    };
    f.direct_sampler = [dim, lo, hi](Rng& rng, double* out) {
        for (int k = 0; k < dim; ++k) out[k] = rng.uniform(lo, hi);
    };
    return f;
}

Configuration sample_poisson_pp(const IntensityFunction& intensity, Rng& rng) {
    if (!intensity.direct_sampler && !intensity.envelope_sampler)
        throw SamplerUnavailable("no position sampler configured");
    Configuration c(intensity.dim);
    long n = rng.poisson(intensity.total_mass);
    std::vector<double> x(intensity.dim);
    for (long i = 0; i < n; ++i) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 100000)
                throw SamplerUnavailable("rejection sampler not terminating");
            if (intensity.direct_sampler) {
                intensity.direct_sampler(rng, x.data());
            } else {
                intensity.envelope_sampler(rng, x.data());
                double g = intensity.envelope_density(x.data(), intensity.dim);
                double f = intensity.density(x.data(), intensity.dim);
                if (rng.uniform() * intensity.envelope_bound * g > f) continue;
            }
            if (c.find(x.data()) == Configuration::npos) break;
            // Exact collisions have probability zero; resample.
        }
        c.insert(x);
    }
    return c;
}

SubsetSumCheck subset_sum_check(
    const std::function<double(const double*, int)>& g,
    const std::function<double(const double*, int)>& h,
    const Configuration& eta) {
    std::size_t n = eta.size();
    if (n > 12) throw TooLarge("subset enumeration capped at 12 points");
    std::vector<double> gv(n), hv(n);
    for (std::size_t i = 0; i < n; ++i) {
        gv[i] = g(eta.point(i), eta.dim());
        hv[i] = h(eta.point(i), eta.dim());
    }
    double lhs = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
        double term = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            term *= (mask >> i) & 1 ? gv[i] : hv[i];
        lhs += term;
    }
    double rhs = 1.0;
    for (std::size_t i = 0; i < n; ++i) rhs *= gv[i] + hv[i];
    return {lhs, rhs};
}

}  // namespace jumpsim
