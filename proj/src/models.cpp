#include "jumpsim/models.hpp"

#include <algorithm>
#include <cmath>

namespace jumpsim {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kE = 2.71828182845904523536;
// Mass of the nonempty-cluster measure after the 1/e normalization.
constexpr double kClusterFactor = (kE - 1.0) / kE;
}  // namespace

TimeProfile constant_profile(double c) {
    TimeProfile p;
    p.f = [c](double) { return c; };
    p.sup_window = [c](double, double) { return c; };
    p.sup_norm = c;
    return p;
}

TimeProfile sinusoidal_profile(double base, double amp, double freq,
                               double phase) {
    if (amp < 0.0 || base < amp)
        throw std::invalid_argument("sinusoidal profile must stay nonnegative");
    TimeProfile p;
    p.f = [=](double t) { return base + amp * std::sin(freq * t + phase); };
    p.sup_window = [=](double t, double w) {
        // Exact sup on [t, t+w]: a peak inside the window, else the
        // larger endpoint.
        double a = freq * t + phase;
        double b = freq * (t + w) + phase;
        double k = std::ceil((a - kPi / 2.0) / (2.0 * kPi));
        double peak = kPi / 2.0 + 2.0 * kPi * k;
        if (peak <= b) return base + amp;
        return base + amp * std::max(std::sin(a), std::sin(b));
    };
    p.sup_norm = base + amp;
    return p;
}

double SpaceTimeField::sum_over(double t, const Configuration& eta) const {
    double tv = time(t);
    if (!space) return tv * static_cast<double>(eta.size());
    double s = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i)
        s += space(eta.point(i), eta.dim());
    return tv * s;
}

Dispersal gaussian_dispersal(int dim, double sigma) {
    Dispersal d;
    d.dim = dim;
    double norm = std::pow(2.0 * kPi * sigma * sigma, -0.5 * dim);
    double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    d.density = [norm, inv2s2](const double* u, int dd) {
        double r2 = 0.0;
        for (int k = 0; k < dd; ++k) r2 += u[k] * u[k];
        return norm * std::exp(-r2 * inv2s2);
    };
    d.direct_sampler = [dim, sigma](Rng& rng, double* out) {
        for (int k = 0; k < dim; ++k) out[k] = rng.normal(0.0, sigma);
    };
    return d;
}

namespace {

// Normalization of c / (lambda + r^2)^alpha over R^2.
double powerlaw_norm(double lambda, double alpha) {
    return (alpha - 1.0) * std::pow(lambda, alpha - 1.0) / kPi;
}

void powerlaw_draw(double lambda, double alpha, Rng& rng, double* out) {
    // Radial inverse CDF: F(r) = 1 - (lambda / (lambda + r^2))^(alpha-1).
    double u = rng.uniform();
    double r = std::sqrt(lambda * (std::pow(1.0 - u, -1.0 / (alpha - 1.0)) - 1.0));
    double theta = 2.0 * kPi * rng.uniform();
    out[0] = r * std::cos(theta);
    out[1] = r * std::sin(theta);
}

}  // namespace

Dispersal powerlaw_dispersal(double lambda, double alpha) {
    if (alpha <= 1.0) throw std::invalid_argument("alpha must exceed 1");
    Dispersal d;
    d.dim = 2;
    double c = powerlaw_norm(lambda, alpha);
    d.density = [c, lambda, alpha](const double* u, int) {
        double r2 = u[0] * u[0] + u[1] * u[1];
        return c * std::pow(lambda + r2, -alpha);
    };
    d.direct_sampler = [lambda, alpha](Rng& rng, double* out) {
        powerlaw_draw(lambda, alpha, rng, out);
    };
    return d;
}

Dispersal powerlaw_dispersal_rejection(double lambda, double alpha,
                                       double envelope_lambda) {
    if (envelope_lambda < lambda)
        throw std::invalid_argument("envelope must be flatter (lambda' >= lambda)");
    Dispersal d = powerlaw_dispersal(lambda, alpha);
    d.direct_sampler = nullptr;
    double c = powerlaw_norm(lambda, alpha);
    double ce = powerlaw_norm(envelope_lambda, alpha);
    // density / g peaks at r = 0 with value (c/ce)(lambda'/lambda)^alpha.
    double bound = (c / ce) * std::pow(envelope_lambda / lambda, alpha);
    d.envelope_density = [ce, envelope_lambda, alpha, bound](const double* u, int) {
        double r2 = u[0] * u[0] + u[1] * u[1];
        return bound * ce * std::pow(envelope_lambda + r2, -alpha);
    };
    d.envelope_sampler = [envelope_lambda, alpha](Rng& rng, double* out) {
        powerlaw_draw(envelope_lambda, alpha, rng, out);
    };
    return d;
}

void dispersal_sample(const Dispersal& d, const double* x, Rng& rng,
                      double* out, DispersalStats* stats) {
    if (d.direct_sampler) {
        d.direct_sampler(rng, out);
        if (stats) {
            ++stats->proposed;
            ++stats->accepted;
        }
    } else if (d.envelope_sampler) {
        while (true) {
            d.envelope_sampler(rng, out);
            double env = d.envelope_density(out, d.dim);
            double f = d.density(out, d.dim);
            if (stats) ++stats->proposed;
            if (f > env * (1.0 + 1e-9))
                throw EnvelopeViolated("dispersal density exceeds its envelope");
            if (rng.uniform() * env < f) {
                if (stats) ++stats->accepted;
                break;
            }
        }
    } else {
        throw SamplerUnavailable("dispersal has no sampler");
    }
    for (int k = 0; k < d.dim; ++k) out[k] += x[k];
}

namespace {

// Setup-time normalization probe. The shipped dispersal families are
// isotropic, so a radial quadrature (substitution r = s/(1-s)) is both
// cheap and accurate enough for the 1e-6 gate.
void check_dispersal_normalization(const Dispersal& d) {
    int dim = d.dim;
    double surf = 2.0 * std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim);
    std::vector<double> u(dim, 0.0);
    auto integrand = [&](double s) {
        double r = s / (1.0 - s);
        double jac = 1.0 / ((1.0 - s) * (1.0 - s));
        u[0] = r;
        return d.density(u.data(), dim) * surf * std::pow(r, dim - 1) * jac;
    };
    const int n = 20000;  // composite Simpson on [0, 1)
    double h = 1.0 / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double a = i * h, b = a + h;
        acc += h / 6.0 * (integrand(a) + 4.0 * integrand(0.5 * (a + b)) +
                          integrand(b - 1e-12));
    }
    if (std::abs(acc - 1.0) > 1e-6)
        throw std::invalid_argument("dispersal density does not integrate to 1");
}

// Child placement with the probability-zero collision rule: coincident
// offspring are resampled.
void place_child(const Dispersal& d, const double* parent, Configuration& eta,
                 Rng& rng) {
    std::vector<double> y(d.dim);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        dispersal_sample(d, parent, rng, y.data());
        if (eta.find(y.data()) == Configuration::npos) {
            eta.insert(y);
            return;
        }
    }
    throw SamplerUnavailable("could not place a distinct offspring");
}

}  // namespace

// --- BDLP ----------------------------------------------------------

double BdlpKernel::death_rate(double t, const Configuration& eta) const {
    return p_.m.sum_over(t, eta) + eta.interaction_energy(p_.a_minus);
}

double BdlpKernel::birth_rate(double t, const Configuration& eta) const {
    return p_.lam.sum_over(t, eta);
}

double BdlpKernel::total_rate(double t, const Configuration& eta) const {
    return death_rate(t, eta) + birth_rate(t, eta);
}

double BdlpKernel::rate_bound(double t, const Configuration& eta,
                              double window) const {
    double n = static_cast<double>(eta.size());
    return n * (p_.m.sup_window(t, window) + p_.lam.sup_window(t, window)) +
           eta.interaction_energy(p_.a_minus);
}

std::vector<std::pair<int, double>> BdlpKernel::count_jump_rates(
    double t, const Configuration& eta) const {
    std::vector<std::pair<int, double>> out;
    double d = death_rate(t, eta);
    double b = birth_rate(t, eta);
    if (d > 0.0) out.emplace_back(-1, d);
    if (b > 0.0) out.emplace_back(+1, b);
    return out;
}

Configuration BdlpKernel::sample_jump(double t, const Configuration& eta,
                                      Rng& rng) const {
    std::size_t n = eta.size();
    std::vector<double> w(2 * n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = eta.point(i);
        w[2 * i] = p_.m(t, x, p_.dim) + eta.pair_sum(p_.a_minus, x, i);
        w[2 * i + 1] = p_.lam(t, x, p_.dim);
        total += w[2 * i] + w[2 * i + 1];
    }
    std::size_t pick = rng.categorical(2 * n, total,
                                       [&](std::size_t k) { return w[k]; });
    Configuration next = eta;
    if (pick % 2 == 0) {
        next.remove_index(pick / 2);
    } else {
        place_child(p_.a_plus, eta.point(pick / 2), next, rng);
    }
    return next;
}

// --- DL ------------------------------------------------------------

double DlKernel::death_rate(double t, const Configuration& eta) const {
    return p_.m(t) * static_cast<double>(eta.size()) +
           eta.interaction_energy(p_.a_minus);
}

double DlKernel::birth_rate(double t, const Configuration& eta) const {
    return p_.lam(t) * static_cast<double>(eta.size()) +
           eta.interaction_energy(p_.b_plus);
}

double DlKernel::total_rate(double t, const Configuration& eta) const {
    return death_rate(t, eta) + birth_rate(t, eta);
}

double DlKernel::rate_bound(double t, const Configuration& eta,
                            double window) const {
    double n = static_cast<double>(eta.size());
    return n * (p_.m.sup_window(t, window) + p_.lam.sup_window(t, window)) +
           eta.interaction_energy(p_.a_minus) +
           eta.interaction_energy(p_.b_plus);
}

std::vector<std::pair<int, double>> DlKernel::count_jump_rates(
    double t, const Configuration& eta) const {
    std::vector<std::pair<int, double>> out;
    double d = death_rate(t, eta);
    double b = birth_rate(t, eta);
    if (d > 0.0) out.emplace_back(-1, d);
    if (b > 0.0) out.emplace_back(+1, b);
    return out;
}

Configuration DlKernel::sample_jump(double t, const Configuration& eta,
                                    Rng& rng) const {
    std::size_t n = eta.size();
    std::vector<double> w(2 * n);
    double total = 0.0;
    double mt = p_.m(t);
    double lt = p_.lam(t);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = eta.point(i);
        w[2 * i] = mt + eta.pair_sum(p_.a_minus, x, i);
        w[2 * i + 1] = lt + eta.pair_sum(p_.b_plus, x, i);
        total += w[2 * i] + w[2 * i + 1];
    }
    std::size_t pick = rng.categorical(2 * n, total,
                                       [&](std::size_t k) { return w[k]; });
    Configuration next = eta;
    if (pick % 2 == 0) {
        next.remove_index(pick / 2);
    } else {
        place_child(p_.a_plus, eta.point(pick / 2), next, rng);
    }
    return next;
}

// --- GDL -----------------------------------------------------------

double gdl_cluster_pmf(int k) {
    if (k < 1) return 0.0;
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    return 1.0 / (fact * (kE - 1.0));
}

int sample_cluster_size(Rng& rng) {
    double u = rng.uniform();
    double cum = 0.0;
    for (int k = 1; k <= kGdlClusterCut; ++k) {
        cum += gdl_cluster_pmf(k);
        if (u < cum) return k;
    }
    return kGdlClusterCut;
}

Configuration gdl_sample_cluster(const GdlParams& p, double t, const double* x,
                                 Rng& rng) {
    (void)t;
    int k = sample_cluster_size(rng);
    Configuration zeta(p.dim);
    for (int i = 0; i < k; ++i) place_child(p.a_plus, x, zeta, rng);
    return zeta;
}

GdlKernel::GdlKernel(GdlParams p) : p_(std::move(p)) {}

void validate_gdl_hypothesis(const GdlParams& p, double t_max) {
    // b+(t, u) <= a-(t, u) sampled on a radial grid per time node.
    double r_max = std::max(p.a_minus.cutoff, p.b_plus.cutoff);
    std::vector<double> u(p.dim, 0.0);
    for (int ti = 0; ti <= 20; ++ti) {
        double t = t_max * ti / 20.0;
        double as = p.a_scale(t);
        double bs = p.b_scale(t);
        for (int ri = 0; ri <= 200; ++ri) {
            u[0] = r_max * ri / 200.0;
            double av = as * p.a_minus(u.data(), p.dim);
            double bv = bs * p.b_plus(u.data(), p.dim);
            if (bv > av + 1e-12)
                throw std::invalid_argument(
                    "facilitation b+ exceeds competition a-");
        }
    }
}

double GdlKernel::death_rate(double t, const Configuration& eta) const {
    return p_.m.sum_over(t, eta) +
           p_.a_scale(t) * eta.interaction_energy(p_.a_minus);
}

double GdlKernel::birth_rate(double t, const Configuration& eta) const {
    return kClusterFactor * (p_.lam.sum_over(t, eta) +
                             p_.b_scale(t) * eta.interaction_energy(p_.b_plus));
}

double GdlKernel::total_rate(double t, const Configuration& eta) const {
    return death_rate(t, eta) + birth_rate(t, eta);
}

double GdlKernel::rate_bound(double t, const Configuration& eta,
                             double window) const {
    double n = static_cast<double>(eta.size());
    return n * (p_.m.sup_window(t, window) +
                kClusterFactor * p_.lam.sup_window(t, window)) +
           p_.a_scale.sup_window(t, window) *
               eta.interaction_energy(p_.a_minus) +
           kClusterFactor * p_.b_scale.sup_window(t, window) *
               eta.interaction_energy(p_.b_plus);
}

std::vector<std::pair<int, double>> GdlKernel::count_jump_rates(
    double t, const Configuration& eta) const {
    std::vector<std::pair<int, double>> out;
    double d = death_rate(t, eta);
    double c = birth_rate(t, eta);
    if (d > 0.0) out.emplace_back(-1, d);
    if (c > 0.0)
        for (int k = 1; k <= kGdlClusterCut; ++k)
            out.emplace_back(k, c * gdl_cluster_pmf(k));
    return out;
}

Configuration GdlKernel::sample_jump(double t, const Configuration& eta,
                                     Rng& rng) const {
    std::size_t n = eta.size();
    std::vector<double> w(2 * n);
    double total = 0.0;
    double as = p_.a_scale(t);
    double bs = p_.b_scale(t);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = eta.point(i);
        w[2 * i] = p_.m(t, x, p_.dim) + as * eta.pair_sum(p_.a_minus, x, i);
        w[2 * i + 1] = kClusterFactor *
                       (p_.lam(t, x, p_.dim) + bs * eta.pair_sum(p_.b_plus, x, i));
        total += w[2 * i] + w[2 * i + 1];
    }
    std::size_t pick = rng.categorical(2 * n, total,
                                       [&](std::size_t k) { return w[k]; });
    Configuration next = eta;
    if (pick % 2 == 0) {
        next.remove_index(pick / 2);
    } else {
        int k = sample_cluster_size(rng);
        const double* parent = eta.point(pick / 2);
        for (int i = 0; i < k; ++i) place_child(p_.a_plus, parent, next, rng);
    }
    return next;
}

// --- Model handle --------------------------------------------------

SpatialModel make_bdlp(BdlpParams p) {
    check_dispersal_normalization(p.a_plus);
    SpatialModel m;
    m.kind = ModelKind::bdlp;
    m.dim = p.dim;
    m.kernel = std::make_shared<BdlpKernel>(std::move(p));
    return m;
}

SpatialModel make_dl(DlParams p) {
    check_dispersal_normalization(p.a_plus);
    SpatialModel m;
    m.kind = ModelKind::dl;
    m.dim = p.dim;
    m.kernel = std::make_shared<DlKernel>(std::move(p));
    return m;
}

SpatialModel make_gdl(GdlParams p) {
    check_dispersal_normalization(p.a_plus);
    validate_gdl_hypothesis(p, 10.0);
    SpatialModel m;
    m.kind = ModelKind::gdl;
    m.dim = p.dim;
    m.kernel = std::make_shared<GdlKernel>(std::move(p));
    return m;
}

double SpatialModel::lyapunov_drift(double t, const Configuration& eta) const {
    double n = static_cast<double>(eta.size());
    if (kind == ModelKind::gdl) {
        const auto& k = dynamic_cast<const GdlKernel&>(*kernel);
        // E[dV] over the cluster law: E[k] = e/(e-1), E[k^2] = 2e/(e-1).
        return k.birth_rate(t, eta) * (2.0 * n + 3.0) * kE / (kE - 1.0) -
               k.death_rate(t, eta) * 2.0 * n;
    }
    double birth, death;
    if (kind == ModelKind::bdlp) {
        const auto& k = dynamic_cast<const BdlpKernel&>(*kernel);
        birth = k.birth_rate(t, eta);
        death = k.death_rate(t, eta);
    } else {
        const auto& k = dynamic_cast<const DlKernel&>(*kernel);
        birth = k.birth_rate(t, eta);
        death = k.death_rate(t, eta);
    }
    return birth * (2.0 * n + 2.0) - death * 2.0 * n;
}

double SpatialModel::condition_B_constant() const {
    switch (kind) {
        case ModelKind::bdlp: {
            const auto& p = dynamic_cast<const BdlpKernel&>(*kernel).params();
            return std::max(p.lam.sup_norm(),
                            2.0 * p.a_minus.sup + 2.0 * p.lam.sup_norm() +
                                2.0 * p.m.sup_norm());
        }
        case ModelKind::dl: {
            const auto& p = dynamic_cast<const DlKernel&>(*kernel).params();
            return 2.0 * p.lam.sup_norm + 2.0 * p.stability_b +
                   2.0 * p.a_minus.sup;
        }
        case ModelKind::gdl: {
            const auto& p = dynamic_cast<const GdlKernel&>(*kernel).params();
            return 3.0 * p.lam.sup_norm() +
                   3.0 * p.b_scale.sup_norm * p.b_plus.sup;
        }
    }
    return 0.0;
}

double SpatialModel::condition_D_constant(double) const {
    switch (kind) {
        case ModelKind::bdlp: {
            const auto& p = dynamic_cast<const BdlpKernel&>(*kernel).params();
            return std::max(p.m.sup_norm() + p.lam.sup_norm(), p.a_minus.sup);
        }
        case ModelKind::dl: {
            const auto& p = dynamic_cast<const DlKernel&>(*kernel).params();
            return std::max(p.m.sup_norm + p.lam.sup_norm,
                            p.a_minus.sup + p.b_plus.sup);
        }
        case ModelKind::gdl: {
            const auto& p = dynamic_cast<const GdlKernel&>(*kernel).params();
            return std::max(
                p.m.sup_norm() + p.lam.sup_norm(),
                p.a_scale.sup_norm * p.a_minus.sup +
                    p.b_scale.sup_norm * p.b_plus.sup);
        }
    }
    return 0.0;
}

FiniteKernel meanfield_reduction(const SpatialModel& model, int n_states) {
    TimeProfile m, lam;
    bool clusters = false;
    switch (model.kind) {
        case ModelKind::bdlp: {
            const auto& p = dynamic_cast<const BdlpKernel&>(*model.kernel).params();
            if (p.a_minus.sup != 0.0 || p.m.space || p.lam.space)
                throw NotReducible("bdlp model is interacting or inhomogeneous");
            m = p.m.time;
            lam = p.lam.time;
            break;
        }
        case ModelKind::dl: {
            const auto& p = dynamic_cast<const DlKernel&>(*model.kernel).params();
            if (p.a_minus.sup != 0.0 || p.b_plus.sup != 0.0)
                throw NotReducible("dl model is interacting");
            m = p.m;
            lam = p.lam;
            break;
        }
        case ModelKind::gdl: {
            const auto& p = dynamic_cast<const GdlKernel&>(*model.kernel).params();
            if (p.a_minus.sup * p.a_scale.sup_norm != 0.0 ||
                p.b_plus.sup * p.b_scale.sup_norm != 0.0 || p.m.space ||
                p.lam.space)
                throw NotReducible("gdl model is interacting or inhomogeneous");
            m = p.m.time;
            lam = p.lam.time;
            clusters = true;
            break;
        }
    }
    FiniteKernel k;
    k.n_states = n_states;
    k.name = "meanfield";
    k.targets.resize(n_states);
    for (int i = 0; i < n_states; ++i) {
        if (i > 0) k.targets[i].push_back(i - 1);
        if (!clusters) {
            if (i + 1 < n_states) k.targets[i].push_back(i + 1);
        } else {
            for (int kk = 1; kk <= kGdlClusterCut && i + kk < n_states; ++kk)
                k.targets[i].push_back(i + kk);
        }
    }
    double birth_factor = clusters ? kClusterFactor : 1.0;
    k.q_bound = [m, lam, birth_factor](double t, int i, double w) {
        return i * (m.sup_window(t, w) + birth_factor * lam.sup_window(t, w));
    };
    if (!clusters) {
        k.rate = [m, lam, n_states](double t, int i, int j) {
            if (j == i - 1) return i * m(t);
            if (j == i + 1 && j < n_states) return i * lam(t);
            return 0.0;
        };
        k.escape_rate = [lam, n_states](double t, int i) {
            return i + 1 == n_states ? i * lam(t) : 0.0;
        };
    } else {
        k.rate = [m, lam, n_states](double t, int i, int j) {
            if (j == i - 1) return i * m(t);
            if (j > i && j < n_states) {
                // cluster of size j - i, rate n * lambda * (1/e) / k!
                double fact = 1.0;
                for (int v = 2; v <= j - i; ++v) fact *= v;
                return i * lam(t) / (kE * fact);
            }
            return 0.0;
        };
        k.escape_rate = [lam, n_states](double t, int i) {
            // mass of clusters overshooting the truncation
            double inside = 0.0;
            for (int kk = 1; kk <= kGdlClusterCut && i + kk < n_states; ++kk)
                inside += gdl_cluster_pmf(kk);
            return i * lam(t) * kClusterFactor * (1.0 - inside);
        };
    }
    return k;
}

double stability_estimate(const PairKernel& a_minus, const PairKernel& b_plus,
                          const std::vector<Configuration>& samples) {
    if (samples.empty())
        throw std::invalid_argument("stability estimate needs samples");
    double worst = 0.0;
    for (const auto& eta : samples) {
        if (eta.empty()) continue;
        double ep = eta.interaction_energy(b_plus);
        double em = eta.interaction_energy(a_minus);
        worst = std::max(worst, (ep - em) / static_cast<double>(eta.size()));
    }
    return worst;
}

}  // namespace jumpsim
