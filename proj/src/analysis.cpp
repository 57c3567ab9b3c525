#include "jumpsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace jumpsim {

std::string VerificationReport::to_json() const {
    nlohmann::json j;
    j["condition"] = condition;
    j["constant"] = constant;
    j["worst_violation"] = worst_violation;
    j["configs_tested"] = configs_tested;
    j["pass"] = pass;
    j["detail"] = detail;
    return j.dump();
}

std::string reports_to_json(const std::vector<VerificationReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports)
        arr.push_back(nlohmann::json::parse(r.to_json()));
    return arr.dump(2);
}

std::string reports_to_table(const std::vector<VerificationReport>& reports) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "condition" << std::setw(14)
        << "constant" << std::setw(16) << "worst_viol" << std::setw(9)
        << "configs" << std::setw(6) << "pass"
        << "detail\n";
    for (const auto& r : reports) {
        out << std::left << std::setw(10) << r.condition << std::setw(14)
            << std::setprecision(6) << r.constant << std::setw(16)
            << r.worst_violation << std::setw(9) << r.configs_tested
            << std::setw(6) << (r.pass ? "yes" : "NO") << r.detail << "\n";
    }
    return out.str();
}

std::vector<Configuration> verification_configs(int dim, std::uint64_t seed,
                                                int per_family) {
    std::vector<Configuration> out;
    out.emplace_back(dim);  // empty
    Rng rng = Rng::stream(seed, 0xC0FF);
    {
        Configuration single(dim);
        std::vector<double> x(dim, 0.25);
        single.insert(x);
        out.push_back(std::move(single));
    }
    struct Fam {
        double mass, box;
    };
    // Poisson families at several intensities and extents.
    for (Fam fam : {Fam{2.0, 1.0}, Fam{10.0, 2.0}, Fam{40.0, 4.0}}) {
        auto intensity =
            uniform_box_intensity(dim, -fam.box, fam.box, fam.mass);
        for (int r = 0; r < per_family; ++r) {
            Configuration eta = sample_poisson_pp(intensity, rng);
            if (eta.size() <= 100) out.push_back(std::move(eta));
        }
    }
    // Adversarial tight clusters: many points within a radius far below
    // any kernel length scale, stressing the pair sums.
    for (int r = 0; r < per_family; ++r) {
        int n = 2 + static_cast<int>(rng.uniform() * 29.0);
        int n_clusters = 1 + static_cast<int>(rng.uniform() * 2.0);
        Configuration eta(dim);
        std::vector<double> x(dim);
        for (int c = 0; c < n_clusters; ++c) {
            std::vector<double> center(dim);
            for (int k = 0; k < dim; ++k) center[k] = rng.uniform(-2.0, 2.0);
            for (int i = 0; i < n; ++i) {
                do {
                    for (int k = 0; k < dim; ++k)
                        x[k] = center[k] + rng.normal(0.0, 1e-3);
                } while (eta.find(x.data()) != Configuration::npos);
                eta.insert(x);
            }
        }
        out.push_back(std::move(eta));
    }
    return out;
}

VerificationReport check_condition_B(const SpatialModel& model,
                                     const std::vector<double>& t_grid,
                                     const std::vector<Configuration>& configs,
                                     std::optional<double> c_override) {
    VerificationReport rep;
    rep.condition = "B";
    rep.constant = c_override.value_or(model.condition_B_constant());
    rep.configs_tested = static_cast<int>(configs.size());
    double worst = -std::numeric_limits<double>::infinity();
    for (double t : t_grid) {
        for (const auto& eta : configs) {
            double v = lyapunov_V(eta);
            double viol = model.lyapunov_drift(t, eta) - rep.constant * v;
            worst = std::max(worst, viol);
        }
    }
    rep.worst_violation = worst;
    rep.pass = worst <= 1e-9;
    rep.detail = "drift - c*V over " + std::to_string(t_grid.size()) +
                 " time nodes";
    return rep;
}

VerificationReport check_condition_D(const SpatialModel& model, double T,
                                     const std::vector<Configuration>& configs,
                                     std::optional<double> a_override,
                                     int t_points) {
    VerificationReport rep;
    rep.condition = "D";
    rep.constant = a_override.value_or(model.condition_D_constant(T));
    rep.configs_tested = static_cast<int>(configs.size());
    double worst = -std::numeric_limits<double>::infinity();
    for (int g = 0; g <= t_points; ++g) {
        double t = T * g / t_points;
        for (const auto& eta : configs) {
            double viol = model.kernel->total_rate(t, eta) -
                          rep.constant * lyapunov_V(eta);
            worst = std::max(worst, viol);
        }
    }
    rep.worst_violation = worst;
    rep.pass = worst <= 1e-9;
    rep.detail = "q - a(T)*V, sup over [0,T] grid";
    return rep;
}

VerificationReport check_condition_E(const SpatialModel& model, double T,
                                     const std::vector<Configuration>& configs,
                                     int t_points) {
    VerificationReport rep;
    rep.condition = "E";
    rep.configs_tested = static_cast<int>(configs.size());
    double b_hat = std::numeric_limits<double>::infinity();
    int used = 0;
    for (const auto& eta : configs) {
        double qT = model.kernel->total_rate(T, eta);
        if (qT <= 0.0) continue;
        ++used;
        for (int g = 0; g <= t_points; ++g) {
            double t = T * g / t_points;
            b_hat = std::min(b_hat, model.kernel->total_rate(t, eta) / qT);
        }
    }
    if (used == 0) b_hat = 1.0;  // vacuously comparable
    rep.constant = b_hat;
    rep.worst_violation = -b_hat;  // sign convention: pass iff <= 0 strictly
    rep.pass = b_hat > 1e-6;
    rep.detail = "b(T) = inf q(t)/q(T); " + std::to_string(used) +
                 " configs with q(T) > 0";
    return rep;
}

GrowthTestResult expectation_growth_test(const SpatialModel& model,
                                         const Configuration& eta0, double s,
                                         double t, std::size_t replicates,
                                         std::uint64_t seed, int workers) {
    GrowthTestResult r;
    double c = model.condition_B_constant();
    r.bound = lyapunov_V(eta0) * std::exp(c * (t - s));
    auto stats = ensemble_expectation<Configuration>(
        *model.kernel, eta0, s, t,
        [](const Configuration& eta) { return lyapunov_V(eta); }, replicates,
        seed, {}, workers);
    r.empirical = stats.mean;
    r.stderror = stats.stderror;
    r.capped = stats.capped;
    r.pass = r.capped == 0 && r.empirical <= r.bound + 3.0 * r.stderror;
    return r;
}

std::vector<DoobRow> doob_bound_test(const SpatialModel& model,
                                     const Configuration& eta0, double s,
                                     double T,
                                     const std::vector<double>& thresholds,
                                     std::size_t replicates,
                                     std::uint64_t seed, int workers) {
    double c = model.condition_B_constant();
    double numerator = lyapunov_V(eta0) * std::exp(c * (T - s));
    SimOptions opts;
    opts.horizon = T - s;
    auto sups = run_replicates<double>(
        replicates, seed, workers, [&](std::size_t, Rng& rng) {
            auto traj = simulate_path(*model.kernel, eta0, s, opts, rng);
            double sup = lyapunov_V(traj.start_state);
            for (const auto& [tt, state] : traj.events)
                sup = std::max(sup, lyapunov_V(state));
            return sup;
        });
    std::vector<DoobRow> rows;
    for (double a : thresholds) {
        DoobRow row;
        row.threshold = a;
        std::size_t hits = 0;
        for (double sup : sups)
            if (sup >= a) ++hits;
        row.empirical = static_cast<double>(hits) / replicates;
        row.stderror = std::sqrt(row.empirical * (1.0 - row.empirical) /
                                 replicates);
        row.bound = std::min(1.0, numerator / a);
        row.pass = row.empirical <= row.bound + 3.0 * row.stderror;
        rows.push_back(row);
    }
    return rows;
}

MomentBoundResult moment_bound_test(const SpatialModel& model,
                                    const Configuration& eta0, double s,
                                    double t, std::size_t replicates,
                                    std::uint64_t seed, int workers) {
    if (model.kind != ModelKind::dl)
        throw std::invalid_argument("moment bounds are stated for the DL model");
    const auto& p = dynamic_cast<const DlKernel&>(*model.kernel).params();
    double b = p.stability_b;
    double bplus = p.b_plus.sup;
    // Smooth coefficient integrals by composite Simpson.
    auto integral = [&](auto&& f) {
        const int n = 2000;
        double h = (t - s) / n;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double a0 = s + i * h;
            acc += h / 6.0 *
                   (f(a0) + 4.0 * f(a0 + 0.5 * h) + f(a0 + h));
        }
        return acc;
    };
    double int_lm = integral([&](double r) { return p.lam(r) - p.m(r); });
    double int_2lm = integral([&](double r) { return 2.0 * p.lam(r) - p.m(r); });
    double n0 = static_cast<double>(eta0.size());

    MomentBoundResult r;
    r.first_bound = std::exp(b * (t - s)) * std::exp(int_lm) * n0;
    r.second_bound = std::exp((b - bplus) * (t - s)) * std::exp(int_2lm) * n0 +
                     std::exp((bplus + 2.0 * b) * (t - s)) *
                         std::exp(2.0 * int_lm) * n0 * n0;

    struct Draw {
        double n, v;
    };
    SimOptions opts;
    opts.horizon = t - s;
    auto draws = run_replicates<Draw>(
        replicates, seed, workers, [&](std::size_t, Rng& rng) -> Draw {
            auto traj = simulate_path(*model.kernel, eta0, s, opts, rng);
            double n = static_cast<double>(traj.final_state().size());
            return {n, n + n * n};
        });
    std::vector<double> first, second;
    first.reserve(replicates);
    second.reserve(replicates);
    for (const auto& d : draws) {
        first.push_back(d.n);
        second.push_back(d.v);
    }
    auto s1 = summarize(first, 0);
    auto s2 = summarize(second, 0);
    r.first_empirical = s1.mean;
    r.first_stderror = s1.stderror;
    r.second_empirical = s2.mean;
    r.second_stderror = s2.stderror;
    r.pass = r.first_empirical <= r.first_bound + 3.0 * r.first_stderror &&
             r.second_empirical <= r.second_bound + 3.0 * r.second_stderror;
    return r;
}

// --- count-process cross check -------------------------------------

double CountKernel::rate_bound(double t, const int& i, double window) const {
    if (i < 0 || i >= k_.n_states) return 0.0;  // escaped: absorbing
    if (k_.q_bound) return k_.q_bound(t, i, window);
    return k_.q(t, i);  // time-constant kernel
}

int CountKernel::sample_jump(double t, const int& i, Rng& rng) const {
    const auto& tg = k_.targets_of(i);
    double esc = k_.escape_rate ? k_.escape_rate(t, i) : 0.0;
    double total = esc;
    std::vector<double> w(tg.size());
    for (std::size_t z = 0; z < tg.size(); ++z) {
        w[z] = k_.rate(t, i, tg[z]);
        total += w[z];
    }
    std::size_t pick = rng.categorical(tg.size() + 1, total, [&](std::size_t z) {
        return z < tg.size() ? w[z] : esc;
    });
    if (pick == tg.size()) return k_.n_states;  // out of the truncation
    return tg[pick];
}

std::vector<std::pair<int, double>> CountKernel::count_jump_rates(
    double t, const int& i) const {
    if (k_.escape_rate && k_.escape_rate(t, i) > 0.0) return {};  // inexact
    std::vector<std::pair<int, double>> out;
    for (int j : k_.targets_of(i)) {
        double r = k_.rate(t, i, j);
        if (r > 0.0) out.emplace_back(j - i, r);
    }
    return out;
}

CrossCheckResult simulator_vs_solver(const FiniteKernel& kernel, int start,
                                     double s, double t, double step,
                                     std::size_t replicates,
                                     std::uint64_t seed, int workers) {
    CountKernel ck(kernel);
    SimOptions opts;
    opts.horizon = t - s;
    auto finals = run_replicates<int>(
        replicates, seed, workers, [&](std::size_t, Rng& rng) {
            auto traj = simulate_path(ck, start, s, opts, rng);
            return traj.final_state();
        });
    CrossCheckResult res;
    res.empirical.assign(kernel.n_states, 0.0);
    double escaped = 0.0;
    for (int f : finals) {
        if (f >= 0 && f < kernel.n_states)
            res.empirical[f] += 1.0;
        else
            escaped += 1.0;
    }
    for (auto& v : res.empirical) v /= static_cast<double>(replicates);
    escaped /= static_cast<double>(replicates);

    auto sol = minimal_solution(kernel, s, t, step, 512);
    res.solver_row.resize(kernel.n_states);
    for (int j = 0; j < kernel.n_states; ++j)
        res.solver_row[j] = sol.transition(start, j);
    res.solver_defect = sol.defect(start);

    double tv = std::abs(escaped - res.solver_defect);
    for (int j = 0; j < kernel.n_states; ++j)
        tv += std::abs(res.empirical[j] - res.solver_row[j]);
    res.tv_distance = 0.5 * tv;
    return res;
}

CrossCheckResult simulator_vs_solver(const SpatialModel& model, double s,
                                     double t, int truncation, int start,
                                     double step, std::size_t replicates,
                                     std::uint64_t seed, int workers) {
    FiniteKernel reduced = meanfield_reduction(model, truncation);
    return simulator_vs_solver(reduced, start, s, t, step, replicates, seed,
                               workers);
}

}  // namespace jumpsim
