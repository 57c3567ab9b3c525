#include "jumpsim/series_solver.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace jumpsim {

double FiniteKernel::q(double t, int i) const {
    double s = 0.0;
    for (int j : targets_of(i)) s += rate(t, i, j);
    if (escape_rate) s += escape_rate(t, i);
    return s;
}

const std::vector<int>& FiniteKernel::targets_of(int i) const {
    if (!targets.empty()) return targets[i];
    if (dense_targets_.empty()) {
        dense_targets_.resize(n_states);
        for (int a = 0; a < n_states; ++a)
            for (int b = 0; b < n_states; ++b)
                if (a != b) dense_targets_[a].push_back(b);
    }
    return dense_targets_[i];
}

Eigen::MatrixXd FiniteKernel::rate_matrix(double t) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_states, n_states);
    for (int i = 0; i < n_states; ++i)
        for (int j : targets_of(i)) m(i, j) = rate(t, i, j);
    return m;
}

Eigen::MatrixXd FiniteKernel::generator(double t) const {
    Eigen::MatrixXd m = rate_matrix(t);
    for (int i = 0; i < n_states; ++i) m(i, i) = -q(t, i);
    return m;
}

namespace {

struct Grid {
    double s, t, h;
    int panels;  // nodes are 0..panels

    double node(int g) const { return s + h * g; }
};

Grid make_grid(double s, double t, double step) {
    if (t < s) throw GridError("t < s");
    if (step <= 0.0) throw GridError("step must be > 0");
    double span = t - s;
    double panels_real = span / step;
    int panels = static_cast<int>(std::llround(panels_real));
    if (panels < 1 || std::abs(panels_real - panels) > 1e-9 * (panels + 1))
        throw GridError("step does not tile [s, t]");
    return {s, t, span / panels, panels};
}

// Per-state cumulative intensity integral, per-panel survival factors
// d[i][g] = exp(-int_{r_g}^{r_{g+1}} q(., i)), and product-integration
// weights for int_0^h e^{-q u} f(u) du with f linear on the panel:
// the integral is wa * f(0) + wb * f(h), exact in the exponential.
struct Survival {
    Eigen::MatrixXd cumq;  // n x (panels+1)
    Eigen::MatrixXd dfac;  // n x panels
    Eigen::MatrixXd wa, wb;  // n x panels

    Survival(const FiniteKernel& k, const Grid& g) {
        int n = k.n_states;
        cumq.resize(n, g.panels + 1);
        dfac.resize(n, g.panels);
        wa.resize(n, g.panels);
        wb.resize(n, g.panels);
        Eigen::VectorXd qprev(n), qcur(n);
        for (int i = 0; i < n; ++i) {
            qprev(i) = k.q(g.node(0), i);
            cumq(i, 0) = 0.0;
        }
        for (int p = 0; p < g.panels; ++p) {
            for (int i = 0; i < n; ++i) qcur(i) = k.q(g.node(p + 1), i);
            for (int i = 0; i < n; ++i) {
                double x = 0.5 * g.h * (qprev(i) + qcur(i));
                double d = std::exp(-x);
                cumq(i, p + 1) = cumq(i, p) + x;
                dfac(i, p) = d;
                double a, b;
                if (x < 1e-2) {
                    // Taylor forms, stable near x = 0.
                    b = 0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0;
                    a = 0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0;
                } else {
                    b = (1.0 - d * (1.0 + x)) / (x * x);
                    a = (1.0 - d) / x - b;
                }
                wa(i, p) = g.h * a;
                wb(i, p) = g.h * b;
            }
            qprev = qcur;
        }
    }
};

using Table = std::vector<Eigen::MatrixXd>;  // one matrix per grid node

// P^(0)(r_g, t) for all nodes (backward direction: varying start).
Table term0_backward(const FiniteKernel& k, const Grid& g, const Survival& sv) {
    int n = k.n_states;
    Table tab(g.panels + 1, Eigen::MatrixXd::Zero(n, n));
    for (int p = 0; p <= g.panels; ++p)
        for (int i = 0; i < n; ++i)
            tab[p](i, i) = std::exp(-(sv.cumq(i, g.panels) - sv.cumq(i, p)));
    return tab;
}

// First-jump recursion: next term from the previous one, backward
// accumulation so that every factor stays in [0, 1].
Table next_term_backward(const FiniteKernel& k, const Grid& g,
                         const Survival& sv, const Table& prev) {
    int n = k.n_states;
    Table m(g.panels + 1);
    for (int p = 0; p <= g.panels; ++p)
        m[p] = k.rate_matrix(g.node(p)) * prev[p];
    Table out(g.panels + 1);
    out[g.panels] = Eigen::MatrixXd::Zero(n, n);
    for (int p = g.panels - 1; p >= 0; --p) {
        out[p].resize(n, n);
        for (int i = 0; i < n; ++i) {
            out[p].row(i) = sv.wa(i, p) * m[p].row(i) +
                            sv.wb(i, p) * m[p + 1].row(i) +
                            sv.dfac(i, p) * out[p + 1].row(i);
        }
    }
    return out;
}

// P^(0)(s, r_g) for all nodes (forward direction: varying end).
Table term0_forward(const FiniteKernel& k, const Grid& g, const Survival& sv) {
    int n = k.n_states;
    Table tab(g.panels + 1, Eigen::MatrixXd::Zero(n, n));
    for (int p = 0; p <= g.panels; ++p)
        for (int i = 0; i < n; ++i) tab[p](i, i) = std::exp(-sv.cumq(i, p));
    return tab;
}

// Last-jump recursion (the same series, decomposed at the final jump),
// forward accumulation with column-wise survival factors.
Table next_term_forward(const FiniteKernel& k, const Grid& g,
                        const Survival& sv, const Table& prev) {
    int n = k.n_states;
    Table w(g.panels + 1);
    for (int p = 0; p <= g.panels; ++p)
        w[p] = prev[p] * k.rate_matrix(g.node(p));
    Table out(g.panels + 1);
    out[0] = Eigen::MatrixXd::Zero(n, n);
    for (int p = 0; p < g.panels; ++p) {
        out[p + 1].resize(n, n);
        for (int z = 0; z < n; ++z) {
            // Weight e^{-q_z (r_{p+1} - u)}: the roles of the endpoint
            // weights swap relative to the backward rule.
            out[p + 1].col(z) = sv.dfac(z, p) * out[p].col(z) +
                                sv.wb(z, p) * w[p].col(z) +
                                sv.wa(z, p) * w[p + 1].col(z);
        }
    }
    return out;
}

double max_row_sum(const Eigen::MatrixXd& m) {
    return m.rowwise().sum().maxCoeff();
}

// Sums terms into per-node partial-sum tables.
template <typename Term0, typename NextTerm>
std::pair<Table, SeriesInfo> sum_table(const FiniteKernel& k, const Grid& g,
                                       const Survival& sv, int n_max,
                                       Term0&& term0, NextTerm&& next,
                                       int probe_node) {
    Table term = term0(k, g, sv);
    Table sum = term;
    SeriesInfo info;
    info.terms_used = 1;
    info.term_mass.push_back(max_row_sum(term[probe_node]));
    for (int n = 1; n <= n_max; ++n) {
        term = next(k, g, sv, term);
        for (int p = 0; p <= g.panels; ++p) sum[p] += term[p];
        ++info.terms_used;
        double mass = max_row_sum(term[probe_node]);
        info.term_mass.push_back(mass);
        if (mass < kSeriesTailTolerance) {
            info.tail_converged = true;
            break;
        }
    }
    return {std::move(sum), std::move(info)};
}

}  // namespace

Eigen::MatrixXd series_term(const FiniteKernel& kernel, int n, double s,
                            double t, double step) {
    if (n < 0) throw std::invalid_argument("n must be >= 0");
    Grid g = make_grid(s, t, step);
    Survival sv(kernel, g);
    Table term = term0_backward(kernel, g, sv);
    for (int i = 0; i < n; ++i) term = next_term_backward(kernel, g, sv, term);
    return term[0];
}

MinimalSolution minimal_solution(const FiniteKernel& kernel, double s, double t,
                                 double step, int n_max) {
    Grid g = make_grid(s, t, step);
    Survival sv(kernel, g);
    Table term = term0_backward(kernel, g, sv);
    MinimalSolution out;
    out.transition = term[0];
    out.info.terms_used = 1;
    out.info.term_mass.push_back(max_row_sum(term[0]));
    for (int n = 1; n <= n_max; ++n) {
        term = next_term_backward(kernel, g, sv, term);
        out.transition += term[0];
        ++out.info.terms_used;
        double mass = max_row_sum(term[0]);
        out.info.term_mass.push_back(mass);
        if (mass < kSeriesTailTolerance) {
            out.info.tail_converged = true;
            break;
        }
    }
    out.defect = Eigen::VectorXd::Ones(kernel.n_states) -
                 out.transition.rowwise().sum();
    return out;
}

Eigen::MatrixXd regularized_solution(const FiniteKernel& kernel, double alpha,
                                     double s, double t, double step,
                                     int n_max) {
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("alpha must lie in [0, 1]");
    Grid g = make_grid(s, t, step);
    Survival sv(kernel, g);
    Table term = term0_backward(kernel, g, sv);
    Eigen::MatrixXd out = term[0];
    if (alpha == 0.0) return out;
    double weight = 1.0;
    for (int n = 1; n <= n_max; ++n) {
        term = next_term_backward(kernel, g, sv, term);
        weight *= alpha;
        out += weight * term[0];
        if (max_row_sum(term[0]) < kSeriesTailTolerance) break;
    }
    return out;
}

double backward_residual(const FiniteKernel& kernel, double s, double t,
                         double step, int n_max) {
    Grid g = make_grid(s, t, step);
    Survival sv(kernel, g);
    auto [sum, info] =
        sum_table(kernel, g, sv, n_max, term0_backward, next_term_backward, 0);
    double worst = 0.0;
    for (int p = 1; p < g.panels; ++p) {
        double r = g.node(p);
        Eigen::MatrixXd dPds = (sum[p + 1] - sum[p - 1]) / (2.0 * g.h);
        Eigen::MatrixXd flow = kernel.rate_matrix(r) * sum[p];
        for (int i = 0; i < kernel.n_states; ++i) {
            double qi = kernel.q(r, i);
            for (int j = 0; j < kernel.n_states; ++j) {
                double res = dPds(i, j) - qi * sum[p](i, j) + flow(i, j);
                worst = std::max(worst, std::abs(res));
            }
        }
    }
    return worst;
}

double forward_residual(const FiniteKernel& kernel, double s, double t,
                        double step, int n_max) {
    Grid g = make_grid(s, t, step);
    Survival sv(kernel, g);
    auto [sum, info] = sum_table(kernel, g, sv, n_max, term0_forward,
                                 next_term_forward, g.panels);
    double worst = 0.0;
    for (int p = 1; p < g.panels; ++p) {
        double r = g.node(p);
        Eigen::MatrixXd dPdt = (sum[p + 1] - sum[p - 1]) / (2.0 * g.h);
        Eigen::MatrixXd inflow = sum[p] * kernel.rate_matrix(r);
        for (int j = 0; j < kernel.n_states; ++j) {
            double qj = kernel.q(r, j);
            for (int x = 0; x < kernel.n_states; ++x) {
                double res = dPdt(x, j) + qj * sum[p](x, j) - inflow(x, j);
                worst = std::max(worst, std::abs(res));
            }
        }
    }
    return worst;
}

Eigen::MatrixXd chernoff_approximation(const FiniteKernel& kernel, double s,
                                       double t, double mesh) {
    if (mesh <= 0.0) throw GridError("mesh must be > 0");
    Eigen::MatrixXd out =
        Eigen::MatrixXd::Identity(kernel.n_states, kernel.n_states);
    double cur = s;
    while (cur < t - 1e-12 * (1.0 + std::abs(t))) {
        double next = std::min(cur + mesh, t);
        Eigen::MatrixXd a = kernel.generator(cur) * (next - cur);
        out = out * a.exp();
        cur = next;
    }
    return out;
}

DensityEvolution evolve_density(const FiniteKernel& kernel,
                                const Eigen::VectorXd& mu0, double s, double t,
                                double step, int n_max) {
    Grid g = make_grid(s, t, step);
    Survival sv(kernel, g);
    int n = kernel.n_states;
    int nodes = g.panels + 1;

    // v[p] = mu0^T P^(k)(s, .; r_p, .), adjoint last-jump recursion.
    Eigen::MatrixXd v(n, nodes);
    for (int p = 0; p < nodes; ++p)
        for (int j = 0; j < n; ++j)
            v(j, p) = mu0(j) * std::exp(-sv.cumq(j, p));

    DensityEvolution out;
    out.density.time = t;
    out.density.weights = v.col(g.panels);
    out.info.terms_used = 1;
    out.term_mass_contribution.push_back(v.col(g.panels).sum());
    out.info.term_mass.push_back(out.term_mass_contribution.back());

    Eigen::MatrixXd w(n, nodes), vn(n, nodes);
    for (int k = 1; k <= n_max; ++k) {
        // w(., p) = v(., p)^T Q(r_p)
        w.setZero();
        for (int p = 0; p < nodes; ++p) {
            double r = g.node(p);
            for (int i = 0; i < n; ++i) {
                double vi = v(i, p);
                if (vi == 0.0) continue;
                for (int j : kernel.targets_of(i))
                    w(j, p) += vi * kernel.rate(r, i, j);
            }
        }
        vn.col(0).setZero();
        for (int p = 0; p < g.panels; ++p) {
            for (int z = 0; z < n; ++z) {
                vn(z, p + 1) = sv.dfac(z, p) * vn(z, p) +
                               sv.wb(z, p) * w(z, p) + sv.wa(z, p) * w(z, p + 1);
            }
        }
        v.swap(vn);
        double contribution = v.col(g.panels).sum();
        out.density.weights += v.col(g.panels);
        ++out.info.terms_used;
        out.term_mass_contribution.push_back(contribution);
        out.info.term_mass.push_back(contribution);
        if (contribution < kSeriesTailTolerance * mu0.sum()) {
            out.info.tail_converged = true;
            break;
        }
    }
    return out;
}

std::vector<std::pair<int, double>> conservativeness_report(
    const FiniteKernel& kernel, const Eigen::VectorXd& mu0, double s, double t,
    double step, int n_max) {
    DensityEvolution ev = evolve_density(kernel, mu0, s, t, step, n_max);
    std::vector<std::pair<int, double>> out;
    double defect = mu0.sum();
    int n = 0;
    for (double mass : ev.term_mass_contribution) {
        defect -= mass;
        out.emplace_back(n++, defect);
    }
    return out;
}

std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::string& kernel_name,
                          double s, double t, double step, int n_terms) {
    std::ostringstream out;
    out << "# kernel=" << kernel_name << " s=" << s << " t=" << t
        << " step=" << step << " N=" << n_terms << "\n";
    char buf[32];
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            std::snprintf(buf, sizeof buf, "%.12g", m(i, j));
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

FiniteKernel two_state_constant(double a, double b) {
    FiniteKernel k;
    k.n_states = 2;
    k.name = "two_state_constant";
    k.rate = [a, b](double, int i, int j) {
        if (i == 0 && j == 1) return a;
        if (i == 1 && j == 0) return b;
        return 0.0;
    };
    return k;
}

FiniteKernel two_state_time_dependent(double back_scale) {
    FiniteKernel k;
    k.n_states = 2;
    k.name = "two_state_1plust";
    k.rate = [back_scale](double t, int i, int j) {
        if (i == 0 && j == 1) return 1.0 + t;
        if (i == 1 && j == 0) return back_scale * (1.0 + t);
        return 0.0;
    };
    k.q_bound = [back_scale](double t, int i, double w) {
        double scale = i == 0 ? 1.0 : back_scale;
        return scale * (1.0 + t + w);  // q increasing in t
    };
    return k;
}

FiniteKernel immigration_death(std::function<double(double)> beta, double delta,
                               int n_states) {
    FiniteKernel k;
    k.n_states = n_states;
    k.name = "immigration_death";
    k.targets.resize(n_states);
    for (int i = 0; i < n_states; ++i) {
        if (i > 0) k.targets[i].push_back(i - 1);
        if (i + 1 < n_states) k.targets[i].push_back(i + 1);
    }
    k.rate = [beta = std::move(beta), delta, n_states](double t, int i, int j) {
        if (j == i + 1 && j < n_states) return beta(t);
        if (j == i - 1) return delta * i;
        return 0.0;
    };
    return k;
}

FiniteKernel truncated_pure_birth(double growth, int n_states) {
    FiniteKernel k;
    k.n_states = n_states;
    k.name = "truncated_pure_birth";
    k.targets.resize(n_states);
    for (int i = 0; i + 1 < n_states; ++i) k.targets[i].push_back(i + 1);
    k.rate = [growth, n_states](double, int i, int j) {
        if (j == i + 1 && j < n_states) return growth * (i + 1);
        return 0.0;
    };
    k.escape_rate = [growth, n_states](double, int i) {
        return i + 1 == n_states ? growth * n_states : 0.0;
    };
    return k;
}

}  // namespace jumpsim
