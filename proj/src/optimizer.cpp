#include "qmera/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace qmera {

namespace {

double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double vec_norm(const std::vector<double>& a) { return std::sqrt(vec_dot(a, a)); }

}  // namespace

std::vector<double> gradient(const MeraNetwork& net, const ParamVector& params) {
    MeraNetwork work = build_mera(net.config, params);
    EnergyTerms et = make_energy_terms(work);
    // which terms contain each gate
    std::vector<std::vector<int>> terms_of_gate(work.gates.size());
    for (int t = 0; t < (int)et.terms.size(); ++t)
        for (int gi : et.terms[t].cone.gates) terms_of_gate[gi].push_back(t);

    std::vector<double> grad(work.num_params, 0.0);
    auto partial_energy = [&](const std::vector<int>& term_ids) {
        double e = 0;
        for (int t : term_ids)
            e += et.terms[t].coeff * expect_cone(work, et.terms[t].cone, et.terms[t].obs);
        return e;
    };
    for (int p = 0; p < work.num_params; ++p) {
        int gate = p / 6;
        const auto& tids = terms_of_gate[gate];
        if (tids.empty()) continue;
        double orig = work.params[p];
        work.params[p] = orig + M_PI / 2;
        double ep = partial_energy(tids);
        work.params[p] = orig - M_PI / 2;
        double em = partial_energy(tids);
        work.params[p] = orig;
        grad[p] = (ep - em) / 2.0;
    }
    return grad;
}

std::vector<double> gradient_adjoint(const MeraNetwork& net, const ParamVector& params) {
    MeraNetwork work = build_mera(net.config, params);
    EnergyTerms et = make_energy_terms(work);
    std::vector<double> grad;
    energy_and_gradient(work, et, grad);
    return grad;
}

LbfgsResult lbfgsminimize_impl(const ObjectiveFn& fg, std::vector<double> x0, int max_iters,
                               double halt_rel, int memory,
                               const std::function<void(int, const std::vector<double>&, double)>&
                                   on_accept) {
    const double c1 = 1e-4, c2 = 0.9;
    const size_t n = x0.size();
    LbfgsResult res;
    res.x = std::move(x0);
    std::vector<double> g(n);
    double f = fg(res.x, g);
    res.trace.push_back({0, f});
    res.gnorm_trace.push_back(vec_norm(g));

    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;

    for (int it = 1; it <= max_iters; ++it) {
        // two-loop recursion
        std::vector<double> q = g;
        int m = (int)s_hist.size();
        std::vector<double> alpha(m);
        for (int i = m - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * vec_dot(s_hist[i], q);
            for (size_t k = 0; k < n; ++k) q[k] -= alpha[i] * y_hist[i][k];
        }
        double gamma = 1.0;
        if (m > 0) {
            double yy = vec_dot(y_hist[m - 1], y_hist[m - 1]);
            if (yy > 0) gamma = vec_dot(s_hist[m - 1], y_hist[m - 1]) / yy;
        }
        for (auto& v : q) v *= gamma;
        for (int i = 0; i < m; ++i) {
            double beta = rho_hist[i] * vec_dot(y_hist[i], q);
            for (size_t k = 0; k < n; ++k) q[k] += s_hist[i][k] * (alpha[i] - beta);
        }
        std::vector<double> d(n);
        for (size_t k = 0; k < n; ++k) d[k] = -q[k];
        double dg0 = vec_dot(d, g);
        if (dg0 >= 0) {  // not a descent direction, fall back to steepest descent
            for (size_t k = 0; k < n; ++k) d[k] = -g[k];
            dg0 = -vec_dot(g, g);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }
        if (dg0 == 0) {
            res.converged = true;
            break;
        }

        // strong-Wolfe line search (bracket + zoom)
        auto phi = [&](double t, std::vector<double>& gt) {
            std::vector<double> xt(n);
            for (size_t k = 0; k < n; ++k) xt[k] = res.x[k] + t * d[k];
            return fg(xt, gt);
        };
        double a_prev = 0, f_prev = f, dg_prev = dg0;
        double a_cur = 1.0;
        double a_lo = -1, a_hi = -1, f_lo = 0;
        std::vector<double> g_try(n);
        double f_try = 0;
        bool found = false, failed = false;
        for (int ls = 0; ls < 30; ++ls) {
            f_try = phi(a_cur, g_try);
            double dg_cur = 0;
            for (size_t k = 0; k < n; ++k) dg_cur += g_try[k] * d[k];
            if (f_try > f + c1 * a_cur * dg0 || (ls > 0 && f_try >= f_prev)) {
                a_lo = a_prev;
                f_lo = f_prev;
                a_hi = a_cur;
                break;
            }
            if (std::abs(dg_cur) <= -c2 * dg0) {
                found = true;
                break;
            }
            if (dg_cur >= 0) {
                a_lo = a_cur;
                f_lo = f_try;
                a_hi = a_prev;
                break;
            }
            a_prev = a_cur;
            f_prev = f_try;
            dg_prev = dg_cur;
            a_cur *= 2.0;
            if (a_cur > 1e6) {
                failed = true;
                break;
            }
        }
        (void)dg_prev;
        if (!found && !failed && a_lo >= 0) {
            for (int z = 0; z < 40 && !found; ++z) {
                double a_mid = 0.5 * (a_lo + a_hi);
                if (std::abs(a_hi - a_lo) < 1e-16 * std::max(1.0, std::abs(a_lo))) {
                    failed = true;
                    break;
                }
                f_try = phi(a_mid, g_try);
                double dg_mid = 0;
                for (size_t k = 0; k < n; ++k) dg_mid += g_try[k] * d[k];
                if (f_try > f + c1 * a_mid * dg0 || f_try >= f_lo) {
                    a_hi = a_mid;
                } else {
                    if (std::abs(dg_mid) <= -c2 * dg0) {
                        a_cur = a_mid;
                        found = true;
                        break;
                    }
                    if (dg_mid * (a_hi - a_lo) >= 0) a_hi = a_lo;
                    a_lo = a_mid;
                    f_lo = f_try;
                }
                a_cur = a_mid;
            }
        }
        if (failed || (!found && a_lo < 0)) {
            res.line_search_failed = true;
            break;
        }
        if (!found) {
            // zoom exhausted; accept the last trial if it decreased f
            if (!(f_try < f)) {
                res.line_search_failed = true;
                break;
            }
        }

        std::vector<double> x_new(n), s(n), y(n);
        for (size_t k = 0; k < n; ++k) {
            x_new[k] = res.x[k] + a_cur * d[k];
            s[k] = x_new[k] - res.x[k];
            y[k] = g_try[k] - g[k];
        }
        double f_new = f_try;
        double sy = vec_dot(s, y);
        if (sy > 1e-14) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if ((int)s_hist.size() > memory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        double rel = std::abs(f_new - f) / std::max(std::abs(f_new), 1e-300);
        res.x = std::move(x_new);
        g = g_try;
        f = f_new;
        res.trace.push_back({it, f});
        res.gnorm_trace.push_back(vec_norm(g));
        if (on_accept) on_accept(it, res.x, f);
        if (rel < halt_rel) {
            res.converged = true;
            break;
        }
    }
    res.f = f;
    return res;
}

LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, std::vector<double> x0, int max_iters,
                           double halt_rel, int memory,
                           const std::function<void(int, const std::vector<double>&, double)>&
                               on_accept) {
    return lbfgsminimize_impl(fg, std::move(x0), max_iters, halt_rel, memory, on_accept);
}

OptResult optimize(const MeraConfig& config, const OptConfig& opt) {
    if (opt.halt_rel_energy <= 0)
        throw std::invalid_argument("OptConfig: halt_rel_energy must be positive");
    validate(config);
    auto t0 = std::chrono::steady_clock::now();
    int np = param_count(config);

    OptResult best;
    bool have_best = false;
    for (int r = 0; r < std::max(1, opt.restarts); ++r) {
        std::mt19937_64 rng(opt.seed + 0x9e3779b97f4a7c15ull * r);
        std::uniform_real_distribution<double> u(-opt.init_range, opt.init_range);
        ParamVector x0(np);
        for (auto& v : x0) v = u(rng);

        MeraNetwork net = build_mera(config, x0);
        EnergyTerms et = make_energy_terms(net);
        ObjectiveFn fg = [&](const std::vector<double>& x, std::vector<double>& grad) {
            net.params = x;
            if (opt.grad_backend == "shift") {
                grad = gradient(net, x);
                return energy_with_terms(net, et);
            }
            return energy_and_gradient(net, et, grad);
        };
        auto on_accept = [&](int it, const std::vector<double>& x, double f) {
            if (opt.checkpoint_every > 0 && it % opt.checkpoint_every == 0 &&
                !opt.checkpoint_prefix.empty()) {
                MeraNetwork snap = build_mera(config, x);
                save_network(snap, opt.checkpoint_prefix + ".json");
            }
        };
        LbfgsResult lr = lbfgs_minimize(fg, x0, opt.max_iters, opt.halt_rel_energy, opt.memory,
                                        on_accept);
        if (!have_best || lr.f < best.best_energy) {
            have_best = true;
            best.best_params = lr.x;
            best.best_energy = lr.f;
            best.energy_trace = lr.trace;
            best.grad_norm_trace = lr.gnorm_trace;
            best.converged = lr.converged;
        }
        if (opt.checkpoint_every > 0 && !opt.checkpoint_prefix.empty()) {
            std::ofstream tr(opt.checkpoint_prefix + "_trace.csv");
            tr << "iter,energy,grad_norm\n";
            for (size_t i = 0; i < lr.trace.size(); ++i)
                tr << lr.trace[i].first << "," << lr.trace[i].second << ","
                   << lr.gnorm_trace[i] << "\n";
        }
    }
    best.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return best;
}

}  // namespace qmera
