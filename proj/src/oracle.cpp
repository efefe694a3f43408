#include "qmera/oracle.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace qmera::oracle {

namespace {

// y += H x  for H = -J sum X_j X_{j+1} - h sum Z_j, periodic, N = L bond terms.
// Basis: bit j of the index is site j, bit value 0 -> |0> (Z = +1).
void apply_h(int L, double J, double h, const std::vector<double>& x,
             std::vector<double>& y) {
    const uint64_t dim = 1ull << L;
    for (uint64_t s = 0; s < dim; ++s) {
        double xs = x[s];
        if (xs == 0.0) continue;
        int pop = __builtin_popcountll(s);
        y[s] += -h * (L - 2 * pop) * xs;
    }
    for (int j = 0; j < L; ++j) {
        uint64_t mask = (1ull << j) | (1ull << ((j + 1) % L));
        for (uint64_t s = 0; s < dim; ++s) y[s ^ mask] += -J * x[s];
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// count of eigenvalues of the symmetric tridiagonal (alpha, beta) below x
int sturm_count(const std::vector<double>& alpha, const std::vector<double>& beta, double x) {
    int n = (int)alpha.size(), cnt = 0;
    double q = 1.0;
    for (int i = 0; i < n; ++i) {
        double b2 = i > 0 ? beta[i - 1] * beta[i - 1] : 0.0;
        q = alpha[i] - x - (i > 0 ? b2 / q : 0.0);
        if (q == 0.0) q = -1e-300;
        if (q < 0) cnt++;
    }
    return cnt;
}

// lowest eigenpair of the symmetric tridiagonal by bisection + inverse iteration
double tridiag_lowest(const std::vector<double>& alpha, const std::vector<double>& beta,
                      std::vector<double>& evec) {
    int n = (int)alpha.size();
    double lo = alpha[0], hi = alpha[0];
    for (int i = 0; i < n; ++i) {
        double r = (i > 0 ? std::abs(beta[i - 1]) : 0) + (i < n - 1 ? std::abs(beta[i]) : 0);
        lo = std::min(lo, alpha[i] - r);
        hi = std::max(hi, alpha[i] + r);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        double mid = 0.5 * (lo + hi);
        if (sturm_count(alpha, beta, mid) >= 1) hi = mid;
        else lo = mid;
    }
    double lambda = 0.5 * (lo + hi);

    evec.assign(n, 1.0 / std::sqrt((double)n));
    double shift = lambda - 1e-10 * std::max(1.0, std::abs(lambda));
    for (int pass = 0; pass < 4; ++pass) {
        // solve (T - shift I) y = evec by tridiagonal LU with row swaps
        std::vector<double> d(n), e_up(n, 0), e_up2(n, 0), rhs = evec;
        for (int i = 0; i < n; ++i) d[i] = alpha[i] - shift;
        std::vector<double> sub(n, 0);
        for (int i = 1; i < n; ++i) sub[i] = beta[i - 1];
        for (int i = 0; i + 1 < n; ++i) e_up[i] = beta[i];
        for (int i = 0; i + 1 < n; ++i) {
            if (std::abs(sub[i + 1]) > std::abs(d[i])) {
                std::swap(d[i], sub[i + 1]);
                std::swap(e_up[i], d[i + 1]);
                if (i + 2 < n) std::swap(e_up2[i], e_up[i + 1]);
                std::swap(rhs[i], rhs[i + 1]);
            }
            if (d[i] == 0.0) d[i] = 1e-300;
            double m = sub[i + 1] / d[i];
            d[i + 1] -= m * e_up[i];
            if (i + 2 < n) e_up[i + 1] -= m * e_up2[i];
            rhs[i + 1] -= m * rhs[i];
        }
        if (d[n - 1] == 0.0) d[n - 1] = 1e-300;
        std::vector<double> y(n);
        for (int i = n - 1; i >= 0; --i) {
            double v = rhs[i];
            if (i + 1 < n) v -= e_up[i] * y[i + 1];
            if (i + 2 < n) v -= e_up2[i] * y[i + 2];
            y[i] = v / d[i];
        }
        double nn = std::sqrt(dot(y, y));
        for (auto& v : y) v /= nn;
        evec = std::move(y);
    }
    return lambda;
}

}  // namespace

ExactSolution ed_solve(int L, double J, double h) {
    if (L < 2 || L > 16) throw std::invalid_argument("ed_solve: L must be in [2, 16]");
    const uint64_t dim = 1ull << L;
    ExactSolution sol;
    sol.L = L;
    sol.J = J;
    sol.h = h;

    // Lanczos with full reorthogonalization. H is real in this basis.
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<std::vector<double>> basis;
    std::vector<double> alpha, beta;
    std::vector<double> v(dim);
    for (auto& x : v) x = u(rng);
    double nrm = std::sqrt(dot(v, v));
    for (auto& x : v) x /= nrm;
    basis.push_back(v);

    const int max_iter = (int)std::min<uint64_t>(dim, 300);
    double prev_e = 1e300;
    std::vector<double> ritz;  // coefficients of ground state in Lanczos basis
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> w(dim, 0.0);
        apply_h(L, J, h, basis[it], w);
        double a = dot(basis[it], w);
        alpha.push_back(a);
        for (size_t k = 0; k < basis.size(); ++k) {
            double c = dot(basis[k], w);
            for (uint64_t i = 0; i < dim; ++i) w[i] -= c * basis[k][i];
        }
        // second reorthogonalization pass for numerical safety
        for (size_t k = 0; k < basis.size(); ++k) {
            double c = dot(basis[k], w);
            for (uint64_t i = 0; i < dim; ++i) w[i] -= c * basis[k][i];
        }
        double b = std::sqrt(dot(w, w));

        // lowest Ritz pair of the running tridiagonal (alpha, beta)
        double e = tridiag_lowest(alpha, beta, ritz);
        if (b < 1e-13 || (std::abs(e - prev_e) < 1e-14 * std::max(1.0, std::abs(e)) && it > 10)) {
            sol.energy = e;
            break;
        }
        prev_e = e;
        sol.energy = e;
        beta.push_back(b);
        for (auto& x : w) x /= b;
        basis.push_back(std::move(w));
    }

    sol.per_site = sol.energy / L;
    sol.ground_state.assign(dim, 0.0);
    for (size_t k = 0; k < ritz.size() && k < basis.size(); ++k)
        for (uint64_t i = 0; i < dim; ++i) sol.ground_state[i] += ritz[k] * basis[k][i];
    double gn = std::sqrt(dot(sol.ground_state, sol.ground_state));
    for (auto& x : sol.ground_state) x /= gn;

    // observables from the eigenvector
    sol.z_expect.assign(L, 0.0);
    sol.xx_corr.assign(L, std::vector<double>(L, 0.0));
    const auto& g = sol.ground_state;
    for (uint64_t s = 0; s < dim; ++s) {
        double p = g[s] * g[s];
        for (int j = 0; j < L; ++j)
            sol.z_expect[j] += ((s >> j) & 1 ? -1.0 : 1.0) * p;
    }
    for (int j = 0; j < L; ++j)
        for (int k = 0; k < L; ++k) {
            if (j == k) {
                sol.xx_corr[j][k] = 1.0;
                continue;
            }
            uint64_t mask = (1ull << j) | (1ull << k);
            double c = 0;
            for (uint64_t s = 0; s < dim; ++s) c += g[s] * g[s ^ mask];
            sol.xx_corr[j][k] = c;
        }
    return sol;
}

double ff_energy(int L, double g, double J) {
    if (L < 2 || L % 2 != 0) throw std::invalid_argument("ff_energy: L must be even, >= 2");
    double e = 0;
    for (int n = 1; n <= L / 2; ++n) {
        double k = (2.0 * n - 1.0) * M_PI / L;
        e -= 2.0 * J * std::sqrt(1.0 + g * g - 2.0 * g * std::cos(k));
    }
    return e;
}

}  // namespace qmera::oracle
