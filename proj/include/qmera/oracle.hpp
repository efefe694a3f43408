#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace qmera::oracle {

/// Exact ground-state data for the periodic TFIM  H = -J sum X_j X_{j+1} - h sum Z_j.
struct ExactSolution {
    int L = 0;
    double J = 1.0, h = 1.0;
    double energy = 0.0;    // ground energy
    double per_site = 0.0;  // energy / L
    std::vector<double> ground_state;           // real amplitudes (H is real symmetric)
    std::vector<std::vector<double>> xx_corr;   // <X_j X_k>, L x L
    std::vector<double> z_expect;               // <Z_j>
};

/// Full exact diagonalization by Lanczos on the 2^L space. L <= 16.
ExactSolution ed_solve(int L, double J, double h);

/// Free-fermion ground energy of the periodic TFIM, even-parity
/// (antiperiodic fermion) sector:  E = -sum_{n=1}^{L/2} eps(k_n),
/// eps(k) = 2J sqrt(1 + g^2 - 2 g cos k), k_n = (2n-1) pi / L,  g = h/J.
double ff_energy(int L, double g, double J = 1.0);

}  // namespace qmera::oracle
