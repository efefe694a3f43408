#pragma once

#include <vector>

#include "qmera/circuit.hpp"

namespace qmera {

/// Matrix product state over L spin-1/2 sites, mixed-canonical around `center`
/// (sites left of the center are left-canonical, sites right of it
/// right-canonical). Site tensor i has shape dims[i] x 2 x dims[i+1], stored
/// row-major as (left*2 + spin)*dims[i+1] + right.
struct Mps {
    int L = 0;
    std::vector<int> dims;               // L+1 bond dimensions, dims[0]=dims[L]=1
    std::vector<std::vector<cplx>> site;
    int center = 0;
    double trunc_error = 0;  // cumulative discarded squared-singular-value weight

    double norm() const;  // sqrt(<psi|psi>), = center tensor norm in canonical form
};

Mps product_zero(int L);

/// Run a measurement-free circuit through the MPS. Distant two-qubit gates are
/// routed by adjacent-swap chains and swapped back, so site order is preserved;
/// every two-site application truncates to chi_mps and renormalizes.
Mps apply_circuit(const Circuit& c, int chi_mps);

/// Von Neumann entropy (natural log) across the central cut L/2.
double entropy_half(Mps& m);

/// Entropy across an arbitrary cut: sites [0, cut) vs [cut, L).
double entropy_at(Mps& m, int cut);

/// Dense statevector (basis bit q = site q), for small L only.
std::vector<cplx> to_dense(const Mps& m, int max_L = 14);

}  // namespace qmera
