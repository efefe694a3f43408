#pragma once

#include "qmera/mera.hpp"

namespace qmera {

/// <psi|O|psi> over a precomputed cone (see expect_local for the convenience form).
double expect_cone(const MeraNetwork& net, const CausalCone& cone, const PauliString& obs);

/// Energy decomposed into per-term observables, each with its own causal cone.
/// The cone structure only depends on the config, so this can be built once
/// and reused across parameter updates.
struct EnergyTerms {
    struct Term {
        PauliString obs;
        CausalCone cone;
        double coeff;
    };
    std::vector<Term> terms;
};

EnergyTerms make_energy_terms(const MeraNetwork& net);
double energy_with_terms(const MeraNetwork& net, const EnergyTerms& terms);

/// Reverse-mode differentiation through the cone contraction: accumulates
/// coeff * d<O>/dparams into grad (grad must have net.num_params entries).
double expect_cone_grad(const MeraNetwork& net, const CausalCone& cone,
                        const PauliString& obs, double coeff, std::vector<double>& grad);

/// Energy and its full gradient in one pass over all terms.
double energy_and_gradient(const MeraNetwork& net, const EnergyTerms& terms,
                           std::vector<double>& grad);

}  // namespace qmera
