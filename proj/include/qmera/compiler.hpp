#pragma once

#include <string>
#include <vector>

#include "qmera/circuit.hpp"

namespace qmera {

/// Qubit-reuse strategies for measurement circuits.
///  - none:   identity compile, one physical qubit per logical qubit.
///  - greedy: repeatedly retire the measurement whose remaining past cone needs
///            the fewest fresh activations; MEASZ + RESET frees the qubit.
///  - cap:    greedy schedule, but allocation hands out fresh physical qubits
///            round-robin until `cap` before falling back to reuse.
enum class ReuseMode { none, greedy, cap };

struct CompiledCircuit {
    Circuit circuit;
    int width = 0;  // physical qubits
    ReuseMode mode = ReuseMode::none;
    std::vector<std::pair<int, int>> mapping;  // (logical, physical) activations
    std::string status;
};

CompiledCircuit reuse_compile(const Circuit& c, ReuseMode mode, int cap = 0);

/// Longest chain of two-qubit gates linked by shared (physical) qubits.
int depth2q(const Circuit& c);

/// Exact-distribution equivalence of the classical outcome statistics
/// (total variation < 1e-9). Only feasible for small circuits.
bool simulate_equivalence_check(const Circuit& original, const Circuit& compiled,
                                int max_qubits = 14);

struct ResourceStats {
    int distance = 0;
    int width_no_reuse = 0, width_greedy = 0, width_cap20 = 0;
    int depth_no_reuse = 0, depth_greedy = 0, depth_cap20 = 0;
};

ResourceStats resource_stats(const Circuit& c, int distance);
void write_resource_csv(const std::vector<ResourceStats>& rows, const std::string& path,
                        const std::string& comment = "");  // "#"-prefixed header line

}  // namespace qmera
