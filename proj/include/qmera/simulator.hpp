#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qmera/circuit.hpp"

namespace qmera {

/// Angle-dependent stochastic noise: two-qubit depolarizing after every
/// two-qubit gate with probability scale*(p0 + slope*|theta|/(pi/2)), plus
/// idle dephasing accrued between a qubit's consecutive two-qubit gates.
/// CX counts as a theta = pi/2 entangler.
struct NoiseModel {
    double p0 = 1e-4;
    double slope = 1.9e-3;              // added error at |theta| = pi/2
    double idle_rate = 1e-4 / 20.0;     // phase-flip probability per time unit
    double scale = 1.0;                 // global multiplier (ZNE studies)

    void check() const;                 // throws if any probability leaves [0,1]
    double gate_error(double theta) const;
};

struct ShotTable {
    std::vector<BitRole> roles;                 // one per classical bit
    std::vector<std::vector<uint8_t>> rows;     // shots x cbits
    std::string circuit_id;
    double noise_scale = 1.0;
    uint64_t seed = 0;
};

/// Exact joint outcome distribution over the classical bits.
struct OutcomeDist {
    std::vector<BitRole> roles;
    std::vector<std::pair<std::vector<uint8_t>, double>> outcomes;  // sorted keys
};

OutcomeDist run_noiseless(const Circuit& c, int max_qubits = 24);

ShotTable run_shots(const Circuit& c, const NoiseModel& noise, int shots, uint64_t seed,
                    const std::string& circuit_id = "");

OutcomeDist empirical_dist(const ShotTable& t);
double total_variation(const OutcomeDist& a, const OutcomeDist& b);

/// CSV (one row per shot, one column per tagged bit) + JSON metadata sidecar
/// at csv_path + ".json".
void save_shots(const ShotTable& t, const std::string& csv_path);
ShotTable load_shots(const std::string& csv_path);

}  // namespace qmera
