#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qmera/analysis.hpp"
#include "qmera/compiler.hpp"
#include "qmera/mera.hpp"
#include "qmera/mitigation.hpp"
#include "qmera/optimizer.hpp"
#include "qmera/simulator.hpp"

namespace qmera {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingArtifact : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One experiment, fully determined by this struct (plus the code version).
struct RunConfig {
    MeraConfig mera;                       // L, chi, J, h
    OptConfig opt;                         // optimizer settings (seed is derived)
    std::vector<int> distances{2, 4, 8, 16, 32};
    int shots = 8000;                      // per distance, across both ZNE arms
    int zne_m = 3;
    int resamples = 1500;
    NoiseModel noise;
    uint64_t seed = 1;
    std::string out_dir = "out";
    int threads = 1;
};

void validate(const RunConfig& cfg);       // throws ConfigError listing bad fields
RunConfig config_from_json(const std::string& text);  // unknown/ill-typed keys listed
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);     // canonical form (hash input)
std::string config_hash(const RunConfig& cfg);        // 16 hex chars

/// Cone placement for separation r: left site j minimizing the cone width
/// (ties: fewer gates, then lowest j). Returns (j, (j+r) mod L).
std::pair<int, int> choose_placement(const MeraNetwork& net, int r);

/// Pipeline stages. Each stage is idempotent: it returns immediately when its
/// outputs already exist, and throws MissingArtifact naming the first missing
/// input otherwise. All randomness derives from cfg.seed, so regenerated
/// artifacts are byte-identical.
void stage_optimize(const RunConfig& cfg);
void stage_cone(const RunConfig& cfg);      // placements + gadget/folded circuits
void stage_compile(const RunConfig& cfg);   // reuse statistics table
void stage_simulate(const RunConfig& cfg);  // shot tables for both ZNE arms
void stage_mitigate(const RunConfig& cfg);  // per-distance estimates
void stage_fit(const RunConfig& cfg);       // power-law fit
void stage_report(const RunConfig& cfg);    // report.json + plot CSVs
void run_all(const RunConfig& cfg);

}  // namespace qmera
