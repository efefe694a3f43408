#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qmera/simulator.hpp"

namespace qmera {

struct Estimate {
    double value = 0;
    double stderr_ = 0;
    int n_total = 0;
    int n_kept = 0;
    double noise_scale = 1.0;
};

struct ZneResult {
    double e0 = 0;
    double sigma0 = 0;
    Estimate e1, em;
    int m = 0;
};

struct Postselected {
    ShotTable kept;
    int n_total = 0;
    double discard_rate = 0;
};

/// Symmetry herald: keep a shot iff the parity over all cone_exit and site_z
/// bits is even (the Z2-conserved sector); odd parity flags an error.
Postselected postselect(const ShotTable& t);

/// Mean of (-1)^ancilla over the kept shots; stderr = sample std / sqrt(n).
Estimate estimate_xx(const ShotTable& kept);

/// Linear zero-noise extrapolation from scales 1 and m:
/// e0 = (m E(p) - E(mp))/(m-1), sigma0 = sqrt(m^2 s1^2 + sm^2)/(m-1).
ZneResult zne(const Estimate& e1, const Estimate& em, int m);

/// Shot split with N1 = m^2 Nm up to rounding (equal error contributions
/// from the two extrapolation arms). Returns (N1, Nm).
std::pair<int, int> allocate_shots(int total, int m);

struct BootstrapResult {
    double mean = 0;
    double sigma = 0;  // 1-sigma interval half-width = resample std
    std::vector<double> samples;
};

/// Resample rows with replacement.
ShotTable resample_shots(const ShotTable& t, std::mt19937_64& rng);

/// Generic bootstrap: the statistic draws whatever resamples it needs from the
/// provided stream; streams are keyed by (seed, resample index).
BootstrapResult bootstrap(int n_resamples, uint64_t seed,
                          const std::function<double(std::mt19937_64&)>& statistic);

/// Full-pipeline bootstrap of the ZNE point: resample the raw shot tables,
/// re-filter, re-estimate, re-extrapolate inside the loop.
BootstrapResult bootstrap_zne(const ShotTable& raw1, const ShotTable& rawm, int m,
                              int n_resamples, uint64_t seed);

/// Per-distance results table (raw vs heralded vs extrapolated correlator).
struct DistanceRecord {
    int distance = 0;
    double raw = 0, raw_err = 0;
    double heralded = 0, heralded_err = 0;
    double zne = 0, zne_err = 0;
    double discard_rate = 0;
};

void write_estimates_csv(const std::vector<DistanceRecord>& rows, const std::string& path,
                         const std::string& comment = "");  // "#"-prefixed header line
std::vector<DistanceRecord> read_estimates_csv(const std::string& path);

}  // namespace qmera
