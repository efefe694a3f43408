#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qmera/compiler.hpp"
#include "qmera/mitigation.hpp"

namespace qmera {

struct FitPoint {
    int r = 0;
    double value = 0;
    double stderr_ = 0;
};

struct FitResult {
    double eta = 0;
    double eta_err = 0;
    double amplitude = 0;               // C(r) = amplitude * r^(-eta)
    std::string method;                 // "chisq" | "bootstrap"
    std::vector<std::pair<int, double>> residuals;  // (r, log-space residual)
    std::vector<int> excluded;          // distances dropped (non-positive value)
};

/// Weighted least squares of log C against log r; weights from stderr by
/// first-order propagation (sigma_log = stderr/value).
FitResult fit_power_law_chisq(const std::vector<FitPoint>& points);

/// Parametric bootstrap: perturb each value by its stderr, refit, report the
/// resample mean and standard deviation.
FitResult fit_power_law_bootstrap(const std::vector<FitPoint>& points,
                                  int n_resamples = 1500, uint64_t seed = 1);

struct PowerLawFit {
    FitResult chisq;
    FitResult bootstrap;
};

PowerLawFit fit_power_law(const std::vector<FitPoint>& points, int n_resamples = 1500,
                          uint64_t seed = 1);

struct ParityRecord {
    int distance = 0;
    double noise_scale = 1;
    double discard_rate = 0;  // kept fraction = 1 - discard_rate
};

/// Final run artifact. write_report emits report.json plus the plot-ready
/// CSVs (fig3.csv, fig1e.csv, parity.csv) into `dir`; outputs are
/// deterministic functions of the struct contents.
struct Report {
    std::string schema_version = "1";
    std::string layout_version = "1";
    std::string config_hash;
    double eta = 0, eta_err = 0, amplitude = 0;          // bootstrap method
    double eta_chisq = 0, eta_chisq_err = 0;             // cross-check method
    double energy = 0, energy_per_site = 0;
    double reference_per_site = 0;                       // exact anchor
    std::vector<DistanceRecord> estimates;               // fig3 rows
    std::vector<ResourceStats> resources;                // fig1e rows
    std::vector<ParityRecord> parity;                    // parity rows
    std::vector<std::pair<int, int>> placements;         // distance -> left site
};

void write_report(const Report& r, const std::string& dir);

/// Names of required report.json fields missing from the given JSON text.
std::vector<std::string> validate_report_json(const std::string& json_text);

/// Histogram of gate angles over [-pi, pi); columns bin_low,bin_high,count.
void write_angles_hist_csv(const std::vector<double>& angles, int bins,
                           const std::string& path);

}  // namespace qmera
