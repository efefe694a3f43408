#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "qmera/cone_eval.hpp"
#include "qmera/mera.hpp"

namespace qmera {

struct OptConfig {
    int max_iters = 2000;
    double halt_rel_energy = 1e-8;
    uint64_t seed = 1;
    double init_range = 0.1;  // uniform initialization in [-init_range, init_range] radians
    int restarts = 3;
    int memory = 10;
    std::string grad_backend = "adjoint";  // "adjoint" | "shift"
    int checkpoint_every = 0;              // iterations between checkpoints, 0 = off
    std::string checkpoint_prefix;         // <prefix>.json / <prefix>_trace.csv
};

struct OptResult {
    ParamVector best_params;
    double best_energy = 0;
    std::vector<std::pair<int, double>> energy_trace;  // accepted iterates
    std::vector<double> grad_norm_trace;
    double wall_time_sec = 0;
    bool converged = false;
};

/// dE/dtheta_i for every parameter by the two-point shift rule
/// E'(t) = [E(t + pi/2) - E(t - pi/2)] / 2, evaluated over the cones of the
/// energy terms that actually contain the parameter's gate.
std::vector<double> gradient(const MeraNetwork& net, const ParamVector& params);

/// Same derivative by reverse-mode differentiation through the contraction.
std::vector<double> gradient_adjoint(const MeraNetwork& net, const ParamVector& params);

OptResult optimize(const MeraConfig& config, const OptConfig& opt);

/// Generic limited-memory quasi-Newton with strong-Wolfe line search.
struct LbfgsResult {
    std::vector<double> x;
    double f = 0;
    bool converged = false;
    bool line_search_failed = false;
    std::vector<std::pair<int, double>> trace;
    std::vector<double> gnorm_trace;
};

using ObjectiveFn =
    std::function<double(const std::vector<double>&, std::vector<double>&)>;  // f, writes grad

LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, std::vector<double> x0, int max_iters,
                           double halt_rel, int memory,
                           const std::function<void(int, const std::vector<double>&, double)>&
                               on_accept = nullptr);

}  // namespace qmera
