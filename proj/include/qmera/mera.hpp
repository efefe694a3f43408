#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "qmera/tensor.hpp"

namespace qmera {

struct MeraConfig {
    int L = 8;                          // sites, power of 2, >= 8
    int chi = 2;                        // bond dimension, 2 or 4
    bool drop_top_disentanglers = true; // per the top-layer ablation
    double J = 1.0, h = 1.0;
};

void validate(const MeraConfig& c);  // throws on bad L/chi

/// Z2-symmetric two-qubit gate:
///   U = (RZ(post0) x RZ(post1)) . U_YY(alpha) . U_XX(theta) . (RZ(pre0) x RZ(pre1))
/// with U_XX(t) = exp(-i t/2 XX), U_YY(a) = exp(-i a/2 YY), RZ(p) = exp(-i p/2 Z).
struct TwoQubitGateParams {
    double pre_z0 = 0, pre_z1 = 0;
    double theta_xx = 0;
    double alpha_yy = 0;
    double post_z0 = 0, post_z1 = 0;
};

using Mat4 = std::array<cplx, 16>;  // row-major, basis index (b0<<1)|b1

Mat4 gate_unitary(const TwoQubitGateParams& g);
Mat4 uxx_matrix(double theta);
Mat4 uyy_matrix(double alpha);
Mat4 uzz_matrix(double theta);

enum class BlockKind { Top, Isometry, Disentangler };

struct MeraGate {
    int w0, w1;       // wires (wire id == final site index)
    int param_base;   // 6 params: pre_z0, pre_z1, theta_xx, alpha_yy, post_z0, post_z1
};

struct Block {
    BlockKind kind;
    int layer;                 // 0 = top, increasing toward the sites
    std::vector<int> wires;    // block wires in spatial order
    std::vector<int> gates;    // indices into MeraNetwork::gates, time order
};

using ParamVector = std::vector<double>;

struct MeraNetwork {
    MeraConfig config;
    std::vector<Block> blocks;
    std::vector<MeraGate> gates;   // global circuit-time order
    int num_params = 0;
    ParamVector params;

    int num_layers = 0;
    std::vector<int> birth_gate;           // per wire: first gate touching it
    std::vector<std::vector<int>> wire_gates;  // per wire: gate indices, time order

    TwoQubitGateParams gate_params(int gate_idx) const;
    Mat4 unitary(int gate_idx) const;
};

/// Number of parameters for a config (build-free).
int param_count(const MeraConfig& config);

MeraNetwork build_mera(const MeraConfig& config, const ParamVector& params);

struct CausalCone {
    std::vector<int> sites;    // output sites, sorted
    std::vector<int> gates;    // global gate indices, circuit-time order
    std::vector<int> wires;    // all wires in the cone, sorted
    // events in cone circuit-time order; position = index into gates
    std::vector<std::pair<int, int>> injections;  // (gate position, wire) wire born before that gate
    std::vector<std::pair<int, int>> exits;       // (gate position, wire) wire leaves after that gate
};

CausalCone causal_cone(const MeraNetwork& net, const std::vector<int>& sites);

/// Hermitian Pauli string observable, e.g. {{j,'X'},{k,'X'}}.
struct PauliString {
    std::vector<std::pair<int, char>> factors;  // (site, 'X'|'Y'|'Z'), distinct sites
};

/// <psi|O|psi> via causal-cone contraction of the network with its conjugate
/// (density matrix carried through the cone in circuit-time order, exited
/// wires traced eagerly). Observable support limited to 4 sites.
double expect_local(const MeraNetwork& net, const PauliString& obs);

/// E = sum_j [ -J <X_j X_{j+1}> - h <Z_j> ], periodic wrap, one cone per term.
double energy(const MeraNetwork& net);

// ---- serialization ----
std::string to_json(const MeraNetwork& net);                 // {config, param_index, params, layout_version}
MeraNetwork network_from_json(const std::string& json_text); // bit-exact round trip
void save_network(const MeraNetwork& net, const std::string& path);
MeraNetwork load_network(const std::string& path);

}  // namespace qmera
