#include "qmera/mera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qmera {

using nlohmann::json;

void validate(const MeraConfig& c) {
    if (c.L < 8 || (c.L & (c.L - 1)) != 0)
        throw std::invalid_argument("MeraConfig: L must be a power of 2, >= 8");
    if (c.chi != 2 && c.chi != 4)
        throw std::invalid_argument("MeraConfig: chi must be 2 or 4");
}

Mat4 uxx_matrix(double theta) {
    double c = std::cos(theta / 2), s = std::sin(theta / 2);
    Mat4 m{};
    for (int i = 0; i < 4; ++i) {
        m[i * 4 + i] = c;
        m[i * 4 + (3 - i)] = cplx(0, -s);
    }
    return m;
}

Mat4 uyy_matrix(double alpha) {
    double c = std::cos(alpha / 2), s = std::sin(alpha / 2);
    // Y x Y maps |00> -> -|11>, |01> -> |10>, |10> -> |01>, |11> -> -|00>
    Mat4 m{};
    double sign[4] = {-1, 1, 1, -1};
    for (int i = 0; i < 4; ++i) {
        m[i * 4 + i] = c;
        m[(3 - i) * 4 + i] = cplx(0, -s) * sign[i];
    }
    return m;
}

Mat4 uzz_matrix(double theta) {
    Mat4 m{};
    double zz[4] = {1, -1, -1, 1};
    for (int i = 0; i < 4; ++i) m[i * 4 + i] = std::exp(cplx(0, -theta / 2 * zz[i]));
    return m;
}

static Mat4 matmul(const Mat4& a, const Mat4& b) {
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
            cplx aik = a[i * 4 + k];
            if (aik == cplx(0, 0)) continue;
            for (int j = 0; j < 4; ++j) r[i * 4 + j] += aik * b[k * 4 + j];
        }
    return r;
}

static Mat4 rz_pair(double p0, double p1) {
    Mat4 m{};
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1) {
            double ph = (b0 ? p0 : -p0) / 2 + (b1 ? p1 : -p1) / 2;
            m[(b0 * 2 + b1) * 4 + (b0 * 2 + b1)] = std::exp(cplx(0, ph));
        }
    return m;
}

Mat4 gate_unitary(const TwoQubitGateParams& g) {
    Mat4 m = rz_pair(g.pre_z0, g.pre_z1);
    m = matmul(uxx_matrix(g.theta_xx), m);
    m = matmul(uyy_matrix(g.alpha_yy), m);
    m = matmul(rz_pair(g.post_z0, g.post_z1), m);
    return m;
}

TwoQubitGateParams MeraNetwork::gate_params(int gate_idx) const {
    const MeraGate& g = gates[gate_idx];
    TwoQubitGateParams p;
    p.pre_z0 = params[g.param_base + 0];
    p.pre_z1 = params[g.param_base + 1];
    p.theta_xx = params[g.param_base + 2];
    p.alpha_yy = params[g.param_base + 3];
    p.post_z0 = params[g.param_base + 4];
    p.post_z1 = params[g.param_base + 5];
    return p;
}

Mat4 MeraNetwork::unitary(int gate_idx) const { return gate_unitary(gate_params(gate_idx)); }

namespace {

// Builder working with transient wire ids; relabeled to site order at the end.
struct Builder {
    MeraConfig cfg;
    int next_wire = 0;
    int next_param = 0;
    std::vector<Block> blocks;
    std::vector<MeraGate> gates;

    int fresh() { return next_wire++; }

    void add_gate(Block& b, int w0, int w1) {
        MeraGate g{w0, w1, next_param};
        next_param += 6;
        b.gates.push_back((int)gates.size());
        gates.push_back(g);
    }

    // depth-2 brick wall on the block's wires: chi=4 -> (0,1),(2,3) then (1,2);
    // chi=2 -> a single gate
    void brickwall(Block& b) {
        const auto& w = b.wires;
        if (w.size() == 2) {
            add_gate(b, w[0], w[1]);
        } else {
            add_gate(b, w[0], w[1]);
            add_gate(b, w[2], w[3]);
            add_gate(b, w[1], w[2]);
        }
    }
};

}  // namespace

static MeraNetwork build_structure(const MeraConfig& config) {
    validate(config);
    const int q = config.chi == 4 ? 2 : 1;  // qubits per bond
    Builder B;
    B.cfg = config;

    // bonds on the current (coarse) lattice, each a list of q wires in spatial order
    std::vector<std::vector<int>> bonds;

    // top tensor on the two coarsest bonds
    {
        Block top{BlockKind::Top, 0, {}, {}};
        std::vector<int> b0, b1;
        for (int i = 0; i < q; ++i) b0.push_back(B.fresh());
        for (int i = 0; i < q; ++i) b1.push_back(B.fresh());
        for (int x : b0) top.wires.push_back(x);
        for (int x : b1) top.wires.push_back(x);
        B.brickwall(top);
        B.blocks.push_back(std::move(top));
        bonds = {b0, b1};
    }

    int layer = 1;
    const int target_bonds = config.chi == 4 ? config.L / 2 : config.L;
    while ((int)bonds.size() < target_bonds) {
        // isometries: each bond expands into two, fresh qubits on the outer positions
        std::vector<std::vector<int>> next;
        for (auto& b : bonds) {
            Block iso{BlockKind::Isometry, layer, {}, {}};
            if (q == 2) {
                int f0 = B.fresh(), f1 = B.fresh();
                iso.wires = {f0, b[0], b[1], f1};
                B.brickwall(iso);
                next.push_back({f0, b[0]});
                next.push_back({b[1], f1});
            } else {
                int f = B.fresh();
                iso.wires = {b[0], f};
                B.brickwall(iso);
                next.push_back({b[0]});
                next.push_back({f});
            }
            B.blocks.push_back(std::move(iso));
        }
        bonds = std::move(next);
        // disentanglers across the boundaries between sibling pairs, periodic
        bool drop = config.drop_top_disentanglers && layer == 1;
        if (!drop) {
            int nb = (int)bonds.size();
            for (int i = 1; i < nb; i += 2) {
                Block dis{BlockKind::Disentangler, layer, {}, {}};
                for (int x : bonds[i]) dis.wires.push_back(x);
                for (int x : bonds[(i + 1) % nb]) dis.wires.push_back(x);
                B.brickwall(dis);
                B.blocks.push_back(std::move(dis));
            }
        }
        layer++;
    }

    if (config.chi == 4) {
        // each bond's two qubits are directly two neighboring output sites;
        // no separate site-scale layer
        std::vector<std::vector<int>> sites;
        for (auto& b : bonds) {
            sites.push_back({b[0]});
            sites.push_back({b[1]});
        }
        bonds = std::move(sites);
    }

    // relabel wires so that wire id == final site index
    std::vector<int> site_of(B.next_wire, -1);
    for (int s = 0; s < (int)bonds.size(); ++s) site_of[bonds[s][0]] = s;
    for (auto& g : B.gates) {
        g.w0 = site_of[g.w0];
        g.w1 = site_of[g.w1];
    }
    for (auto& blk : B.blocks)
        for (auto& w : blk.wires) w = site_of[w];

    MeraNetwork net;
    net.config = config;
    net.blocks = std::move(B.blocks);
    net.gates = std::move(B.gates);
    net.num_params = B.next_param;
    net.num_layers = layer;

    net.birth_gate.assign(config.L, -1);
    net.wire_gates.assign(config.L, {});
    for (int gi = 0; gi < (int)net.gates.size(); ++gi) {
        for (int w : {net.gates[gi].w0, net.gates[gi].w1}) {
            if (net.birth_gate[w] < 0) net.birth_gate[w] = gi;
            net.wire_gates[w].push_back(gi);
        }
    }
    return net;
}

MeraNetwork build_mera(const MeraConfig& config, const ParamVector& params) {
    MeraNetwork net = build_structure(config);
    if ((int)params.size() != net.num_params)
        throw std::invalid_argument("build_mera: params length " + std::to_string(params.size()) +
                                    " != expected " + std::to_string(net.num_params));
    net.params = params;
    return net;
}

int param_count(const MeraConfig& config) { return build_structure(config).num_params; }

CausalCone causal_cone(const MeraNetwork& net, const std::vector<int>& sites) {
    if (sites.empty()) throw std::invalid_argument("causal_cone: empty site set");
    std::set<int> site_set;
    for (int s : sites) {
        if (s < 0 || s >= net.config.L) throw std::invalid_argument("causal_cone: site out of range");
        site_set.insert(s);
    }
    std::vector<bool> live(net.config.L, false);
    for (int s : site_set) live[s] = true;
    std::vector<bool> in_cone(net.gates.size(), false);
    for (int gi = (int)net.gates.size() - 1; gi >= 0; --gi) {
        const auto& g = net.gates[gi];
        if (live[g.w0] || live[g.w1]) {
            in_cone[gi] = true;
            live[g.w0] = live[g.w1] = true;
        }
    }
    CausalCone cone;
    cone.sites.assign(site_set.begin(), site_set.end());
    std::set<int> wires;
    for (int gi = 0; gi < (int)net.gates.size(); ++gi)
        if (in_cone[gi]) {
            cone.gates.push_back(gi);
            wires.insert(net.gates[gi].w0);
            wires.insert(net.gates[gi].w1);
        }
    cone.wires.assign(wires.begin(), wires.end());

    // injections: wire born at its first cone gate; exits: after its last cone
    // gate unless the wire is an output site
    std::vector<int> first_pos(net.config.L, -1), last_pos(net.config.L, -1);
    for (int p = 0; p < (int)cone.gates.size(); ++p) {
        const auto& g = net.gates[cone.gates[p]];
        for (int w : {g.w0, g.w1}) {
            if (first_pos[w] < 0) first_pos[w] = p;
            last_pos[w] = p;
        }
    }
    for (int w : cone.wires) {
        cone.injections.push_back({first_pos[w], w});
        if (!site_set.count(w)) cone.exits.push_back({last_pos[w], w});
    }
    auto by_pos = [](const std::pair<int, int>& a, const std::pair<int, int>& b) {
        return a < b;
    };
    std::sort(cone.injections.begin(), cone.injections.end(), by_pos);
    std::sort(cone.exits.begin(), cone.exits.end(), by_pos);
    return cone;
}

// ---- serialization ----

static const char* kind_name(BlockKind k) {
    switch (k) {
        case BlockKind::Top: return "top";
        case BlockKind::Isometry: return "isometry";
        default: return "disentangler";
    }
}

static BlockKind kind_from(const std::string& s) {
    if (s == "top") return BlockKind::Top;
    if (s == "isometry") return BlockKind::Isometry;
    if (s == "disentangler") return BlockKind::Disentangler;
    throw std::invalid_argument("unknown block kind: " + s);
}

std::string to_json(const MeraNetwork& net) {
    json j;
    j["layout_version"] = 1;
    j["config"] = {{"L", net.config.L},
                   {"chi", net.config.chi},
                   {"drop_top_disentanglers", net.config.drop_top_disentanglers},
                   {"J", net.config.J},
                   {"h", net.config.h}};
    json blocks = json::array();
    static const char* fields[6] = {"pre_z0", "pre_z1", "theta_xx", "alpha_yy", "post_z0", "post_z1"};
    json pidx = json::array();
    for (size_t bi = 0; bi < net.blocks.size(); ++bi) {
        const auto& b = net.blocks[bi];
        json jb;
        jb["kind"] = kind_name(b.kind);
        jb["layer"] = b.layer;
        jb["wires"] = b.wires;
        json gs = json::array();
        for (size_t k = 0; k < b.gates.size(); ++k) {
            int gi = b.gates[k];
            const auto& g = net.gates[gi];
            gs.push_back({{"w0", g.w0}, {"w1", g.w1}, {"param_base", g.param_base}});
            for (int f = 0; f < 6; ++f)
                pidx.push_back({{"param", g.param_base + f},
                                {"block", bi},
                                {"gate", k},
                                {"field", fields[f]}});
        }
        jb["gates"] = gs;
        blocks.push_back(jb);
    }
    j["blocks"] = blocks;
    j["param_index"] = pidx;
    j["params"] = net.params;
    return j.dump();
}

MeraNetwork network_from_json(const std::string& text) {
    json j = json::parse(text);
    MeraConfig c;
    c.L = j["config"]["L"];
    c.chi = j["config"]["chi"];
    c.drop_top_disentanglers = j["config"]["drop_top_disentanglers"];
    c.J = j["config"]["J"];
    c.h = j["config"]["h"];
    ParamVector p = j["params"].get<ParamVector>();
    MeraNetwork net = build_mera(c, p);
    // sanity: stored layout must match the rebuilt one
    size_t nb = j["blocks"].size();
    if (nb != net.blocks.size())
        throw std::runtime_error("network_from_json: layout mismatch (block count)");
    return net;
}

void save_network(const MeraNetwork& net, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << to_json(net) << "\n";
}

MeraNetwork load_network(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return network_from_json(ss.str());
}

}  // namespace qmera
