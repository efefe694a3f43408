#include "qmera/circuit.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace qmera {

using nlohmann::json;

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::RZ: return "RZ";
        case OpKind::UXX: return "UXX";
        case OpKind::UYY: return "UYY";
        case OpKind::UZZ: return "UZZ";
        case OpKind::H: return "H";
        case OpKind::CX: return "CX";
        case OpKind::RESET: return "RESET";
        default: return "MEASZ";
    }
}

const char* role_name(BitRole r) {
    switch (r) {
        case BitRole::cone_exit: return "cone_exit";
        case BitRole::site_z: return "site_z";
        default: return "xx_ancilla";
    }
}

static OpKind op_from(const std::string& s) {
    for (OpKind k : {OpKind::RZ, OpKind::UXX, OpKind::UYY, OpKind::UZZ, OpKind::H,
                     OpKind::CX, OpKind::RESET, OpKind::MEASZ})
        if (s == op_name(k)) return k;
    throw std::invalid_argument("unknown circuit op: " + s);
}

static BitRole role_from(const std::string& s) {
    for (BitRole r : {BitRole::cone_exit, BitRole::site_z, BitRole::xx_ancilla})
        if (s == role_name(r)) return r;
    throw std::invalid_argument("unknown classical-bit role: " + s);
}

void Circuit::check() const {
    std::vector<bool> dead(num_qubits, false);
    std::vector<bool> cbit_used(cbits.size(), false);
    for (const auto& op : ops) {
        int nq = op.is_two_qubit() ? 2 : 1;
        for (int i = 0; i < nq; ++i) {
            int q = i == 0 ? op.q0 : op.q1;
            if (q < 0 || q >= num_qubits)
                throw std::runtime_error("circuit op references invalid qubit");
            if (dead[q] && op.kind != OpKind::RESET)
                throw std::runtime_error("qubit used after final MEASZ without RESET");
        }
        if (op.is_two_qubit() && op.q0 == op.q1)
            throw std::runtime_error("two-qubit op with repeated qubit");
        if (op.kind == OpKind::MEASZ) {
            if (op.cbit < 0 || op.cbit >= (int)cbits.size())
                throw std::runtime_error("MEASZ references invalid classical bit");
            if (cbit_used[op.cbit])
                throw std::runtime_error("classical bit written twice");
            cbit_used[op.cbit] = true;
            dead[op.q0] = true;
        }
        if (op.kind == OpKind::RESET) dead[op.q0] = false;
    }
}

int Circuit::two_qubit_gates() const {
    int n = 0;
    for (const auto& op : ops)
        if (op.is_two_qubit()) n++;
    return n;
}

LoweredCone lower(const MeraNetwork& net, const CausalCone& cone) {
    LoweredCone lc;
    Circuit& c = lc.circuit;
    std::unordered_map<int, int> qubit_of_wire;
    for (const auto& [pos, w] : cone.injections) {
        qubit_of_wire[w] = (int)lc.wire_of_qubit.size();
        lc.wire_of_qubit.push_back(w);
    }
    c.num_qubits = (int)lc.wire_of_qubit.size();

    // exits grouped by gate position for O(1) lookup during emission
    size_t next_exit = 0;
    for (int p = 0; p < (int)cone.gates.size(); ++p) {
        const MeraGate& g = net.gates[cone.gates[p]];
        TwoQubitGateParams gp = net.gate_params(cone.gates[p]);
        int q0 = qubit_of_wire.at(g.w0), q1 = qubit_of_wire.at(g.w1);
        c.ops.push_back({OpKind::RZ, q0, -1, gp.pre_z0, -1});
        c.ops.push_back({OpKind::RZ, q1, -1, gp.pre_z1, -1});
        c.ops.push_back({OpKind::UXX, q0, q1, gp.theta_xx, -1});
        c.ops.push_back({OpKind::UYY, q0, q1, gp.alpha_yy, -1});
        c.ops.push_back({OpKind::RZ, q0, -1, gp.post_z0, -1});
        c.ops.push_back({OpKind::RZ, q1, -1, gp.post_z1, -1});
        while (next_exit < cone.exits.size() && cone.exits[next_exit].first == p) {
            int w = cone.exits[next_exit].second;
            int cb = (int)c.cbits.size();
            c.cbits.push_back({BitRole::cone_exit});
            c.ops.push_back({OpKind::MEASZ, qubit_of_wire.at(w), -1, 0, cb});
            next_exit++;
        }
    }
    for (int s : cone.sites) lc.output_qubits.push_back(qubit_of_wire.at(s));
    c.check();
    return lc;
}

Circuit lower_full(const MeraNetwork& net) {
    Circuit c;
    c.num_qubits = net.config.L;
    for (size_t g = 0; g < net.gates.size(); ++g) {
        const MeraGate& mg = net.gates[g];
        TwoQubitGateParams gp = net.gate_params((int)g);
        c.ops.push_back({OpKind::RZ, mg.w0, -1, gp.pre_z0, -1});
        c.ops.push_back({OpKind::RZ, mg.w1, -1, gp.pre_z1, -1});
        c.ops.push_back({OpKind::UXX, mg.w0, mg.w1, gp.theta_xx, -1});
        c.ops.push_back({OpKind::UYY, mg.w0, mg.w1, gp.alpha_yy, -1});
        c.ops.push_back({OpKind::RZ, mg.w0, -1, gp.post_z0, -1});
        c.ops.push_back({OpKind::RZ, mg.w1, -1, gp.post_z1, -1});
    }
    c.check();
    return c;
}

Circuit attach_gadget(const Circuit& c, int qj, int qk) {
    if (qj == qk) throw std::invalid_argument("attach_gadget: need two distinct qubits");
    for (const auto& op : c.ops)
        if (op.kind == OpKind::MEASZ && (op.q0 == qj || op.q0 == qk))
            throw std::invalid_argument("attach_gadget: target qubit already measured");
    Circuit g = c;
    int anc = g.num_qubits++;
    int cb_anc = (int)g.cbits.size();
    g.cbits.push_back({BitRole::xx_ancilla});
    int cb_j = (int)g.cbits.size();
    g.cbits.push_back({BitRole::site_z});
    int cb_k = (int)g.cbits.size();
    g.cbits.push_back({BitRole::site_z});
    g.ops.push_back({OpKind::H, anc, -1, 0, -1});
    g.ops.push_back({OpKind::CX, anc, qj, 0, -1});
    g.ops.push_back({OpKind::CX, anc, qk, 0, -1});
    g.ops.push_back({OpKind::H, anc, -1, 0, -1});
    g.ops.push_back({OpKind::MEASZ, anc, -1, 0, cb_anc});
    g.ops.push_back({OpKind::MEASZ, qj, -1, 0, cb_j});
    g.ops.push_back({OpKind::MEASZ, qk, -1, 0, cb_k});
    g.check();
    return g;
}

Circuit fold_zne(const Circuit& c, int m) {
    if (m < 1 || m % 2 == 0)
        throw std::invalid_argument("fold_zne: m must be an odd integer >= 1");
    Circuit f;
    f.num_qubits = c.num_qubits;
    f.cbits = c.cbits;
    const int reps = (m - 1) / 2;
    for (const auto& op : c.ops) {
        f.ops.push_back(op);
        if (!op.is_two_qubit()) continue;
        if (op.kind == OpKind::CX) {
            for (int r = 0; r < 2 * reps; ++r) f.ops.push_back(op);
            continue;
        }
        // sandwich each extra pair of copies in a conjugation that flips the
        // entangler's angle, so the composite equals the original unitary while
        // every copy keeps the same-sign angle (and thus the same gate error)
        bool zz = op.kind == OpKind::UZZ;
        for (int r = 0; r < reps; ++r) {
            // P1 realized exactly: RZ(pi) (+H conjugation for the ZZ case)
            if (zz) f.ops.push_back({OpKind::H, op.q0, -1, 0, -1});
            f.ops.push_back({OpKind::RZ, op.q0, -1, M_PI, -1});
            if (zz) f.ops.push_back({OpKind::H, op.q0, -1, 0, -1});
            f.ops.push_back(op);
            if (zz) f.ops.push_back({OpKind::H, op.q0, -1, 0, -1});
            f.ops.push_back({OpKind::RZ, op.q0, -1, -M_PI, -1});
            if (zz) f.ops.push_back({OpKind::H, op.q0, -1, 0, -1});
            f.ops.push_back(op);
        }
    }
    f.check();
    return f;
}

std::string circuit_to_jsonl(const Circuit& c) {
    std::ostringstream out;
    for (const auto& op : c.ops) {
        json j;
        j["op"] = op_name(op.kind);
        j["qubits"] = op.is_two_qubit() ? json::array({op.q0, op.q1})
                                        : json::array({op.q0});
        if (op.kind == OpKind::RZ || op.kind == OpKind::UXX || op.kind == OpKind::UYY ||
            op.kind == OpKind::UZZ)
            j["params"] = json::array({op.param});
        if (op.kind == OpKind::MEASZ) {
            j["cbit"] = op.cbit;
            j["role"] = role_name(c.cbits[op.cbit].role);
        }
        out << j.dump() << "\n";
    }
    return out.str();
}

Circuit circuit_from_jsonl(const std::string& text) {
    Circuit c;
    std::istringstream in(text);
    std::string line;
    int max_q = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        CircuitOp op{};
        op.kind = op_from(j.at("op").get<std::string>());
        auto qs = j.at("qubits");
        op.q0 = qs.at(0).get<int>();
        op.q1 = qs.size() > 1 ? qs.at(1).get<int>() : -1;
        if (j.contains("params")) op.param = j["params"].at(0).get<double>();
        if (op.kind == OpKind::MEASZ) {
            op.cbit = j.at("cbit").get<int>();
            if ((int)c.cbits.size() <= op.cbit) c.cbits.resize(op.cbit + 1);
            c.cbits[op.cbit].role = role_from(j.at("role").get<std::string>());
        }
        max_q = std::max({max_q, op.q0, op.q1});
        c.ops.push_back(op);
    }
    c.num_qubits = max_q + 1;
    c.check();
    return c;
}

void save_circuit(const Circuit& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << circuit_to_jsonl(c);
}

Circuit load_circuit(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return circuit_from_jsonl(ss.str());
}

}  // namespace qmera
