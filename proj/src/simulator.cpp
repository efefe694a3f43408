#include "qmera/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qmera {

using nlohmann::json;

void NoiseModel::check() const {
    if (scale < 0 || p0 < 0 || slope < 0 || idle_rate < 0)
        throw std::invalid_argument("noise model: negative rate");
    if (gate_error(M_PI) > 1.0)
        throw std::invalid_argument("noise model: gate error exceeds 1");
}

double NoiseModel::gate_error(double theta) const {
    return scale * (p0 + slope * std::abs(theta) / (M_PI / 2));
}

namespace {

constexpr double kHalf = 0.70710678118654752440;  // 1/sqrt(2)

struct State {
    int n;
    std::vector<cplx> a;

    explicit State(int nq) : n(nq), a(size_t(1) << nq, cplx(0, 0)) { a[0] = 1.0; }

    void apply1(const std::array<cplx, 4>& u, int q) {
        const uint64_t m = 1ull << q;
        for (uint64_t s = 0; s < a.size(); ++s) {
            if (s & m) continue;
            cplx v0 = a[s], v1 = a[s | m];
            a[s] = u[0] * v0 + u[1] * v1;
            a[s | m] = u[2] * v0 + u[3] * v1;
        }
    }

    // u is row-major 4x4 with basis index (b0<<1)|b1
    void apply2(const Mat4& u, int q0, int q1) {
        const uint64_t m0 = 1ull << q0, m1 = 1ull << q1;
        for (uint64_t s = 0; s < a.size(); ++s) {
            if (s & (m0 | m1)) continue;
            uint64_t idx[4] = {s, s | m1, s | m0, s | m0 | m1};
            cplx v[4];
            for (int i = 0; i < 4; ++i) v[i] = a[idx[i]];
            for (int i = 0; i < 4; ++i) {
                cplx acc(0, 0);
                for (int j = 0; j < 4; ++j) acc += u[i * 4 + j] * v[j];
                a[idx[i]] = acc;
            }
        }
    }

    double prob1(int q) const {
        const uint64_t m = 1ull << q;
        double p = 0;
        for (uint64_t s = 0; s < a.size(); ++s)
            if (s & m) p += std::norm(a[s]);
        return p;
    }

    // Project qubit q onto |bit> and renormalize by the given probability.
    void project(int q, int bit, double prob) {
        const double inv = 1.0 / std::sqrt(prob);
        for (uint64_t s = 0; s < a.size(); ++s) {
            if ((int)((s >> q) & 1) == bit)
                a[s] *= inv;
            else
                a[s] = cplx(0, 0);
        }
    }

    void flip(int q) {  // Pauli X
        const uint64_t m = 1ull << q;
        for (uint64_t s = 0; s < a.size(); ++s)
            if (!(s & m)) std::swap(a[s], a[s | m]);
    }

    void phase_flip(int q) {  // Pauli Z
        const uint64_t m = 1ull << q;
        for (uint64_t s = 0; s < a.size(); ++s)
            if (s & m) a[s] = -a[s];
    }

    void pauli_y(int q) {
        const uint64_t m = 1ull << q;
        for (uint64_t s = 0; s < a.size(); ++s)
            if (!(s & m)) {
                cplx v0 = a[s], v1 = a[s | m];
                a[s] = cplx(0, -1) * v1;
                a[s | m] = cplx(0, 1) * v0;
            }
    }
};

void apply_unitary(State& st, const CircuitOp& op) {
    switch (op.kind) {
        case OpKind::RZ:
            st.apply1({std::exp(cplx(0, -op.param / 2)), 0, 0,
                       std::exp(cplx(0, op.param / 2))},
                      op.q0);
            break;
        case OpKind::H:
            st.apply1({cplx(kHalf, 0), cplx(kHalf, 0), cplx(kHalf, 0), cplx(-kHalf, 0)},
                      op.q0);
            break;
        case OpKind::UXX: st.apply2(uxx_matrix(op.param), op.q0, op.q1); break;
        case OpKind::UYY: st.apply2(uyy_matrix(op.param), op.q0, op.q1); break;
        case OpKind::UZZ: st.apply2(uzz_matrix(op.param), op.q0, op.q1); break;
        case OpKind::CX: {
            Mat4 cx{};
            cx[0 * 4 + 0] = cx[1 * 4 + 1] = cx[2 * 4 + 3] = cx[3 * 4 + 2] = 1.0;
            st.apply2(cx, op.q0, op.q1);
            break;
        }
        default:
            throw std::logic_error("apply_unitary: non-unitary op");
    }
}

void apply_pauli(State& st, int which, int q) {
    if (which == 1) st.flip(q);
    else if (which == 2) st.pauli_y(q);
    else if (which == 3) st.phase_flip(q);
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

void branch(State st, const Circuit& c, size_t pos, double weight,
            std::vector<uint8_t>& bits,
            std::map<std::vector<uint8_t>, double>& acc) {
    constexpr double kPrune = 1e-14;
    for (size_t i = pos; i < c.ops.size(); ++i) {
        const auto& op = c.ops[i];
        if (op.kind == OpKind::MEASZ || op.kind == OpKind::RESET) {
            double p1 = st.prob1(op.q0);
            for (int bit : {0, 1}) {
                double p = bit ? p1 : 1.0 - p1;
                if (weight * p < kPrune) continue;
                State sub = st;
                sub.project(op.q0, bit, p);
                if (op.kind == OpKind::RESET) {
                    if (bit) sub.flip(op.q0);
                } else {
                    bits[op.cbit] = (uint8_t)bit;
                }
                branch(std::move(sub), c, i + 1, weight * p, bits, acc);
            }
            return;
        }
        apply_unitary(st, op);
    }
    acc[bits] += weight;
}

}  // namespace

OutcomeDist run_noiseless(const Circuit& c, int max_qubits) {
    c.check();
    if (c.num_qubits > max_qubits)
        throw std::invalid_argument("run_noiseless: circuit too wide for exact enumeration");
    std::map<std::vector<uint8_t>, double> acc;
    std::vector<uint8_t> bits(c.cbits.size(), 0);
    branch(State(c.num_qubits), c, 0, 1.0, bits, acc);
    OutcomeDist d;
    for (const auto& cb : c.cbits) d.roles.push_back(cb.role);
    for (auto& [k, v] : acc) d.outcomes.push_back({k, v});
    return d;
}

ShotTable run_shots(const Circuit& c, const NoiseModel& noise, int shots, uint64_t seed,
                    const std::string& circuit_id) {
    c.check();
    noise.check();
    if (shots < 0) throw std::invalid_argument("run_shots: negative shot count");
    ShotTable t;
    for (const auto& cb : c.cbits) t.roles.push_back(cb.role);
    t.circuit_id = circuit_id;
    t.noise_scale = noise.scale;
    t.seed = seed;
    t.rows.reserve(shots);

    for (int shot = 0; shot < shots; ++shot) {
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64((uint64_t)shot)));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        State st(c.num_qubits);
        std::vector<uint8_t> bits(c.cbits.size(), 0);
        std::vector<double> clock(c.num_qubits, 0.0);  // per-qubit idle time origin
        for (const auto& op : c.ops) {
            if (op.kind == OpKind::MEASZ || op.kind == OpKind::RESET) {
                double p1 = st.prob1(op.q0);
                int bit = u(rng) < p1 ? 1 : 0;
                st.project(op.q0, bit, bit ? p1 : 1.0 - p1);
                if (op.kind == OpKind::RESET) {
                    if (bit) st.flip(op.q0);
                    clock[op.q0] = 0.0;  // fresh qubit: no accrued idle history
                } else {
                    bits[op.cbit] = (uint8_t)bit;
                }
                continue;
            }
            if (op.is_two_qubit()) {
                // idle dephasing accrued since each qubit's previous entangler
                double now = std::max(clock[op.q0], clock[op.q1]);
                for (int q : {op.q0, op.q1}) {
                    double p_idle =
                        std::min(1.0, noise.scale * noise.idle_rate * (now - clock[q]));
                    if (p_idle > 0 && u(rng) < p_idle) st.phase_flip(q);
                }
                apply_unitary(st, op);
                double theta = op.kind == OpKind::CX ? M_PI / 2 : op.param;
                double p_gate = std::min(1.0, noise.gate_error(theta));
                if (p_gate > 0 && u(rng) < p_gate) {
                    // uniform over the 15 non-identity two-qubit Paulis
                    int k = 1 + (int)(u(rng) * 15.0);
                    if (k > 15) k = 15;
                    apply_pauli(st, k & 3, op.q1);
                    apply_pauli(st, (k >> 2) & 3, op.q0);
                }
                clock[op.q0] = clock[op.q1] = now + 2.0;
            } else {
                apply_unitary(st, op);
            }
        }
        t.rows.push_back(std::move(bits));
    }
    return t;
}

OutcomeDist empirical_dist(const ShotTable& t) {
    std::map<std::vector<uint8_t>, double> acc;
    for (const auto& row : t.rows) acc[row] += 1.0;
    OutcomeDist d;
    d.roles = t.roles;
    const double inv = t.rows.empty() ? 0.0 : 1.0 / (double)t.rows.size();
    for (auto& [k, v] : acc) d.outcomes.push_back({k, v * inv});
    return d;
}

double total_variation(const OutcomeDist& a, const OutcomeDist& b) {
    if (a.roles.size() != b.roles.size())
        throw std::invalid_argument("total_variation: mismatched classical registers");
    std::map<std::vector<uint8_t>, double> diff;
    for (const auto& [k, p] : a.outcomes) diff[k] += p;
    for (const auto& [k, p] : b.outcomes) diff[k] -= p;
    double tv = 0;
    for (const auto& [k, d] : diff) tv += std::abs(d);
    return tv / 2;
}

void save_shots(const ShotTable& t, const std::string& csv_path) {
    std::ofstream f(csv_path);
    if (!f) throw std::runtime_error("cannot write " + csv_path);
    f << "shot";
    for (size_t i = 0; i < t.roles.size(); ++i) f << ",c" << i;
    f << "\n";
    for (size_t r = 0; r < t.rows.size(); ++r) {
        f << r;
        for (uint8_t b : t.rows[r]) f << ',' << (int)b;
        f << "\n";
    }
    json meta;
    meta["circuit_id"] = t.circuit_id;
    meta["noise_scale"] = t.noise_scale;
    meta["seed"] = t.seed;
    meta["shots"] = t.rows.size();
    std::vector<std::string> roles;
    for (BitRole r : t.roles) roles.push_back(role_name(r));
    meta["roles"] = roles;
    std::ofstream mf(csv_path + ".json");
    if (!mf) throw std::runtime_error("cannot write " + csv_path + ".json");
    mf << meta.dump(2) << "\n";
}

ShotTable load_shots(const std::string& csv_path) {
    std::ifstream mf(csv_path + ".json");
    if (!mf) throw std::runtime_error("cannot read " + csv_path + ".json");
    json meta = json::parse(mf);
    ShotTable t;
    t.circuit_id = meta.at("circuit_id").get<std::string>();
    t.noise_scale = meta.at("noise_scale").get<double>();
    t.seed = meta.at("seed").get<uint64_t>();
    for (const auto& r : meta.at("roles")) {
        std::string s = r.get<std::string>();
        if (s == "cone_exit") t.roles.push_back(BitRole::cone_exit);
        else if (s == "site_z") t.roles.push_back(BitRole::site_z);
        else if (s == "xx_ancilla") t.roles.push_back(BitRole::xx_ancilla);
        else throw std::runtime_error("unknown role in shot metadata: " + s);
    }
    std::ifstream f(csv_path);
    if (!f) throw std::runtime_error("cannot read " + csv_path);
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<uint8_t> row;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');  // shot index
        while (std::getline(ss, cell, ',')) row.push_back((uint8_t)std::stoi(cell));
        if (row.size() != t.roles.size())
            throw std::runtime_error("shot row width does not match metadata");
        t.rows.push_back(std::move(row));
    }
    if ((size_t)meta.at("shots").get<uint64_t>() != t.rows.size())
        throw std::runtime_error("shot count does not match metadata");
    return t;
}

}  // namespace qmera
