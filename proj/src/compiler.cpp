#include "qmera/compiler.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "qmera/simulator.hpp"

namespace qmera {

namespace {

// Indices of the ops that must run before op `target` (its past light cone),
// restricted to not-yet-scheduled ops. `preds` holds, per op, the previous op
// index on each of its qubits (-1 if none).
std::vector<int> past_cone(int target, const std::vector<std::array<int, 2>>& preds,
                           const std::vector<bool>& scheduled) {
    std::vector<int> stack{target}, cone;
    std::vector<bool> seen(preds.size(), false);
    seen[target] = true;
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        cone.push_back(i);
        for (int p : preds[i])
            if (p >= 0 && !seen[p] && !scheduled[p]) {
                seen[p] = true;
                stack.push_back(p);
            }
    }
    std::sort(cone.begin(), cone.end());
    return cone;
}

}  // namespace

CompiledCircuit reuse_compile(const Circuit& c, ReuseMode mode, int cap) {
    c.check();
    for (const auto& op : c.ops)
        if (op.kind == OpKind::RESET)
            throw std::invalid_argument("reuse_compile expects a reuse-free input circuit");
    if (mode == ReuseMode::cap && cap < 1)
        throw std::invalid_argument("reuse_compile: cap mode needs a positive cap");

    CompiledCircuit out;
    out.mode = mode;
    out.status = "ok";
    if (mode == ReuseMode::none) {
        out.circuit = c;
        out.width = c.num_qubits;
        for (int q = 0; q < c.num_qubits; ++q) out.mapping.push_back({q, q});
        return out;
    }

    const int n_ops = (int)c.ops.size();
    std::vector<std::array<int, 2>> preds(n_ops, {-1, -1});
    std::vector<int> last(c.num_qubits, -1);
    std::vector<int> targets;  // MEASZ op indices, in circuit order
    for (int i = 0; i < n_ops; ++i) {
        const auto& op = c.ops[i];
        preds[i][0] = last[op.q0];
        last[op.q0] = i;
        if (op.is_two_qubit()) {
            preds[i][1] = last[op.q1];
            last[op.q1] = i;
        }
        if (op.kind == OpKind::MEASZ) targets.push_back(i);
    }

    Circuit& phys = out.circuit;
    phys.cbits = c.cbits;
    std::vector<bool> scheduled(n_ops, false);
    std::vector<int> phys_of(c.num_qubits, -1);  // -1 inactive, -2 retired
    std::set<int> free_phys;
    int next_phys = 0;

    auto allocate = [&](int logical) {
        int p;
        if (mode == ReuseMode::cap && next_phys < cap) {
            p = next_phys++;
        } else if (!free_phys.empty()) {
            p = *free_phys.begin();
            free_phys.erase(free_phys.begin());
            phys.ops.push_back({OpKind::RESET, p, -1, 0, -1});
        } else {
            p = next_phys++;
        }
        phys_of[logical] = p;
        out.mapping.push_back({logical, p});
        return p;
    };
    auto phys_q = [&](int logical) {
        if (phys_of[logical] < 0) return allocate(logical);
        return phys_of[logical];
    };
    auto emit = [&](int i) {
        CircuitOp op = c.ops[i];
        op.q0 = phys_q(op.q0);
        if (op.is_two_qubit()) op.q1 = phys_q(op.q1);
        phys.ops.push_back(op);
        scheduled[i] = true;
    };

    std::vector<bool> done(targets.size(), false);
    for (size_t round = 0; round < targets.size(); ++round) {
        // pick the measurement whose remaining cone activates fewest new qubits
        int best = -1, best_cost = -1;
        for (size_t t = 0; t < targets.size(); ++t) {
            if (done[t]) continue;
            std::vector<int> cone = past_cone(targets[t], preds, scheduled);
            std::set<int> fresh;
            for (int i : cone) {
                const auto& op = c.ops[i];
                if (phys_of[op.q0] == -1) fresh.insert(op.q0);
                if (op.is_two_qubit() && phys_of[op.q1] == -1) fresh.insert(op.q1);
            }
            int cost = (int)fresh.size();
            if (best < 0 || cost < best_cost ||
                (cost == best_cost &&
                 (targets[t] < targets[best] ||
                  (targets[t] == targets[best] &&
                   c.ops[targets[t]].q0 < c.ops[targets[best]].q0)))) {
                best = (int)t;
                best_cost = cost;
            }
        }
        for (int i : past_cone(targets[best], preds, scheduled)) emit(i);
        // the MEASZ just ran; retire its physical qubit for reuse
        int logical = c.ops[targets[best]].q0;
        free_phys.insert(phys_of[logical]);
        phys_of[logical] = -2;
        done[best] = true;
    }
    for (int i = 0; i < n_ops; ++i)
        if (!scheduled[i]) emit(i);

    phys.num_qubits = next_phys;
    out.width = next_phys;
    phys.check();
    return out;
}

int depth2q(const Circuit& c) {
    std::vector<int> last(c.num_qubits, 0);
    int depth = 0;
    for (const auto& op : c.ops) {
        if (!op.is_two_qubit()) continue;
        int d = 1 + std::max(last[op.q0], last[op.q1]);
        last[op.q0] = last[op.q1] = d;
        depth = std::max(depth, d);
    }
    return depth;
}

bool simulate_equivalence_check(const Circuit& original, const Circuit& compiled,
                                int max_qubits) {
    OutcomeDist a = run_noiseless(original, max_qubits);
    OutcomeDist b = run_noiseless(compiled, max_qubits);
    if (a.roles != b.roles) return false;
    return total_variation(a, b) < 1e-9;
}

ResourceStats resource_stats(const Circuit& c, int distance) {
    ResourceStats s;
    s.distance = distance;
    CompiledCircuit none = reuse_compile(c, ReuseMode::none);
    CompiledCircuit greedy = reuse_compile(c, ReuseMode::greedy);
    CompiledCircuit cap20 = reuse_compile(c, ReuseMode::cap, 20);
    s.width_no_reuse = none.width;
    s.width_greedy = greedy.width;
    s.width_cap20 = cap20.width;
    s.depth_no_reuse = depth2q(none.circuit);
    s.depth_greedy = depth2q(greedy.circuit);
    s.depth_cap20 = depth2q(cap20.circuit);
    return s;
}

void write_resource_csv(const std::vector<ResourceStats>& rows, const std::string& path,
                        const std::string& comment) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    if (!comment.empty()) f << "# " << comment << "\n";
    f << "distance,width_no_reuse,width_greedy,width_cap20,"
         "depth_no_reuse,depth_greedy,depth_cap20\n";
    for (const auto& r : rows)
        f << r.distance << ',' << r.width_no_reuse << ',' << r.width_greedy << ','
          << r.width_cap20 << ',' << r.depth_no_reuse << ',' << r.depth_greedy << ','
          << r.depth_cap20 << "\n";
}

}  // namespace qmera
