#include "qmera/cone_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace qmera {

namespace {

// Operator on w active wires stored as a 4^w flat array:
// ket slot s <-> bit s, bra slot s <-> bit (w + s).
struct DM {
    int w = 0;
    std::vector<cplx> a{cplx(1, 0)};

    int64_t size() const { return int64_t(1) << (2 * w); }

    static int64_t insert_bit(int64_t x, int pos, int64_t v) {
        int64_t low = x & ((int64_t(1) << pos) - 1);
        int64_t high = x >> pos;
        return low | (v << pos) | (high << (pos + 1));
    }

    // append a fresh |0><0| wire as the last slot
    void inject_zero() {
        int nw = w + 1;
        std::vector<cplx> b(int64_t(1) << (2 * nw), cplx(0, 0));
        int64_t K = int64_t(1) << w;
        for (int64_t hi = 0; hi < K; ++hi)
            for (int64_t lo = 0; lo < K; ++lo)
                b[lo | (hi << nw)] = a[lo | (hi << w)];
        a = std::move(b);
        w = nw;
    }

    // keep only the |0><0| component of the last slot (adjoint of inject_zero)
    void project_zero_last() {
        int nw = w - 1;
        std::vector<cplx> b(int64_t(1) << (2 * nw));
        int64_t K = int64_t(1) << nw;
        for (int64_t hi = 0; hi < K; ++hi)
            for (int64_t lo = 0; lo < K; ++lo)
                b[lo | (hi << nw)] = a[lo | (hi << w)];
        a = std::move(b);
        w = nw;
    }

    // partial trace over slot s
    void trace_slot(int s) {
        int nw = w - 1;
        std::vector<cplx> b(int64_t(1) << (2 * nw), cplx(0, 0));
        int64_t K = int64_t(1) << nw;
        for (int64_t hi = 0; hi < K; ++hi)
            for (int64_t lo = 0; lo < K; ++lo) {
                cplx sum = 0;
                for (int64_t v = 0; v < 2; ++v) {
                    int64_t kk = insert_bit(lo, s, v);
                    int64_t bb = insert_bit(hi, s, v);
                    sum += a[kk | (bb << w)];
                }
                b[lo | (hi << nw)] = sum;
            }
        a = std::move(b);
        w = nw;
    }

    // insert an identity wire at slot s (adjoint of trace_slot)
    void expand_identity(int s) {
        int nw = w + 1;
        std::vector<cplx> b(int64_t(1) << (2 * nw), cplx(0, 0));
        int64_t K = int64_t(1) << w;
        for (int64_t hi = 0; hi < K; ++hi)
            for (int64_t lo = 0; lo < K; ++lo) {
                cplx v = a[lo | (hi << w)];
                if (v == cplx(0, 0)) continue;
                for (int64_t d = 0; d < 2; ++d) {
                    int64_t kk = insert_bit(lo, s, d);
                    int64_t bb = insert_bit(hi, s, d);
                    b[kk | (bb << nw)] += v;
                }
            }
        a = std::move(b);
        w = nw;
    }

    // apply the 4x4 matrix U on bit positions (p = first qubit, q = second)
    // of the flat index; gate basis index is (bp << 1) | bq
    static void apply4_bits(std::vector<cplx>& v, int nbits, int p, int q, const Mat4& U) {
        int64_t mp = int64_t(1) << p, mq = int64_t(1) << q;
        int64_t n = int64_t(1) << nbits;
        for (int64_t i = 0; i < n; ++i) {
            if (i & (mp | mq)) continue;
            int64_t i00 = i, i01 = i | mq, i10 = i | mp, i11 = i | mp | mq;
            cplx x0 = v[i00], x1 = v[i01], x2 = v[i10], x3 = v[i11];
            v[i00] = U[0] * x0 + U[1] * x1 + U[2] * x2 + U[3] * x3;
            v[i01] = U[4] * x0 + U[5] * x1 + U[6] * x2 + U[7] * x3;
            v[i10] = U[8] * x0 + U[9] * x1 + U[10] * x2 + U[11] * x3;
            v[i11] = U[12] * x0 + U[13] * x1 + U[14] * x2 + U[15] * x3;
        }
    }

    // rho -> U rho U^dag on slots (s0, s1)
    void apply_gate(const Mat4& U, int s0, int s1) {
        apply4_bits(a, 2 * w, s0, s1, U);
        Mat4 Uc;
        for (int i = 0; i < 16; ++i) Uc[i] = std::conj(U[i]);
        apply4_bits(a, 2 * w, w + s0, w + s1, Uc);
    }

    // lambda -> U^dag lambda U on slots (s0, s1)
    void apply_gate_adjoint(const Mat4& U, int s0, int s1) {
        Mat4 Ud, Ut;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                Ud[r * 4 + c] = std::conj(U[c * 4 + r]);
                Ut[r * 4 + c] = U[c * 4 + r];
            }
        apply4_bits(a, 2 * w, s0, s1, Ud);
        apply4_bits(a, 2 * w, w + s0, w + s1, Ut);
    }
};

// Tr[lam * rho]
cplx trace_prod(const DM& lam, const DM& rho) {
    int w = lam.w;
    int64_t K = int64_t(1) << w;
    cplx t = 0;
    for (int64_t i = 0; i < K; ++i)
        for (int64_t j = 0; j < K; ++j)
            t += lam.a[i | (j << w)] * rho.a[j | (i << w)];
    return t;
}

enum class GenKind { Z0, Z1, XX, YY };

// Tr[lam G rho] with the generator G applied on the ket side:
// (G rho)_{i,j} = sum_src G_{i,src} rho_{src,j}
cplx trace_gen_prod(const DM& lam, const DM& rho, GenKind gk, int s0, int s1) {
    int w = lam.w;
    int64_t K = int64_t(1) << w;
    int64_t m0 = int64_t(1) << s0, m1 = int64_t(1) << s1;
    cplx t = 0;
    for (int64_t iket = 0; iket < K; ++iket) {
        cplx phase = 1.0;
        int64_t src = iket;
        switch (gk) {
            case GenKind::Z0: phase = (iket & m0) ? -1.0 : 1.0; break;
            case GenKind::Z1: phase = (iket & m1) ? -1.0 : 1.0; break;
            case GenKind::XX: src = iket ^ (m0 | m1); break;
            case GenKind::YY: {
                src = iket ^ (m0 | m1);
                cplx f0 = (src & m0) ? cplx(0, -1) : cplx(0, 1);
                cplx f1 = (src & m1) ? cplx(0, -1) : cplx(0, 1);
                phase = f0 * f1;
                break;
            }
        }
        // Tr[lam G rho] = sum_{i,j} (G rho)_{i,j} lam_{j,i}
        for (int64_t j = 0; j < K; ++j)
            t += phase * rho.a[src | (j << w)] * lam.a[j | (iket << w)];
    }
    return t;
}

// RZ on the first (which = 0) or second (which = 1) qubit of a two-qubit slot pair
Mat4 rz_single(double phi, int which) {
    Mat4 m{};
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1) {
            int b = which == 0 ? b0 : b1;
            int idx = b0 * 2 + b1;
            m[idx * 4 + idx] = std::exp(cplx(0, (b ? 1.0 : -1.0) * phi / 2));
        }
    return m;
}

struct TapeStep {
    enum Kind { Inject, Gate, Trace } kind;
    int wire = -1;
    int slot = -1;           // slot affected (Inject: appended slot; Trace: removed slot)
    int gate = -1;           // global gate index (Gate steps)
    int s0 = -1, s1 = -1;    // gate slots
};

struct ConeProgram {
    std::vector<TapeStep> steps;
    std::vector<int> final_wire_of_slot;
};

// Width-minimizing topological order of the cone gates. Gates on disjoint
// wires commute in the circuit partial order, so any order respecting the
// per-wire chains is valid; greedily preferring gates that keep the active
// wire set small cuts the 4^w contraction cost sharply on deep cones.
std::vector<int> schedule_gates(const MeraNetwork& net, const CausalCone& cone,
                                const std::vector<bool>& is_out) {
    const int n = (int)cone.gates.size();
    std::vector<int> uses(net.config.L, 0);
    std::vector<std::array<int, 2>> prev(n, {-1, -1});  // previous cone gate per wire
    {
        std::vector<int> last(net.config.L, -1);
        for (int p = 0; p < n; ++p) {
            const auto& g = net.gates[cone.gates[p]];
            prev[p] = {last[g.w0], last[g.w1]};
            last[g.w0] = last[g.w1] = p;
            ++uses[g.w0];
            ++uses[g.w1];
        }
    }
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> succ(n);
    for (int p = 0; p < n; ++p)
        for (int q : prev[p])
            if (q >= 0) {
                succ[q].push_back(p);
                ++indeg[p];
            }
    std::vector<bool> active(net.config.L, false);
    std::vector<bool> ready(n, false);
    for (int p = 0; p < n; ++p) ready[p] = indeg[p] == 0;
    std::vector<int> order;
    order.reserve(n);
    int n_active = 0;
    for (int step = 0; step < n; ++step) {
        int best = -1, best_grow = 0, best_shrink = 0;
        for (int p = 0; p < n; ++p) {
            if (!ready[p]) continue;
            const auto& g = net.gates[cone.gates[p]];
            int grow = (!active[g.w0]) + (g.w1 != g.w0 && !active[g.w1]);
            int shrink = (uses[g.w0] == 1 && !is_out[g.w0]) +
                         (uses[g.w1] == 1 && !is_out[g.w1]);
            // fewest fresh wires, then most wires retired, then original order
            if (best < 0 || grow < best_grow ||
                (grow == best_grow && shrink > best_shrink)) {
                best = p;
                best_grow = grow;
                best_shrink = shrink;
            }
        }
        const auto& g = net.gates[cone.gates[best]];
        for (int wq : {g.w0, g.w1})
            if (!active[wq]) {
                active[wq] = true;
                ++n_active;
            }
        for (int wq : {g.w0, g.w1}) {
            if (--uses[wq] == 0 && !is_out[wq]) {
                active[wq] = false;
                --n_active;
            }
        }
        ready[best] = false;
        for (int s : succ[best])
            if (--indeg[s] == 0) ready[s] = true;
        order.push_back(best);
    }
    (void)n_active;
    return order;
}

// Build the evaluation program: injections, gates, eager traces.
ConeProgram make_program(const MeraNetwork& net, const CausalCone& cone) {
    std::vector<bool> is_out(net.config.L, false);
    for (int s : cone.sites) is_out[s] = true;

    std::vector<int> order = schedule_gates(net, cone, is_out);
    std::vector<int> uses(net.config.L, 0);
    for (int p : order) {
        const auto& g = net.gates[cone.gates[p]];
        ++uses[g.w0];
        ++uses[g.w1];
    }

    ConeProgram prog;
    std::vector<int> wire_of_slot;
    std::vector<int> slot_of(net.config.L, -1);

    auto inject = [&](int wq) {
        TapeStep st;
        st.kind = TapeStep::Inject;
        st.wire = wq;
        st.slot = (int)wire_of_slot.size();
        slot_of[wq] = st.slot;
        wire_of_slot.push_back(wq);
        prog.steps.push_back(st);
    };
    auto trace = [&](int wq) {
        TapeStep st;
        st.kind = TapeStep::Trace;
        st.wire = wq;
        st.slot = slot_of[wq];
        wire_of_slot.erase(wire_of_slot.begin() + st.slot);
        for (int k = st.slot; k < (int)wire_of_slot.size(); ++k) slot_of[wire_of_slot[k]] = k;
        slot_of[wq] = -1;
        prog.steps.push_back(st);
    };

    for (int p : order) {
        const auto& g = net.gates[cone.gates[p]];
        for (int wq : {g.w0, g.w1})
            if (slot_of[wq] < 0) inject(wq);
        TapeStep st;
        st.kind = TapeStep::Gate;
        st.gate = cone.gates[p];
        st.s0 = slot_of[g.w0];
        st.s1 = slot_of[g.w1];
        prog.steps.push_back(st);
        for (int wq : {g.w0, g.w1})
            if (--uses[wq] == 0 && !is_out[wq]) trace(wq);
    }
    prog.final_wire_of_slot = wire_of_slot;
    return prog;
}

void run_forward(const MeraNetwork& net, const ConeProgram& prog, DM& rho,
                 std::vector<DM>* snaps) {
    rho = DM{};
    if (snaps) {
        snaps->clear();
        snaps->push_back(rho);
    }
    for (const auto& st : prog.steps) {
        switch (st.kind) {
            case TapeStep::Inject: rho.inject_zero(); break;
            case TapeStep::Gate: rho.apply_gate(net.unitary(st.gate), st.s0, st.s1); break;
            case TapeStep::Trace: rho.trace_slot(st.slot); break;
        }
        if (snaps) snaps->push_back(rho);
    }
}

// Observable as a DM-layout operator over the final slots.
DM observable_dm(const PauliString& obs, const std::vector<int>& wire_of_slot) {
    int w = (int)wire_of_slot.size();
    int64_t K = int64_t(1) << w;
    int64_t flip = 0;
    std::vector<std::pair<int, char>> slot_ops;
    for (auto& [site, pauli] : obs.factors) {
        auto it = std::find(wire_of_slot.begin(), wire_of_slot.end(), site);
        if (it == wire_of_slot.end())
            throw std::logic_error("observable site not among cone outputs");
        int s = (int)(it - wire_of_slot.begin());
        slot_ops.push_back({s, pauli});
        if (pauli == 'X' || pauli == 'Y') flip |= int64_t(1) << s;
    }
    DM O;
    O.w = w;
    O.a.assign(int64_t(1) << (2 * w), cplx(0, 0));
    for (int64_t i = 0; i < K; ++i) {
        // O|i> = c |i ^ flip>
        cplx c = 1.0;
        for (auto& [s, pauli] : slot_ops) {
            int64_t v = (i >> s) & 1;
            if (pauli == 'Z') c *= v ? -1.0 : 1.0;
            else if (pauli == 'Y') c *= v ? cplx(0, -1) : cplx(0, 1);
        }
        int64_t tgt = i ^ flip;
        O.a[tgt | (i << w)] += c;  // matrix element <tgt|O|i>
    }
    return O;
}

double check_real(cplx v, const char* what) {
    if (std::abs(v.imag()) > 1e-9)
        throw std::runtime_error(std::string(what) + ": non-real expectation value");
    return v.real();
}

void validate_obs(const MeraNetwork& net, const PauliString& obs) {
    if (obs.factors.empty() || obs.factors.size() > 4)
        throw std::invalid_argument("observable must act on 1..4 sites");
    std::vector<int> seen;
    for (auto& [site, p] : obs.factors) {
        if (site < 0 || site >= net.config.L)
            throw std::invalid_argument("observable site out of range");
        if (p != 'X' && p != 'Y' && p != 'Z')
            throw std::invalid_argument("observable must be a Pauli string");
        if (std::find(seen.begin(), seen.end(), site) != seen.end())
            throw std::invalid_argument("observable has repeated site");
        seen.push_back(site);
    }
}

std::vector<int> obs_sites(const PauliString& obs) {
    std::vector<int> s;
    for (auto& [site, p] : obs.factors) s.push_back(site);
    return s;
}

}  // namespace

double expect_cone(const MeraNetwork& net, const CausalCone& cone, const PauliString& obs) {
    validate_obs(net, obs);
    ConeProgram prog = make_program(net, cone);
    DM rho;
    run_forward(net, prog, rho, nullptr);
    DM O = observable_dm(obs, prog.final_wire_of_slot);
    return check_real(trace_prod(O, rho), "expect_cone");
}

double expect_local(const MeraNetwork& net, const PauliString& obs) {
    validate_obs(net, obs);
    CausalCone cone = causal_cone(net, obs_sites(obs));
    return expect_cone(net, cone, obs);
}

EnergyTerms make_energy_terms(const MeraNetwork& net) {
    EnergyTerms et;
    int L = net.config.L;
    for (int j = 0; j < L; ++j) {
        EnergyTerms::Term txx;
        txx.obs.factors = {{j, 'X'}, {(j + 1) % L, 'X'}};
        txx.cone = causal_cone(net, {j, (j + 1) % L});
        txx.coeff = -net.config.J;
        et.terms.push_back(std::move(txx));
        EnergyTerms::Term tz;
        tz.obs.factors = {{j, 'Z'}};
        tz.cone = causal_cone(net, {j});
        tz.coeff = -net.config.h;
        et.terms.push_back(std::move(tz));
    }
    return et;
}

double energy_with_terms(const MeraNetwork& net, const EnergyTerms& terms) {
    double e = 0;
    for (const auto& t : terms.terms) e += t.coeff * expect_cone(net, t.cone, t.obs);
    return e;
}

double energy(const MeraNetwork& net) {
    EnergyTerms et = make_energy_terms(net);
    return energy_with_terms(net, et);
}

double expect_cone_grad(const MeraNetwork& net, const CausalCone& cone,
                        const PauliString& obs, double coeff, std::vector<double>& grad) {
    validate_obs(net, obs);
    ConeProgram prog = make_program(net, cone);
    DM rho;
    std::vector<DM> snaps;
    run_forward(net, prog, rho, &snaps);
    DM lam = observable_dm(obs, prog.final_wire_of_slot);
    double value = check_real(trace_prod(lam, rho), "expect_cone_grad");

    // walk the tape backwards carrying lambda (Heisenberg-picture observable)
    for (int k = (int)prog.steps.size() - 1; k >= 0; --k) {
        const TapeStep& st = prog.steps[k];
        switch (st.kind) {
            case TapeStep::Inject:
                lam.project_zero_last();
                break;
            case TapeStep::Trace:
                lam.expand_identity(st.slot);
                break;
            case TapeStep::Gate: {
                // recompute the six parameterized primitives from the pre-gate state
                TwoQubitGateParams p = net.gate_params(st.gate);
                int base = net.gates[st.gate].param_base;
                DM cur = snaps[k];  // state before this gate
                struct Prim {
                    Mat4 U;
                    GenKind gen;
                };
                Mat4 rz0_pre = rz_single(p.pre_z0, 0), rz1_pre = rz_single(p.pre_z1, 1);
                Mat4 rz0_post = rz_single(p.post_z0, 0), rz1_post = rz_single(p.post_z1, 1);
                Prim prims[6] = {
                    {rz0_pre, GenKind::Z0},  {rz1_pre, GenKind::Z1},
                    {uxx_matrix(p.theta_xx), GenKind::XX}, {uyy_matrix(p.alpha_yy), GenKind::YY},
                    {rz0_post, GenKind::Z0}, {rz1_post, GenKind::Z1},
                };
                std::vector<DM> sub(7);
                sub[0] = cur;
                for (int j2 = 0; j2 < 6; ++j2) {
                    sub[j2 + 1] = sub[j2];
                    sub[j2 + 1].apply_gate(prims[j2].U, st.s0, st.s1);
                }
                for (int j2 = 5; j2 >= 0; --j2) {
                    cplx t = trace_gen_prod(lam, sub[j2 + 1], prims[j2].gen, st.s0, st.s1);
                    grad[base + j2] += coeff * t.imag();
                    lam.apply_gate_adjoint(prims[j2].U, st.s0, st.s1);
                }
                break;
            }
        }
    }
    return coeff * value;
}

double energy_and_gradient(const MeraNetwork& net, const EnergyTerms& terms,
                           std::vector<double>& grad) {
    grad.assign(net.num_params, 0.0);
    double e = 0;
    for (const auto& t : terms.terms) e += expect_cone_grad(net, t.cone, t.obs, t.coeff, grad);
    return e;
}

}  // namespace qmera
