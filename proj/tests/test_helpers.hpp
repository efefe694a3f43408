#pragma once

// Shared test oracles. Everything here is deliberately simple and independent
// of the library's evaluation paths: dense statevector simulation of the full
// circuit, and Taylor-series matrix exponentials for small generators.

#include <complex>
#include <random>
#include <vector>

#include "qmera/mera.hpp"

namespace testutil {

using qmera::cplx;

// Dense statevector over n qubits; basis index bit q is qubit q, |0> = bit 0.
struct SV {
    int n;
    std::vector<cplx> a;

    explicit SV(int nq) : n(nq), a(size_t(1) << nq, cplx(0, 0)) { a[0] = 1.0; }

    // Apply a 4x4 unitary (row-major, basis index (b0<<1)|b1) to qubits q0, q1.
    void apply2(const qmera::Mat4& u, int q0, int q1) {
        const uint64_t m0 = 1ull << q0, m1 = 1ull << q1;
        const uint64_t dim = a.size();
        for (uint64_t s = 0; s < dim; ++s) {
            if (s & (m0 | m1)) continue;
            uint64_t idx[4] = {s, s | m1, s | m0, s | m0 | m1};  // (b0<<1)|b1 order
            cplx v[4];
            for (int i = 0; i < 4; ++i) v[i] = a[idx[i]];
            for (int i = 0; i < 4; ++i) {
                cplx acc(0, 0);
                for (int j = 0; j < 4; ++j) acc += u[i * 4 + j] * v[j];
                a[idx[i]] = acc;
            }
        }
    }
    // Apply a 2x2 unitary (row-major) to qubit q.
    void apply1(const std::array<cplx, 4>& u, int q) {
        const uint64_t m = 1ull << q;
        for (uint64_t s = 0; s < a.size(); ++s) {
            if (s & m) continue;
            cplx v0 = a[s], v1 = a[s | m];
            a[s] = u[0] * v0 + u[1] * v1;
            a[s | m] = u[2] * v0 + u[3] * v1;
        }
    }
};

// |psi> of the full network on L qubits: every gate applied in circuit-time
// order to |0...0>; wire id == qubit id == final site index.
inline SV full_state(const qmera::MeraNetwork& net) {
    SV sv(net.config.L);
    for (size_t g = 0; g < net.gates.size(); ++g)
        sv.apply2(net.unitary((int)g), net.gates[g].w0, net.gates[g].w1);
    return sv;
}

// <psi|P|psi> for a Pauli string.
inline double pauli_expect(const SV& sv, const qmera::PauliString& obs) {
    uint64_t flip = 0;
    std::vector<std::pair<int, char>> ys, zs;
    for (auto& [site, p] : obs.factors) {
        if (p == 'X' || p == 'Y') flip |= 1ull << site;
        if (p == 'Y') ys.push_back({site, p});
        if (p == 'Z') zs.push_back({site, p});
    }
    cplx acc(0, 0);
    for (uint64_t s = 0; s < sv.a.size(); ++s) {
        cplx amp = sv.a[s];
        if (amp == cplx(0, 0)) continue;
        uint64_t t = s ^ flip;
        cplx coef(1, 0);
        for (auto& [site, p] : ys) coef *= ((s >> site) & 1) ? cplx(0, -1) : cplx(0, 1);
        for (auto& [site, p] : zs) coef *= ((s >> site) & 1) ? -1.0 : 1.0;
        acc += std::conj(sv.a[t]) * coef * amp;
    }
    return acc.real();
}

// exp(A) for 4x4 by scaling-and-squaring Taylor series.
inline qmera::Mat4 expm4(const qmera::Mat4& a_in) {
    auto mul = [](const qmera::Mat4& x, const qmera::Mat4& y) {
        qmera::Mat4 r{};
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k)
                for (int j = 0; j < 4; ++j) r[i * 4 + j] += x[i * 4 + k] * y[k * 4 + j];
        return r;
    };
    qmera::Mat4 a = a_in;
    int squarings = 6;
    for (auto& v : a) v /= double(1 << squarings);
    qmera::Mat4 sum{}, term{};
    for (int i = 0; i < 4; ++i) sum[i * 4 + i] = term[i * 4 + i] = 1.0;
    for (int k = 1; k <= 20; ++k) {
        term = mul(term, a);
        for (auto& v : term) v /= double(k);
        for (int i = 0; i < 16; ++i) sum[i] += term[i];
    }
    for (int s = 0; s < squarings; ++s) sum = mul(sum, sum);
    return sum;
}

inline qmera::Mat4 mat_mul(const qmera::Mat4& x, const qmera::Mat4& y) {
    qmera::Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k)
            for (int j = 0; j < 4; ++j) r[i * 4 + j] += x[i * 4 + k] * y[k * 4 + j];
    return r;
}

inline double mat_dist(const qmera::Mat4& x, const qmera::Mat4& y) {
    double m = 0;
    for (int i = 0; i < 16; ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

// kron of 2x2 blocks: result acts on (q0, q1) with basis (b0<<1)|b1.
inline qmera::Mat4 kron2(const std::array<cplx, 4>& a, const std::array<cplx, 4>& b) {
    qmera::Mat4 r{};
    for (int i0 = 0; i0 < 2; ++i0)
        for (int j0 = 0; j0 < 2; ++j0)
            for (int i1 = 0; i1 < 2; ++i1)
                for (int j1 = 0; j1 < 2; ++j1)
                    r[((i0 << 1) | i1) * 4 + ((j0 << 1) | j1)] = a[i0 * 2 + j0] * b[i1 * 2 + j1];
    return r;
}

}  // namespace testutil

#ifdef QMERA_TEST_CIRCUIT_HELPERS
#include "qmera/circuit.hpp"

namespace testutil {

// Reference executor for the unitary part of a circuit (MEASZ/RESET skipped;
// skipping a Z measurement cannot change marginals of the remaining qubits).
inline void apply_op_sv(SV& sv, const qmera::CircuitOp& op) {
    using qmera::OpKind;
    const double s2 = 1.0 / std::sqrt(2.0);
    switch (op.kind) {
        case OpKind::RZ:
            sv.apply1({std::exp(cplx(0, -op.param / 2)), 0, 0,
                       std::exp(cplx(0, op.param / 2))},
                      op.q0);
            break;
        case OpKind::H:
            sv.apply1({cplx(s2, 0), cplx(s2, 0), cplx(s2, 0), cplx(-s2, 0)}, op.q0);
            break;
        case OpKind::UXX:
            sv.apply2(qmera::uxx_matrix(op.param), op.q0, op.q1);
            break;
        case OpKind::UYY:
            sv.apply2(qmera::uyy_matrix(op.param), op.q0, op.q1);
            break;
        case OpKind::UZZ:
            sv.apply2(qmera::uzz_matrix(op.param), op.q0, op.q1);
            break;
        case OpKind::CX: {
            qmera::Mat4 cx{};
            cx[0 * 4 + 0] = cx[1 * 4 + 1] = cx[2 * 4 + 3] = cx[3 * 4 + 2] = 1.0;
            sv.apply2(cx, op.q0, op.q1);
            break;
        }
        default:
            break;  // MEASZ / RESET: not part of the unitary prefix
    }
}

inline SV circuit_state(const qmera::Circuit& c) {
    SV sv(c.num_qubits);
    for (const auto& op : c.ops) apply_op_sv(sv, op);
    return sv;
}

}  // namespace testutil
#endif  // QMERA_TEST_CIRCUIT_HELPERS
