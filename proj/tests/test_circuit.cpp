#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#define QMERA_TEST_CIRCUIT_HELPERS
#include <cstdio>
#include <random>

#include "doctest.h"
#include "qmera/circuit.hpp"
#include "qmera/cone_eval.hpp"
#include "test_helpers.hpp"

using namespace qmera;
using namespace testutil;

namespace {

MeraNetwork random_net(MeraConfig c, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    ParamVector p(param_count(c));
    for (auto& v : p) v = u(rng);
    return build_mera(c, p);
}

// 4x4 unitary realized by a <=2 qubit circuit, acting on qubits (0,1)
Mat4 circuit_unitary2(const Circuit& c) {
    REQUIRE(c.num_qubits == 2);
    Mat4 u{};
    for (int col = 0; col < 4; ++col) {
        SV sv(2);
        sv.a.assign(4, cplx(0, 0));
        // SV index: bit q is qubit q; Mat4 basis is (b0<<1)|b1
        sv.a[((col >> 1) & 1) | (((col & 1)) << 1)] = 1.0;
        for (const auto& op : c.ops) apply_op_sv(sv, op);
        for (int row = 0; row < 4; ++row)
            u[row * 4 + col] = sv.a[((row >> 1) & 1) | ((row & 1) << 1)];
    }
    return u;
}

}  // namespace

TEST_CASE("lowered cone reproduces network expectation values") {
    for (MeraConfig cfg : {MeraConfig{8, 2}, MeraConfig{16, 2}, MeraConfig{8, 4}}) {
        MeraNetwork net = random_net(cfg, 5);
        for (auto sites : {std::vector<int>{0, 4}, std::vector<int>{1, 2},
                           std::vector<int>{3, (3 + cfg.L / 2) % cfg.L}}) {
            std::sort(sites.begin(), sites.end());
            sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
            if (sites.size() < 2) continue;
            CausalCone cone = causal_cone(net, sites);
            LoweredCone lc = lower(net, cone);
            REQUIRE(lc.circuit.num_qubits == (int)cone.wires.size());
            SV sv = circuit_state(lc.circuit);
            PauliString obs{{{sites[0], 'X'}, {sites[1], 'X'}}};
            PauliString obs_q{{{lc.output_qubits[0], 'X'}, {lc.output_qubits[1], 'X'}}};
            CHECK(pauli_expect(sv, obs_q) ==
                  doctest::Approx(expect_local(net, obs)).epsilon(1e-9));
            PauliString z_net{{{sites[0], 'Z'}}}, z_q{{{lc.output_qubits[0], 'Z'}}};
            CHECK(pauli_expect(sv, z_q) ==
                  doctest::Approx(expect_local(net, z_net)).epsilon(1e-9));
        }
    }
}

TEST_CASE("every non-output cone wire exits through a tagged measurement") {
    MeraNetwork net = random_net({16, 2}, 9);
    CausalCone cone = causal_cone(net, {2, 9});
    LoweredCone lc = lower(net, cone);
    int n_meas = 0;
    for (const auto& op : lc.circuit.ops)
        if (op.kind == OpKind::MEASZ) {
            n_meas++;
            CHECK(lc.circuit.cbits[op.cbit].role == BitRole::cone_exit);
        }
    CHECK(n_meas == (int)cone.wires.size() - 2);
    // output qubits stay unmeasured
    for (int q : lc.output_qubits)
        for (const auto& op : lc.circuit.ops)
            if (op.kind == OpKind::MEASZ) CHECK(op.q0 != q);
    // two-qubit gate count: two entanglers per network gate
    CHECK(lc.circuit.two_qubit_gates() == 2 * (int)cone.gates.size());
}

TEST_CASE("gadget ancilla reads the X-parity of product eigenstates") {
    auto anc_one_prob = [](const Circuit& prep) {
        Circuit g = attach_gadget(prep, 0, 1);
        SV sv = circuit_state(g);
        double p1 = 0;
        for (uint64_t s = 0; s < sv.a.size(); ++s)
            if ((s >> 2) & 1) p1 += std::norm(sv.a[s]);
        return p1;
    };
    Circuit pp;  // |++>
    pp.num_qubits = 2;
    pp.ops = {{OpKind::H, 0, -1, 0, -1}, {OpKind::H, 1, -1, 0, -1}};
    CHECK(anc_one_prob(pp) == doctest::Approx(0.0).epsilon(1e-12));

    Circuit pm = pp;  // |+->
    pm.ops.push_back({OpKind::RZ, 1, -1, M_PI, -1});
    CHECK(anc_one_prob(pm) == doctest::Approx(1.0).epsilon(1e-12));

    Circuit ghz;  // (|00> + |11>)/sqrt(2): X X eigenvalue +1
    ghz.num_qubits = 2;
    ghz.ops = {{OpKind::H, 0, -1, 0, -1}, {OpKind::CX, 0, 1, 0, -1}};
    CHECK(anc_one_prob(ghz) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gadget on already-measured qubit is rejected") {
    Circuit c;
    c.num_qubits = 2;
    c.cbits.push_back({BitRole::cone_exit});
    c.ops = {{OpKind::MEASZ, 0, -1, 0, 0}};
    CHECK_THROWS(attach_gadget(c, 0, 1));
    CHECK_THROWS(attach_gadget(c, 1, 1));
}

TEST_CASE("folding preserves each entangler's unitary exactly") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-M_PI, M_PI);
    for (OpKind k : {OpKind::UXX, OpKind::UYY, OpKind::UZZ}) {
        for (int t = 0; t < 100; ++t) {
            double theta = u(rng);
            Circuit c;
            c.num_qubits = 2;
            c.ops = {{k, 0, 1, theta, -1}};
            Mat4 orig = circuit_unitary2(c);
            for (int m : {3, 5}) {
                Circuit f = fold_zne(c, m);
                CHECK(f.two_qubit_gates() == m);
                CHECK(mat_dist(circuit_unitary2(f), orig) < 1e-12);
            }
        }
    }
    Circuit cx;
    cx.num_qubits = 2;
    cx.ops = {{OpKind::CX, 0, 1, 0, -1}};
    CHECK(mat_dist(circuit_unitary2(fold_zne(cx, 3)), circuit_unitary2(cx)) < 1e-14);
}

TEST_CASE("folding a full cone circuit leaves the state unchanged") {
    MeraNetwork net = random_net({8, 2}, 21);
    LoweredCone lc = lower(net, causal_cone(net, {1, 5}));
    Circuit folded = fold_zne(lc.circuit, 3);
    CHECK(folded.two_qubit_gates() == 3 * lc.circuit.two_qubit_gates());
    SV a = circuit_state(lc.circuit), b = circuit_state(folded);
    for (size_t i = 0; i < a.a.size(); ++i) CHECK(std::abs(a.a[i] - b.a[i]) < 1e-10);
}

TEST_CASE("even fold factor is rejected") {
    Circuit c;
    c.num_qubits = 2;
    c.ops = {{OpKind::UXX, 0, 1, 0.3, -1}};
    CHECK_THROWS(fold_zne(c, 2));
    CHECK_THROWS(fold_zne(c, 0));
}

TEST_CASE("jsonl round trip preserves ops, params, and roles") {
    MeraNetwork net = random_net({8, 4}, 33);
    LoweredCone lc = lower(net, causal_cone(net, {2, 3}));
    Circuit c = attach_gadget(lc.circuit, lc.output_qubits[0], lc.output_qubits[1]);
    Circuit back = circuit_from_jsonl(circuit_to_jsonl(c));
    REQUIRE(back.ops.size() == c.ops.size());
    REQUIRE(back.num_qubits == c.num_qubits);
    REQUIRE(back.cbits.size() == c.cbits.size());
    for (size_t i = 0; i < c.ops.size(); ++i) {
        CHECK(back.ops[i].kind == c.ops[i].kind);
        CHECK(back.ops[i].q0 == c.ops[i].q0);
        CHECK(back.ops[i].q1 == c.ops[i].q1);
        CHECK(back.ops[i].param == c.ops[i].param);  // bit-exact
        CHECK(back.ops[i].cbit == c.ops[i].cbit);
    }
    for (size_t i = 0; i < c.cbits.size(); ++i) CHECK(back.cbits[i].role == c.cbits[i].role);

    std::string path = "/tmp/qmera_test_circ.jsonl";
    save_circuit(c, path);
    Circuit loaded = load_circuit(path);
    CHECK(circuit_to_jsonl(loaded) == circuit_to_jsonl(c));
    std::remove(path.c_str());
}

TEST_CASE("malformed circuits are rejected by check") {
    Circuit c;
    c.num_qubits = 2;
    c.cbits.push_back({BitRole::site_z});
    c.ops = {{OpKind::MEASZ, 0, -1, 0, 0}, {OpKind::H, 0, -1, 0, -1}};
    CHECK_THROWS(c.check());  // use after measure
    c.ops = {{OpKind::MEASZ, 0, -1, 0, 0},
             {OpKind::RESET, 0, -1, 0, -1},
             {OpKind::H, 0, -1, 0, -1}};
    CHECK_NOTHROW(c.check());  // reset revives
    c.ops = {{OpKind::H, 5, -1, 0, -1}};
    CHECK_THROWS(c.check());  // bad qubit
    c.ops = {{OpKind::UXX, 1, 1, 0.1, -1}};
    CHECK_THROWS(c.check());  // repeated qubit
}
