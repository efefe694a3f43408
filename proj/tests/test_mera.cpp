#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <random>

#include "doctest.h"
#include "qmera/mera.hpp"
#include "qmera/cone_eval.hpp"
#include "test_helpers.hpp"

using namespace qmera;
using namespace testutil;

namespace {

TwoQubitGateParams random_gate(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-M_PI, M_PI);
    return {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
}

ParamVector random_params(const MeraConfig& c, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    ParamVector p(param_count(c));
    for (auto& v : p) v = u(rng);
    return p;
}

const std::array<cplx, 4> PX{cplx(0, 0), cplx(1, 0), cplx(1, 0), cplx(0, 0)};
const std::array<cplx, 4> PY{cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0)};
const std::array<cplx, 4> PZ{cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(-1, 0)};
const std::array<cplx, 4> I2{cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(1, 0)};

std::array<cplx, 4> rz2(double phi) {
    return {std::exp(cplx(0, -phi / 2)), 0, 0, std::exp(cplx(0, phi / 2))};
}

}  // namespace

TEST_CASE("gate unitary matches series-expansion matrix exponentials") {
    std::mt19937_64 rng(101);
    for (int t = 0; t < 10; ++t) {
        TwoQubitGateParams g = random_gate(rng);
        Mat4 xx = kron2(PX, PX), yy = kron2(PY, PY);
        Mat4 exx{}, eyy{};
        for (int i = 0; i < 16; ++i) {
            exx[i] = cplx(0, -g.theta_xx / 2) * xx[i];
            eyy[i] = cplx(0, -g.alpha_yy / 2) * yy[i];
        }
        Mat4 want = kron2(rz2(g.post_z0), rz2(g.post_z1));
        want = mat_mul(want, expm4(eyy));
        want = mat_mul(want, expm4(exx));
        want = mat_mul(want, kron2(rz2(g.pre_z0), rz2(g.pre_z1)));
        CHECK(mat_dist(gate_unitary(g), want) < 1e-12);
    }
}

TEST_CASE("primitive matrices are special cases of the composed gate") {
    CHECK(mat_dist(uxx_matrix(0.3), gate_unitary({0, 0, 0.3, 0, 0, 0})) < 1e-14);
    CHECK(mat_dist(uyy_matrix(-1.1), gate_unitary({0, 0, 0, -1.1, 0, 0})) < 1e-14);
    Mat4 zz = kron2(PZ, PZ), ezz{};
    for (int i = 0; i < 16; ++i) ezz[i] = cplx(0, -0.45) * zz[i];  // theta = 0.9
    CHECK(mat_dist(uzz_matrix(0.9), expm4(ezz)) < 1e-12);
}

TEST_CASE("every gate commutes with Z x Z") {
    std::mt19937_64 rng(103);
    Mat4 zz = kron2(PZ, PZ);
    for (int t = 0; t < 10; ++t) {
        Mat4 u = gate_unitary(random_gate(rng));
        CHECK(mat_dist(mat_mul(u, zz), mat_mul(zz, u)) < 1e-12);
        // and is unitary
        Mat4 udag{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) udag[i * 4 + j] = std::conj(u[j * 4 + i]);
        Mat4 id{};
        for (int i = 0; i < 4; ++i) id[i * 4 + i] = 1.0;
        CHECK(mat_dist(mat_mul(udag, u), id) < 1e-12);
    }
}

TEST_CASE("network structure invariants") {
    for (MeraConfig c : {MeraConfig{8, 2}, MeraConfig{16, 2}, MeraConfig{8, 4},
                         MeraConfig{32, 4}}) {
        MeraNetwork net = build_mera(c, ParamVector(param_count(c), 0.0));
        CHECK(net.num_params == 6 * (int)net.gates.size());
        CHECK((int)net.birth_gate.size() == c.L);  // one wire per output site
        for (const auto& g : net.gates) {
            CHECK(g.w0 != g.w1);
            CHECK(g.w0 >= 0);
            CHECK(g.w1 >= 0);
            CHECK(g.w0 < c.L);
            CHECK(g.w1 < c.L);
        }
        // birth gates really are first-touch
        std::vector<int> first(c.L, -1);
        for (int gi = 0; gi < (int)net.gates.size(); ++gi)
            for (int w : {net.gates[gi].w0, net.gates[gi].w1})
                if (first[w] < 0) first[w] = gi;
        for (int w = 0; w < c.L; ++w) CHECK(first[w] == net.birth_gate[w]);
    }
}

TEST_CASE("parameter count scales into the expected band") {
    CHECK(param_count({128, 4}) >= 1500);
    CHECK(param_count({128, 4}) <= 3000);
    CHECK(param_count({8, 2}) < param_count({16, 2}));
    CHECK(param_count({32, 2}) < param_count({32, 4}));
}

TEST_CASE("invalid configs rejected") {
    CHECK_THROWS(validate({6, 2}));
    CHECK_THROWS(validate({8, 3}));
    CHECK_THROWS(validate({4, 2}));
    CHECK_THROWS(build_mera({8, 2}, ParamVector(3, 0.0)));  // wrong length
}

TEST_CASE("zero angles prepare |00...0>") {
    MeraConfig c{8, 2};
    MeraNetwork net = build_mera(c, ParamVector(param_count(c), 0.0));
    SV sv = full_state(net);
    CHECK(std::abs(sv.a[0] - cplx(1, 0)) < 1e-12);
    for (int j = 0; j < 8; ++j) {
        CHECK(expect_local(net, {{{j, 'Z'}}}) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(expect_local(net, {{{j, 'X'}}}) == doctest::Approx(0.0).epsilon(1e-12));
    }
    CHECK(energy(net) == doctest::Approx(-8.0).epsilon(1e-12));
}

TEST_CASE("prepared state is Z2 even and <X> vanishes") {
    for (MeraConfig c : {MeraConfig{8, 2}, MeraConfig{16, 2}, MeraConfig{8, 4}}) {
        MeraNetwork net = build_mera(c, random_params(c, 42));
        SV sv = full_state(net);
        PauliString parity;
        for (int j = 0; j < c.L; ++j) parity.factors.push_back({j, 'Z'});
        CHECK(pauli_expect(sv, parity) == doctest::Approx(1.0).epsilon(1e-10));
        for (int j = 0; j < c.L; j += 3)
            CHECK(std::abs(pauli_expect(sv, {{{j, 'X'}}})) < 1e-10);
    }
}

TEST_CASE("cone expectations match the dense statevector oracle") {
    for (MeraConfig c : {MeraConfig{8, 2}, MeraConfig{16, 2}, MeraConfig{8, 4}}) {
        MeraNetwork net = build_mera(c, random_params(c, 7));
        SV sv = full_state(net);
        for (int j = 0; j < c.L; ++j) {
            PauliString z{{{j, 'Z'}}};
            CHECK(expect_local(net, z) == doctest::Approx(pauli_expect(sv, z)).epsilon(1e-9));
        }
        for (int d : {1, 2, 3, c.L / 2}) {
            PauliString xx{{{0, 'X'}, {d, 'X'}}};
            CHECK(expect_local(net, xx) == doctest::Approx(pauli_expect(sv, xx)).epsilon(1e-9));
            PauliString yz{{{1, 'Y'}, {(1 + d) % c.L, 'Z'}}};
            CHECK(expect_local(net, yz) ==
                  doctest::Approx(pauli_expect(sv, yz)).epsilon(1e-9));
        }
    }
}

TEST_CASE("energy matches <H> from the dense statevector") {
    for (MeraConfig c : {MeraConfig{8, 2}, MeraConfig{16, 2}, MeraConfig{8, 4}}) {
        c.J = 1.0;
        c.h = 1.0;
        MeraNetwork net = build_mera(c, random_params(c, 1234));
        SV sv = full_state(net);
        double want = 0;
        for (int j = 0; j < c.L; ++j) {
            want -= c.J * pauli_expect(sv, {{{j, 'X'}, {(j + 1) % c.L, 'X'}}});
            want -= c.h * pauli_expect(sv, {{{j, 'Z'}}});
        }
        CHECK(energy(net) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("gates outside a causal cone cannot affect the observable") {
    MeraConfig c{16, 2};
    ParamVector p = random_params(c, 99);
    MeraNetwork net = build_mera(c, p);
    CausalCone cone = causal_cone(net, {3, 4});
    PauliString obs{{{3, 'X'}, {4, 'X'}}};
    double base = pauli_expect(full_state(net), obs);
    CHECK(expect_cone(net, cone, obs) == doctest::Approx(base).epsilon(1e-10));

    // scramble every parameter of every gate not in the cone: value unchanged
    std::vector<bool> in_cone(net.gates.size(), false);
    for (int g : cone.gates) in_cone[g] = true;
    CHECK(cone.gates.size() < net.gates.size());  // the cone is a strict subset
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-M_PI, M_PI);
    ParamVector p2 = p;
    for (size_t g = 0; g < net.gates.size(); ++g)
        if (!in_cone[g])
            for (int k = 0; k < 6; ++k) p2[net.gates[g].param_base + k] = u(rng);
    MeraNetwork net2 = build_mera(c, p2);
    CHECK(pauli_expect(full_state(net2), obs) == doctest::Approx(base).epsilon(1e-10));
    CHECK(expect_cone(net2, cone, obs) == doctest::Approx(base).epsilon(1e-10));

    // scrambling a gate inside the cone does change it (generic parameters)
    ParamVector p3 = p;
    int gi = cone.gates.back();
    for (int k = 0; k < 6; ++k) p3[net.gates[gi].param_base + k] = u(rng);
    MeraNetwork net3 = build_mera(c, p3);
    CHECK(std::abs(pauli_expect(full_state(net3), obs) - base) > 1e-6);
}

TEST_CASE("cone width stays logarithmic") {
    MeraConfig c{128, 4};
    MeraNetwork net = build_mera(c, ParamVector(param_count(c), 0.0));
    for (int j = 0; j < 128; j += 17) {
        CausalCone cone = causal_cone(net, {j, (j + 1) % 128});
        CHECK((int)cone.wires.size() <= 40);
        CHECK(cone.sites == std::vector<int>({std::min(j, (j + 1) % 128),
                                              std::max(j, (j + 1) % 128)}));
    }
}

TEST_CASE("json round trip is bit exact") {
    MeraConfig c{8, 4};
    ParamVector p = random_params(c, 2024);
    MeraNetwork net = build_mera(c, p);
    MeraNetwork back = network_from_json(to_json(net));
    REQUIRE(back.params.size() == net.params.size());
    for (size_t i = 0; i < p.size(); ++i) CHECK(back.params[i] == net.params[i]);
    CHECK(back.config.L == c.L);
    CHECK(back.config.chi == c.chi);
    CHECK(back.gates.size() == net.gates.size());

    std::string path = "/tmp/qmera_test_net.json";
    save_network(net, path);
    MeraNetwork loaded = load_network(path);
    for (size_t i = 0; i < p.size(); ++i) CHECK(loaded.params[i] == net.params[i]);
    std::remove(path.c_str());
}
