#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#define QMERA_TEST_CIRCUIT_HELPERS
#include <random>

#include "doctest.h"
#include "qmera/circuit.hpp"
#include "qmera/cone_eval.hpp"
#include "qmera/mps.hpp"
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

double fidelity(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    REQUIRE(a.size() == b.size());
    cplx ov(0, 0);
    for (size_t i = 0; i < a.size(); ++i) ov += std::conj(a[i]) * b[i];
    return std::norm(ov);
}

}  // namespace

TEST_CASE("zero angles produce an untouched product state") {
    MeraNetwork net = build_mera({8, 2}, ParamVector(param_count({8, 2}), 0.0));
    Mps m = apply_circuit(lower_full(net), 16);
    for (int d : m.dims) CHECK(d == 1);
    CHECK(m.trunc_error == 0.0);
    CHECK(entropy_half(m) == doctest::Approx(0.0).epsilon(1e-12));
    auto dense = to_dense(m);
    CHECK(std::abs(dense[0] - cplx(1, 0)) < 1e-12);
}

TEST_CASE("a Bell pair carries exactly ln 2 across the cut") {
    Circuit c;
    c.num_qubits = 2;
    c.ops = {{OpKind::H, 0, -1, 0, -1}, {OpKind::CX, 0, 1, 0, -1}};
    Mps m = apply_circuit(c, 4);
    CHECK(entropy_half(m) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(m.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("distant gates are routed by swaps without disturbing site order") {
    // entangle sites 0 and 3, then check the dense state directly
    Circuit c;
    c.num_qubits = 5;
    c.ops = {{OpKind::H, 0, -1, 0, -1},
             {OpKind::CX, 0, 3, 0, -1},
             {OpKind::RZ, 3, -1, 0.7, -1},
             {OpKind::UYY, 4, 1, 1.1, -1}};  // q0 > q1 exercises the swapped basis
    Mps m = apply_circuit(c, 32);
    SV sv = circuit_state(c);
    CHECK(fidelity(to_dense(m), sv.a) > 1.0 - 1e-12);
}

TEST_CASE("untruncated evolution reproduces the dense statevector") {
    for (MeraConfig cfg : {MeraConfig{8, 2}, MeraConfig{8, 4}}) {
        MeraNetwork net = random_net(cfg, 51);
        Mps m = apply_circuit(lower_full(net), 256);
        CHECK(m.trunc_error < 1e-12);
        SV sv = full_state(net);
        CHECK(fidelity(to_dense(m), sv.a) > 1.0 - 1e-9);
        CHECK(m.norm() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("truncation error decreases as the bond dimension doubles") {
    MeraNetwork net = random_net({16, 4}, 77);
    Circuit c = lower_full(net);
    double prev = -1;
    std::vector<double> errors;
    for (int chi : {2, 4, 8, 16, 32, 64, 256}) {
        Mps m = apply_circuit(c, chi);
        CHECK(m.norm() == doctest::Approx(1.0).epsilon(1e-10));
        errors.push_back(m.trunc_error);
        (void)prev;
    }
    for (size_t i = 1; i < errors.size(); ++i) CHECK(errors[i] <= errors[i - 1] + 1e-12);
    CHECK(errors.front() > errors.back());  // truncation actually bites at chi=2
    CHECK(errors.back() < 1e-10);  // chi = 2^(L/2) cannot truncate anything
}

TEST_CASE("truncated state stays close in observable terms") {
    MeraNetwork net = random_net({8, 2}, 5);
    SV sv = full_state(net);
    Mps m = apply_circuit(lower_full(net), 4);
    double f = fidelity(to_dense(m), sv.a);
    CHECK(f > 0.9);  // chi=4 is ample for L=8 at these shallow depths
}

TEST_CASE("entropy respects its bounds at every cut") {
    MeraNetwork net = random_net({16, 2}, 9);
    Mps m = apply_circuit(lower_full(net), 8);
    for (int cut : {1, 4, 8, 12, 15}) {
        double s = entropy_at(m, cut);
        CHECK(s >= 0.0);
        CHECK(s <= std::log((double)m.dims[cut]) + 1e-12);
    }
    CHECK_THROWS(entropy_at(m, 0));
    CHECK_THROWS(entropy_at(m, 16));
}

TEST_CASE("invalid inputs are rejected") {
    Circuit c;
    c.num_qubits = 2;
    c.cbits = {{BitRole::site_z}};
    c.ops = {{OpKind::H, 0, -1, 0, -1}, {OpKind::MEASZ, 0, -1, 0, 0}};
    CHECK_THROWS(apply_circuit(c, 8));
    Circuit ok;
    ok.num_qubits = 2;
    CHECK_THROWS(apply_circuit(ok, 0));
    MeraNetwork net = random_net({16, 2}, 1);
    Mps m = apply_circuit(lower_full(net), 4);
    CHECK_THROWS(to_dense(m, 14));  // 16 sites > dense cap
}

TEST_CASE("deep chains with large bond dimension keep a unit-norm state") {
    // Regression: Eigen's divide-and-conquer SVD can emit NaN singular vectors
    // for complex matrices once bonds grow past its Jacobi-fallback size; a
    // corrupt factorization used to zero out the state mid-circuit. The SVD
    // wrapper must detect that and recover, keeping the norm exactly 1.
    MeraNetwork net = random_net({32, 4}, 13);
    Circuit c = lower_full(net);
    double prev = 1e300;
    for (int chi : {32, 64}) {
        Mps m = apply_circuit(c, chi);
        CHECK(m.norm() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::isfinite(m.trunc_error));
        CHECK(m.trunc_error < 0.2);
        CHECK(m.trunc_error <= prev + 1e-12);
        prev = m.trunc_error;
        double s = entropy_half(m);
        CHECK(std::isfinite(s));
        CHECK(s > 0.0);
    }
}
