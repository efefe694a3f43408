#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "qmera/oracle.hpp"

using namespace qmera::oracle;

TEST_CASE("L=2 limits solvable by hand") {
    // h = 0: H = -2J X0 X1 (both bonds), ground energy -2J
    CHECK(ed_solve(2, 1.0, 0.0).energy == doctest::Approx(-2.0).epsilon(1e-12));
    // J = 0: H = -h (Z0 + Z1), ground energy -2h on |00>
    CHECK(ed_solve(2, 0.0, 1.5).energy == doctest::Approx(-3.0).epsilon(1e-12));
    // critical point: H = -2 X0X1 - Z0 - Z1, ground energy -2 sqrt(2)
    CHECK(ed_solve(2, 1.0, 1.0).energy == doctest::Approx(-2.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("diagonalization agrees with the free-fermion closed form at g=1") {
    for (int L : {4, 6, 8, 10, 12, 14}) {
        double ed = ed_solve(L, 1.0, 1.0).energy;
        double ff = ff_energy(L, 1.0);
        CHECK(std::abs(ed - ff) < 1e-9 * std::abs(ff));
    }
}

TEST_CASE("diagonalization agrees with the closed form off criticality") {
    for (double g : {0.3, 0.8, 1.4}) {
        double ed = ed_solve(10, 1.0, g).energy;
        double ff = ff_energy(10, g);
        CHECK(std::abs(ed - ff) < 1e-9 * std::abs(ff));
    }
}

TEST_CASE("paramagnetic limit: per-site energy approaches -h") {
    ExactSolution s = ed_solve(8, 1.0, 100.0);
    CHECK(s.per_site == doctest::Approx(-100.0).epsilon(1e-2));
    for (double z : s.z_expect) CHECK(z == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("ferromagnetic limit: energy is -J L") {
    CHECK(ed_solve(8, 1.0, 0.0).energy == doctest::Approx(-8.0).epsilon(1e-10));
}

TEST_CASE("critical per-site energy converges to -4/pi from below") {
    double target = -4.0 / M_PI;
    double prev = -1e9;
    for (int L = 8; L <= 4096; L *= 2) {
        double ps = ff_energy(L, 1.0) / L;
        CHECK(ps < target);   // finite-size energies sit below the thermodynamic value
        CHECK(ps > prev);     // and increase monotonically toward it
        prev = ps;
    }
    CHECK(std::abs(ff_energy(4096, 1.0) / 4096 - target) < 1e-4);
}

TEST_CASE("correlations respect translation and reflection symmetry") {
    ExactSolution s = ed_solve(8, 1.0, 1.0);
    for (int j = 0; j < 8; ++j) {
        CHECK(s.xx_corr[j][j] == doctest::Approx(1.0));
        for (int k = 0; k < 8; ++k) {
            int d = std::min((k - j + 8) % 8, (j - k + 8) % 8);
            CHECK(s.xx_corr[j][k] == doctest::Approx(s.xx_corr[0][d]).epsilon(1e-8));
        }
    }
    // XX correlations decay with distance at criticality
    CHECK(s.xx_corr[0][1] > s.xx_corr[0][2]);
    CHECK(s.xx_corr[0][2] > s.xx_corr[0][4]);
    CHECK(s.xx_corr[0][4] > 0);
}

TEST_CASE("ground state is normalized and Z2 even") {
    ExactSolution s = ed_solve(6, 1.0, 1.0);
    double n2 = 0;
    for (double a : s.ground_state) n2 += a * a;
    CHECK(n2 == doctest::Approx(1.0).epsilon(1e-12));
    // even parity sector: amplitudes on odd-popcount basis states vanish...
    // X flips pairs, so parity of popcount is conserved from |00...0>
    for (uint64_t b = 0; b < s.ground_state.size(); ++b)
        if (__builtin_popcountll(b) % 2 == 1) CHECK(std::abs(s.ground_state[b]) < 1e-8);
}

TEST_CASE("invalid sizes are rejected") {
    CHECK_THROWS(ed_solve(1, 1, 1));
    CHECK_THROWS(ed_solve(17, 1, 1));
    CHECK_THROWS(ff_energy(7, 1.0));
    CHECK_THROWS(ff_energy(0, 1.0));
}
