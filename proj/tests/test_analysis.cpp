#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qmera/analysis.hpp"

using namespace qmera;

namespace {

std::vector<FitPoint> power_law(double amp, double eta, std::vector<int> rs, double err) {
    std::vector<FitPoint> p;
    for (int r : rs) p.push_back({r, amp * std::pow((double)r, -eta), err});
    return p;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("exact power law is recovered to machine precision") {
    auto pts = power_law(0.8, 0.25, {2, 4, 8, 16, 32}, 0.0);
    FitResult f = fit_power_law_chisq(pts);
    CHECK(std::abs(f.eta - 0.25) < 1e-10);
    CHECK(std::abs(f.amplitude - 0.8) < 1e-10);
    for (auto [r, res] : f.residuals) CHECK(std::abs(res) < 1e-12);
    CHECK(f.excluded.empty());
}

TEST_CASE("fit is scale-equivariant") {
    auto pts = power_law(0.8, 0.25, {2, 4, 8, 16, 32}, 0.0);
    for (auto& p : pts) p.value *= (1 + 0.02 * p.r);  // mild distortion
    FitResult base = fit_power_law_chisq(pts);
    auto scaled = pts;
    for (auto& p : scaled) {
        p.value *= 7.3;
        p.stderr_ *= 7.3;
    }
    FitResult f = fit_power_law_chisq(scaled);
    CHECK(std::abs(f.eta - base.eta) < 1e-12);
    CHECK(f.amplitude == doctest::Approx(7.3 * base.amplitude).epsilon(1e-12));
}

TEST_CASE("error bars propagate and the two methods agree") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> gauss(0, 1);
    auto pts = power_law(1.0, 0.25, {2, 4, 8, 16, 32}, 0.0);
    for (auto& p : pts) {
        p.stderr_ = 0.01 + 0.002 * p.r;  // heteroscedastic
        p.value += p.stderr_ * gauss(rng);
    }
    PowerLawFit fit = fit_power_law(pts, 1500, 9);
    CHECK(fit.chisq.eta_err > 0);
    CHECK(fit.bootstrap.eta_err > 0);
    double tol = 1.5 * std::max(fit.chisq.eta_err, fit.bootstrap.eta_err);
    CHECK(std::abs(fit.chisq.eta - fit.bootstrap.eta) < tol);
    CHECK(std::abs(fit.chisq.eta - 0.25) < 4 * fit.chisq.eta_err);
    // the two error estimates describe the same sampling distribution
    CHECK(fit.bootstrap.eta_err == doctest::Approx(fit.chisq.eta_err).epsilon(0.3));
}

TEST_CASE("bootstrap resampling is deterministic in the seed") {
    auto pts = power_law(1.0, 0.3, {2, 4, 8, 16}, 0.02);
    FitResult a = fit_power_law_bootstrap(pts, 400, 5);
    FitResult b = fit_power_law_bootstrap(pts, 400, 5);
    CHECK(a.eta == b.eta);
    CHECK(a.eta_err == b.eta_err);
    FitResult c = fit_power_law_bootstrap(pts, 400, 6);
    CHECK(a.eta != c.eta);
}

TEST_CASE("non-positive central values are excluded, small sets rejected") {
    auto pts = power_law(1.0, 0.25, {2, 4, 8, 16}, 0.01);
    pts[2].value = -0.01;
    FitResult f = fit_power_law_chisq(pts);
    REQUIRE(f.excluded.size() == 1);
    CHECK(f.excluded[0] == 8);
    CHECK(f.residuals.size() == 3);

    auto few = power_law(1.0, 0.25, {2, 4, 8}, 0.01);
    few[0].value = 0;
    CHECK_THROWS(fit_power_law_chisq(few));
    CHECK_THROWS(fit_power_law_chisq(power_law(1.0, 0.25, {2, 4}, 0.0)));
}

TEST_CASE("report bundle is complete and byte-deterministic") {
    Report r;
    r.config_hash = "deadbeef";
    r.eta = 0.251;
    r.eta_err = 0.02;
    r.amplitude = 0.79;
    r.eta_chisq = 0.249;
    r.eta_chisq_err = 0.018;
    r.energy = -162.9;
    r.energy_per_site = -1.2727;
    r.reference_per_site = -4.0 / M_PI;
    r.estimates = {{2, 0.7, 0.01, 0.72, 0.012, 0.73, 0.02, 0.25},
                   {4, 0.55, 0.01, 0.58, 0.012, 0.61, 0.02, 0.3}};
    r.resources = {{2, 23, 8, 23, 40, 55, 40}};
    r.parity = {{2, 1.0, 0.25}, {2, 3.0, 0.55}};
    r.placements = {{2, 13}};

    std::string dir = "/tmp/qmera_test_report";
    std::remove((dir + "/report.json").c_str());
    (void)system(("mkdir -p " + dir).c_str());
    write_report(r, dir);
    std::string first = slurp(dir + "/report.json");
    CHECK(validate_report_json(first).empty());
    std::string fig3 = slurp(dir + "/fig3.csv");
    CHECK(fig3.find("distance,raw") == 0);
    std::string parity = slurp(dir + "/parity.csv");
    CHECK(parity.find("kept_fraction") != std::string::npos);
    CHECK(parity.find("0.75") != std::string::npos);  // 1 - 0.25

    write_report(r, dir);  // second write must be byte-identical
    CHECK(slurp(dir + "/report.json") == first);
    CHECK(slurp(dir + "/fig3.csv") == fig3);

    CHECK(validate_report_json("{}").size() >= 10);
    CHECK(validate_report_json("not json").size() == 1);
}

TEST_CASE("angle histogram covers the full circle and counts every gate") {
    std::vector<double> angles{-3.1, -0.2, 0.0, 0.3, 1.6, 3.0, 7.0 /* wraps to ~0.72 */};
    std::string path = "/tmp/qmera_test_angles.csv";
    write_angles_hist_csv(angles, 8, path);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "bin_low,bin_high,count");
    long total = 0;
    int rows = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        rows++;
        total += std::stol(line.substr(line.rfind(',') + 1));
    }
    CHECK(rows == 8);
    CHECK(total == (long)angles.size());
    std::remove(path.c_str());
    CHECK_THROWS(write_angles_hist_csv(angles, 0, path));
}
