#include "qmera/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace qmera {

using nlohmann::json;

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct WlsFit {
    double slope = 0, intercept = 0;
    double slope_err = 0;
    std::vector<std::pair<int, double>> residuals;
};

// y = intercept + slope * x, weights w_i (1/sigma_i^2, or 1 when unweighted)
WlsFit wls(const std::vector<double>& x, const std::vector<double>& y,
           const std::vector<double>& w, const std::vector<int>& rs, bool weighted) {
    double sw = 0, swx = 0, swy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
    }
    const double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    }
    if (sxx <= 0) throw std::runtime_error("power-law fit: degenerate abscissas");
    WlsFit f;
    f.slope = sxy / sxx;
    f.intercept = ybar - f.slope * xbar;
    for (size_t i = 0; i < x.size(); ++i)
        f.residuals.push_back({rs[i], y[i] - (f.intercept + f.slope * x[i])});
    if (weighted) {
        f.slope_err = std::sqrt(1.0 / sxx);
    } else {
        // fall back to residual-variance error when no stderrs were given
        double ss = 0;
        for (auto& [r, res] : f.residuals) ss += res * res;
        const int dof = std::max(1, (int)x.size() - 2);
        f.slope_err = std::sqrt(ss / dof / sxx);
    }
    return f;
}

struct Usable {
    std::vector<double> x, y, w;
    std::vector<int> rs, excluded;
    bool weighted = false;
};

Usable prepare(const std::vector<FitPoint>& points) {
    Usable u;
    bool any_err = false;
    for (const auto& p : points)
        if (p.stderr_ > 0) any_err = true;
    u.weighted = any_err;
    for (const auto& p : points) {
        if (p.r <= 0) throw std::invalid_argument("power-law fit: distances must be positive");
        if (p.value <= 0) {
            u.excluded.push_back(p.r);
            continue;
        }
        u.x.push_back(std::log((double)p.r));
        u.y.push_back(std::log(p.value));
        const double sigma_log = any_err && p.stderr_ > 0 ? p.stderr_ / p.value : 0;
        u.w.push_back(any_err ? (sigma_log > 0 ? 1.0 / (sigma_log * sigma_log) : 1.0) : 1.0);
        u.rs.push_back(p.r);
    }
    if (u.x.size() < 3)
        throw std::invalid_argument("power-law fit: need at least 3 usable points");
    return u;
}

}  // namespace

FitResult fit_power_law_chisq(const std::vector<FitPoint>& points) {
    Usable u = prepare(points);
    WlsFit f = wls(u.x, u.y, u.w, u.rs, u.weighted);
    FitResult r;
    r.method = "chisq";
    r.eta = -f.slope;
    r.eta_err = f.slope_err;
    r.amplitude = std::exp(f.intercept);
    r.residuals = f.residuals;
    r.excluded = u.excluded;
    return r;
}

FitResult fit_power_law_bootstrap(const std::vector<FitPoint>& points, int n_resamples,
                                  uint64_t seed) {
    Usable central = prepare(points);  // validates inputs up front
    (void)central;
    std::vector<double> etas;
    etas.reserve(n_resamples);
    for (int i = 0; i < n_resamples; ++i) {
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64((uint64_t)i)));
        std::normal_distribution<double> gauss(0, 1);
        std::vector<FitPoint> perturbed = points;
        for (auto& p : perturbed) p.value += p.stderr_ * gauss(rng);
        try {
            etas.push_back(fit_power_law_chisq(perturbed).eta);
        } catch (const std::invalid_argument&) {
            // a resample pushed too many points non-positive; skip it
        }
    }
    if (etas.size() < 2)
        throw std::runtime_error("power-law bootstrap: too few successful resamples");
    double mean = 0;
    for (double e : etas) mean += e;
    mean /= (double)etas.size();
    double ss = 0;
    for (double e : etas) ss += (e - mean) * (e - mean);

    FitResult base = fit_power_law_chisq(points);
    FitResult r;
    r.method = "bootstrap";
    r.eta = mean;
    r.eta_err = std::sqrt(ss / (etas.size() - 1));
    r.amplitude = base.amplitude;
    r.residuals = base.residuals;
    r.excluded = base.excluded;
    return r;
}

PowerLawFit fit_power_law(const std::vector<FitPoint>& points, int n_resamples,
                          uint64_t seed) {
    return {fit_power_law_chisq(points),
            fit_power_law_bootstrap(points, n_resamples, seed)};
}

void write_report(const Report& r, const std::string& dir) {
    json j;
    j["schema_version"] = r.schema_version;
    j["layout_version"] = r.layout_version;
    j["config_hash"] = r.config_hash;
    j["eta"] = r.eta;
    j["eta_err"] = r.eta_err;
    j["amplitude"] = r.amplitude;
    j["eta_chisq"] = r.eta_chisq;
    j["eta_chisq_err"] = r.eta_chisq_err;
    j["energy"] = r.energy;
    j["energy_per_site"] = r.energy_per_site;
    j["reference_per_site"] = r.reference_per_site;
    json discard = json::array();
    for (const auto& p : r.parity) {
        json row;
        row["distance"] = p.distance;
        row["noise_scale"] = p.noise_scale;
        row["discard_rate"] = p.discard_rate;
        discard.push_back(row);
    }
    j["discard_rates"] = discard;
    json res = json::array();
    for (const auto& s : r.resources) {
        json row;
        row["distance"] = s.distance;
        row["width_no_reuse"] = s.width_no_reuse;
        row["width_greedy"] = s.width_greedy;
        row["width_cap20"] = s.width_cap20;
        row["depth_no_reuse"] = s.depth_no_reuse;
        row["depth_greedy"] = s.depth_greedy;
        row["depth_cap20"] = s.depth_cap20;
        res.push_back(row);
    }
    j["resource_stats"] = res;
    json plc = json::array();
    for (auto [d, site] : r.placements)
        plc.push_back(json{{"distance", d}, {"left_site", site}});
    j["placements"] = plc;

    std::ofstream f(dir + "/report.json");
    if (!f) throw std::runtime_error("cannot write " + dir + "/report.json");
    f << j.dump(2) << "\n";

    write_estimates_csv(r.estimates, dir + "/fig3.csv");
    write_resource_csv(r.resources, dir + "/fig1e.csv");
    std::ofstream pf(dir + "/parity.csv");
    if (!pf) throw std::runtime_error("cannot write " + dir + "/parity.csv");
    pf.precision(17);
    pf << "distance,noise_scale,discard_rate,kept_fraction\n";
    for (const auto& p : r.parity)
        pf << p.distance << ',' << p.noise_scale << ',' << p.discard_rate << ','
           << 1.0 - p.discard_rate << "\n";
}

std::vector<std::string> validate_report_json(const std::string& json_text) {
    static const char* required[] = {
        "schema_version", "layout_version", "config_hash",  "eta",
        "eta_err",        "amplitude",      "eta_chisq",    "eta_chisq_err",
        "energy",         "energy_per_site", "reference_per_site",
        "discard_rates",  "resource_stats", "placements"};
    std::vector<std::string> missing;
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) return {"<unparseable JSON>"};
    for (const char* k : required)
        if (!j.contains(k)) missing.push_back(k);
    return missing;
}

void write_angles_hist_csv(const std::vector<double>& angles, int bins,
                           const std::string& path) {
    if (bins < 1) throw std::invalid_argument("angles histogram: need >= 1 bin");
    std::vector<long> counts(bins, 0);
    const double lo = -M_PI, width = 2 * M_PI / bins;
    for (double a : angles) {
        // wrap into [-pi, pi)
        double w = std::remainder(a, 2 * M_PI);
        if (w >= M_PI) w -= 2 * M_PI;
        int b = (int)((w - lo) / width);
        b = std::clamp(b, 0, bins - 1);
        counts[b]++;
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.precision(17);
    f << "bin_low,bin_high,count\n";
    for (int b = 0; b < bins; ++b)
        f << lo + b * width << ',' << lo + (b + 1) * width << ',' << counts[b] << "\n";
}

}  // namespace qmera
