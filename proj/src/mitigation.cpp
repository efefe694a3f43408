#include "qmera/mitigation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qmera {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

Postselected postselect(const ShotTable& t) {
    bool has_herald_bit = false;
    for (BitRole r : t.roles)
        if (r == BitRole::cone_exit || r == BitRole::site_z) has_herald_bit = true;
    if (!has_herald_bit)
        throw std::invalid_argument("postselect: no cone_exit or site_z bits to herald on");
    Postselected out;
    out.kept.roles = t.roles;
    out.kept.circuit_id = t.circuit_id;
    out.kept.noise_scale = t.noise_scale;
    out.kept.seed = t.seed;
    out.n_total = (int)t.rows.size();
    for (const auto& row : t.rows) {
        int parity = 0;
        for (size_t i = 0; i < row.size(); ++i)
            if (t.roles[i] != BitRole::xx_ancilla) parity ^= row[i];
        if (parity == 0) out.kept.rows.push_back(row);
    }
    out.discard_rate =
        out.n_total ? 1.0 - (double)out.kept.rows.size() / out.n_total : 0.0;
    return out;
}

Estimate estimate_xx(const ShotTable& kept) {
    int anc = -1;
    for (size_t i = 0; i < kept.roles.size(); ++i)
        if (kept.roles[i] == BitRole::xx_ancilla) anc = (int)i;
    if (anc < 0) throw std::invalid_argument("estimate_xx: no xx_ancilla bit");
    const int n = (int)kept.rows.size();
    if (n == 0) throw std::runtime_error("estimate_xx: no shots survived the herald");
    double sum = 0;
    for (const auto& row : kept.rows) sum += row[anc] ? -1.0 : 1.0;
    const double mean = sum / n;
    double ss = 0;
    for (const auto& row : kept.rows) {
        double d = (row[anc] ? -1.0 : 1.0) - mean;
        ss += d * d;
    }
    Estimate e;
    e.value = mean;
    e.stderr_ = n > 1 ? std::sqrt(ss / (n - 1)) / std::sqrt((double)n) : 0.0;
    e.n_total = n;
    e.n_kept = n;
    e.noise_scale = kept.noise_scale;
    return e;
}

ZneResult zne(const Estimate& e1, const Estimate& em, int m) {
    if (m <= 1) throw std::invalid_argument("zne: need m > 1");
    ZneResult r;
    r.e1 = e1;
    r.em = em;
    r.m = m;
    r.e0 = (m * e1.value - em.value) / (m - 1);
    r.sigma0 = std::sqrt(double(m) * m * e1.stderr_ * e1.stderr_ +
                         em.stderr_ * em.stderr_) /
               (m - 1);
    return r;
}

std::pair<int, int> allocate_shots(int total, int m) {
    if (m <= 1) throw std::invalid_argument("allocate_shots: need m > 1");
    if (total < m * m + 1)
        throw std::invalid_argument("allocate_shots: total too small for the m^2 split");
    int nm = (int)std::lround((double)total / (m * m + 1));
    nm = std::max(1, std::min(nm, total - 1));
    return {total - nm, nm};
}

ShotTable resample_shots(const ShotTable& t, std::mt19937_64& rng) {
    ShotTable out;
    out.roles = t.roles;
    out.circuit_id = t.circuit_id;
    out.noise_scale = t.noise_scale;
    out.seed = t.seed;
    const size_t n = t.rows.size();
    if (n == 0) throw std::invalid_argument("resample_shots: empty table");
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    out.rows.reserve(n);
    for (size_t i = 0; i < n; ++i) out.rows.push_back(t.rows[pick(rng)]);
    return out;
}

BootstrapResult bootstrap(int n_resamples, uint64_t seed,
                          const std::function<double(std::mt19937_64&)>& statistic) {
    if (n_resamples < 2) throw std::invalid_argument("bootstrap: need >= 2 resamples");
    BootstrapResult r;
    r.samples.reserve(n_resamples);
    for (int i = 0; i < n_resamples; ++i) {
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64((uint64_t)i)));
        r.samples.push_back(statistic(rng));
    }
    double sum = 0;
    for (double v : r.samples) sum += v;
    r.mean = sum / n_resamples;
    double ss = 0;
    for (double v : r.samples) ss += (v - r.mean) * (v - r.mean);
    r.sigma = std::sqrt(ss / (n_resamples - 1));
    return r;
}

BootstrapResult bootstrap_zne(const ShotTable& raw1, const ShotTable& rawm, int m,
                              int n_resamples, uint64_t seed) {
    return bootstrap(n_resamples, seed, [&](std::mt19937_64& rng) {
        ShotTable s1 = resample_shots(raw1, rng);
        ShotTable sm = resample_shots(rawm, rng);
        Estimate e1 = estimate_xx(postselect(s1).kept);
        Estimate em = estimate_xx(postselect(sm).kept);
        return zne(e1, em, m).e0;
    });
}

void write_estimates_csv(const std::vector<DistanceRecord>& rows, const std::string& path,
                         const std::string& comment) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.precision(17);
    if (!comment.empty()) f << "# " << comment << "\n";
    f << "distance,raw,raw_err,heralded,heralded_err,zne,zne_err,discard_rate\n";
    for (const auto& r : rows)
        f << r.distance << ',' << r.raw << ',' << r.raw_err << ',' << r.heralded << ','
          << r.heralded_err << ',' << r.zne << ',' << r.zne_err << ',' << r.discard_rate
          << "\n";
}

std::vector<DistanceRecord> read_estimates_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(f, line);
    while (!line.empty() && line[0] == '#') std::getline(f, line);
    if (line != "distance,raw,raw_err,heralded,heralded_err,zne,zne_err,discard_rate")
        throw std::runtime_error("unexpected estimates header in " + path);
    std::vector<DistanceRecord> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 8) throw std::runtime_error("malformed estimates row");
        DistanceRecord r;
        r.distance = std::stoi(cells[0]);
        r.raw = std::stod(cells[1]);
        r.raw_err = std::stod(cells[2]);
        r.heralded = std::stod(cells[3]);
        r.heralded_err = std::stod(cells[4]);
        r.zne = std::stod(cells[5]);
        r.zne_err = std::stod(cells[6]);
        r.discard_rate = std::stod(cells[7]);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace qmera
