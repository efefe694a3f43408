#include "qmera/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qmera/circuit.hpp"
#include "qmera/cone_eval.hpp"
#include "qmera/oracle.hpp"

namespace qmera {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

uint64_t sub_seed(uint64_t seed, uint64_t tag) { return splitmix64(seed ^ splitmix64(tag)); }

std::string path_in(const RunConfig& cfg, const std::string& name) {
    return cfg.out_dir + "/" + name;
}

bool exists(const std::string& p) { return fs::exists(p); }

void require(const std::string& p, const char* stage) {
    if (!exists(p))
        throw MissingArtifact(std::string(stage) + ": missing input artifact " + p);
}

void write_text(const std::string& p, const std::string& text) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p);
    f << text;
}

std::string read_text(const std::string& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot read " + p);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string circuit_file(const RunConfig& cfg, int r, int scale) {
    return path_in(cfg, "circuit_r" + std::to_string(r) + "_scale" + std::to_string(scale) +
                            ".jsonl");
}

std::string shots_file(const RunConfig& cfg, int r, int scale) {
    return path_in(cfg, "shots_r" + std::to_string(r) + "_scale" + std::to_string(scale) +
                            ".csv");
}

// collects config-shape problems; the list becomes the ConfigError message
struct KeyChecker {
    std::vector<std::string>& bad;
    void unknown(const json& obj, std::initializer_list<const char*> known,
                 const std::string& scope) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool ok = false;
            for (const char* k : known)
                if (it.key() == k) ok = true;
            if (!ok) bad.push_back(scope + it.key() + " (unknown key)");
        }
    }
};

template <typename T>
void take(const json& obj, const char* key, T& into, std::vector<std::string>& bad,
          const std::string& scope) {
    if (!obj.contains(key)) return;
    try {
        into = obj.at(key).get<T>();
    } catch (const json::exception&) {
        bad.push_back(scope + std::string(key) + " (wrong type)");
    }
}

void run_over_distances(const RunConfig& cfg, const std::function<void(int)>& body) {
    const int n = (int)cfg.distances.size();
    const int workers = std::max(1, std::min(cfg.threads, n));
    if (workers == 1) {
        for (int r : cfg.distances) body(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = next++; i < n; i = next++) body(cfg.distances[i]);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace

void validate(const RunConfig& cfg) {
    std::vector<std::string> bad;
    try {
        validate(cfg.mera);
    } catch (const std::exception& e) {
        bad.push_back(std::string("mera: ") + e.what());
    }
    if (cfg.distances.empty()) bad.push_back("distances (empty)");
    for (int r : cfg.distances)
        if (r < 1 || r > cfg.mera.L / 2)
            bad.push_back("distances (entry " + std::to_string(r) + " outside [1, L/2])");
    if (cfg.zne_m < 3 || cfg.zne_m % 2 == 0) bad.push_back("zne_m (need odd >= 3)");
    if (cfg.shots < cfg.zne_m * cfg.zne_m + 1) bad.push_back("shots (too few for the split)");
    if (cfg.resamples < 2) bad.push_back("resamples (need >= 2)");
    if (cfg.threads < 1) bad.push_back("threads (need >= 1)");
    if (cfg.out_dir.empty()) bad.push_back("out_dir (empty)");
    if (cfg.opt.max_iters < 1) bad.push_back("optimizer.max_iters (need >= 1)");
    if (cfg.opt.restarts < 1) bad.push_back("optimizer.restarts (need >= 1)");
    if (cfg.opt.grad_backend != "adjoint" && cfg.opt.grad_backend != "shift")
        bad.push_back("optimizer.grad_backend (adjoint|shift)");
    try {
        cfg.noise.check();
    } catch (const std::exception& e) {
        bad.push_back(std::string("noise: ") + e.what());
    }
    if (!bad.empty()) {
        std::string msg = "invalid config:";
        for (const auto& b : bad) msg += " " + b + ";";
        throw ConfigError(msg);
    }
}

RunConfig config_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("invalid config: unparseable JSON");
    RunConfig cfg;
    std::vector<std::string> bad;
    KeyChecker kc{bad};
    kc.unknown(j,
               {"mera", "optimizer", "distances", "shots", "zne_m", "resamples", "noise",
                "seed", "out_dir", "threads"},
               "");
    if (j.contains("mera") && j["mera"].is_object()) {
        const json& m = j["mera"];
        kc.unknown(m, {"L", "chi", "J", "h", "drop_top_disentanglers"}, "mera.");
        take(m, "L", cfg.mera.L, bad, "mera.");
        take(m, "chi", cfg.mera.chi, bad, "mera.");
        take(m, "J", cfg.mera.J, bad, "mera.");
        take(m, "h", cfg.mera.h, bad, "mera.");
        take(m, "drop_top_disentanglers", cfg.mera.drop_top_disentanglers, bad, "mera.");
    } else if (j.contains("mera")) {
        bad.push_back("mera (wrong type)");
    }
    if (j.contains("optimizer") && j["optimizer"].is_object()) {
        const json& o = j["optimizer"];
        kc.unknown(o,
                   {"max_iters", "restarts", "init_range", "halt_rel_energy", "memory",
                    "grad_backend", "checkpoint_every"},
                   "optimizer.");
        take(o, "max_iters", cfg.opt.max_iters, bad, "optimizer.");
        take(o, "restarts", cfg.opt.restarts, bad, "optimizer.");
        take(o, "init_range", cfg.opt.init_range, bad, "optimizer.");
        take(o, "halt_rel_energy", cfg.opt.halt_rel_energy, bad, "optimizer.");
        take(o, "memory", cfg.opt.memory, bad, "optimizer.");
        take(o, "grad_backend", cfg.opt.grad_backend, bad, "optimizer.");
        take(o, "checkpoint_every", cfg.opt.checkpoint_every, bad, "optimizer.");
    } else if (j.contains("optimizer")) {
        bad.push_back("optimizer (wrong type)");
    }
    if (j.contains("noise") && j["noise"].is_object()) {
        const json& n = j["noise"];
        kc.unknown(n, {"p0", "slope", "idle_rate", "scale"}, "noise.");
        take(n, "p0", cfg.noise.p0, bad, "noise.");
        take(n, "slope", cfg.noise.slope, bad, "noise.");
        take(n, "idle_rate", cfg.noise.idle_rate, bad, "noise.");
        take(n, "scale", cfg.noise.scale, bad, "noise.");
    } else if (j.contains("noise")) {
        bad.push_back("noise (wrong type)");
    }
    if (j.contains("distances")) {
        take(j, "distances", cfg.distances, bad, "");
    } else {
        // trim the default ladder to separations the ring supports
        std::erase_if(cfg.distances, [&](int r) { return r > cfg.mera.L / 2; });
    }
    take(j, "shots", cfg.shots, bad, "");
    take(j, "zne_m", cfg.zne_m, bad, "");
    take(j, "resamples", cfg.resamples, bad, "");
    take(j, "seed", cfg.seed, bad, "");
    take(j, "out_dir", cfg.out_dir, bad, "");
    take(j, "threads", cfg.threads, bad, "");
    if (!bad.empty()) {
        std::string msg = "invalid config:";
        for (const auto& b : bad) msg += " " + b + ";";
        throw ConfigError(msg);
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    if (!exists(path)) throw ConfigError("config file not found: " + path);
    return config_from_json(read_text(path));
}

std::string config_to_json(const RunConfig& cfg) {
    json j;
    j["mera"] = {{"L", cfg.mera.L},
                 {"chi", cfg.mera.chi},
                 {"J", cfg.mera.J},
                 {"h", cfg.mera.h},
                 {"drop_top_disentanglers", cfg.mera.drop_top_disentanglers}};
    j["optimizer"] = {{"max_iters", cfg.opt.max_iters},
                      {"restarts", cfg.opt.restarts},
                      {"init_range", cfg.opt.init_range},
                      {"halt_rel_energy", cfg.opt.halt_rel_energy},
                      {"memory", cfg.opt.memory},
                      {"grad_backend", cfg.opt.grad_backend},
                      {"checkpoint_every", cfg.opt.checkpoint_every}};
    j["noise"] = {{"p0", cfg.noise.p0},
                  {"slope", cfg.noise.slope},
                  {"idle_rate", cfg.noise.idle_rate},
                  {"scale", cfg.noise.scale}};
    j["distances"] = cfg.distances;
    j["shots"] = cfg.shots;
    j["zne_m"] = cfg.zne_m;
    j["resamples"] = cfg.resamples;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["threads"] = cfg.threads;
    return j.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
    // FNV-1a 64 over the canonical form, minus run-shape-irrelevant fields
    json j = json::parse(config_to_json(cfg));
    j.erase("out_dir");
    j.erase("threads");
    const std::string s = j.dump();
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

std::pair<int, int> choose_placement(const MeraNetwork& net, int r) {
    const int L = net.config.L;
    int best_j = 0;
    size_t best_w = SIZE_MAX, best_g = SIZE_MAX;
    for (int j = 0; j < L; ++j) {
        std::vector<int> sites{j, (j + r) % L};
        std::sort(sites.begin(), sites.end());
        CausalCone cone = causal_cone(net, sites);
        if (cone.wires.size() < best_w ||
            (cone.wires.size() == best_w && cone.gates.size() < best_g)) {
            best_w = cone.wires.size();
            best_g = cone.gates.size();
            best_j = j;
        }
    }
    return {best_j, (best_j + r) % L};
}

void stage_optimize(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const std::string net_path = path_in(cfg, "network.json");
    const std::string meta_path = path_in(cfg, "optimize.json");
    if (exists(net_path) && exists(meta_path)) return;

    OptConfig oc = cfg.opt;
    oc.seed = sub_seed(cfg.seed, 0x09);
    if (oc.checkpoint_every > 0) oc.checkpoint_prefix = path_in(cfg, "checkpoint");
    OptResult res = optimize(cfg.mera, oc);
    MeraNetwork net = build_mera(cfg.mera, res.best_params);
    save_network(net, net_path);

    const double g = cfg.mera.h / cfg.mera.J;
    const double ref = oracle::ff_energy(cfg.mera.L, g, cfg.mera.J) / cfg.mera.L;
    json meta;
    meta["config_hash"] = config_hash(cfg);
    meta["energy"] = res.best_energy;
    meta["per_site"] = res.best_energy / cfg.mera.L;
    meta["reference_per_site"] = ref;
    meta["rel_error"] = std::abs(res.best_energy / cfg.mera.L - ref) / std::abs(ref);
    meta["converged"] = res.converged;
    meta["iterations"] = res.energy_trace.size();
    write_text(meta_path, meta.dump(2) + "\n");

    std::ostringstream trace;
    trace.precision(17);
    trace << "iter,energy\n";
    for (auto [it, e] : res.energy_trace) trace << it << ',' << e << "\n";
    write_text(path_in(cfg, "opt_trace.csv"), trace.str());
}

void stage_cone(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const std::string plc_path = path_in(cfg, "placements.json");
    bool done = exists(plc_path);
    for (int r : cfg.distances)
        done = done && exists(circuit_file(cfg, r, 1)) &&
               exists(circuit_file(cfg, r, cfg.zne_m));
    if (done) return;
    require(path_in(cfg, "network.json"), "cone stage");

    MeraNetwork net = load_network(path_in(cfg, "network.json"));
    json placements = json::array();
    for (int r : cfg.distances) {
        auto [j, k] = choose_placement(net, r);
        std::vector<int> sites{j, k};
        std::sort(sites.begin(), sites.end());
        CausalCone cone = causal_cone(net, sites);
        LoweredCone lc = lower(net, cone);
        // gadget targets ordered as (j, j+r) around the ring
        int qj = lc.output_qubits[sites[0] == j ? 0 : 1];
        int qk = lc.output_qubits[sites[0] == j ? 1 : 0];
        Circuit base = attach_gadget(lc.circuit, qj, qk);
        save_circuit(base, circuit_file(cfg, r, 1));
        save_circuit(fold_zne(base, cfg.zne_m), circuit_file(cfg, r, cfg.zne_m));
        placements.push_back({{"distance", r},
                              {"left_site", j},
                              {"right_site", k},
                              {"cone_wires", cone.wires.size()},
                              {"cone_gates", cone.gates.size()}});
    }
    json out;
    out["config_hash"] = config_hash(cfg);
    out["placements"] = placements;
    write_text(plc_path, out.dump(2) + "\n");
}

void stage_compile(const RunConfig& cfg) {
    const std::string csv_path = path_in(cfg, "resources.csv");
    const std::string json_path = path_in(cfg, "resources.json");
    if (exists(csv_path) && exists(json_path)) return;
    std::vector<ResourceStats> rows;
    for (int r : cfg.distances) {
        require(circuit_file(cfg, r, 1), "compile stage");
        rows.push_back(resource_stats(load_circuit(circuit_file(cfg, r, 1)), r));
    }
    write_resource_csv(rows, csv_path, "config_hash=" + config_hash(cfg));
    json arr = json::array();
    for (const auto& s : rows)
        arr.push_back({{"distance", s.distance},
                       {"width_no_reuse", s.width_no_reuse},
                       {"width_greedy", s.width_greedy},
                       {"width_cap20", s.width_cap20},
                       {"depth_no_reuse", s.depth_no_reuse},
                       {"depth_greedy", s.depth_greedy},
                       {"depth_cap20", s.depth_cap20}});
    json out;
    out["config_hash"] = config_hash(cfg);
    out["resources"] = arr;
    write_text(json_path, out.dump(2) + "\n");
}

void stage_simulate(const RunConfig& cfg) {
    const std::string hash = config_hash(cfg);
    run_over_distances(cfg, [&](int r) {
        for (int scale : {1, cfg.zne_m}) {
            const std::string out_path = shots_file(cfg, r, scale);
            if (exists(out_path) && exists(out_path + ".json")) continue;
            require(circuit_file(cfg, r, scale), "simulate stage");
            Circuit c = load_circuit(circuit_file(cfg, r, scale));
            CompiledCircuit cc = reuse_compile(c, ReuseMode::greedy);
            auto [n1, nm] = allocate_shots(cfg.shots, cfg.zne_m);
            const int shots = scale == 1 ? n1 : nm;
            const uint64_t seed = sub_seed(cfg.seed, (uint64_t)r * 2 + (scale == 1 ? 0 : 1));
            const std::string id =
                "r" + std::to_string(r) + "_scale" + std::to_string(scale) + "@" + hash;
            save_shots(run_shots(cc.circuit, cfg.noise, shots, seed, id), out_path);
        }
    });
}

void stage_mitigate(const RunConfig& cfg) {
    const std::string csv_path = path_in(cfg, "estimates.csv");
    const std::string meta_path = path_in(cfg, "mitigate.json");
    if (exists(csv_path) && exists(meta_path)) return;
    std::vector<DistanceRecord> rows;
    json meta_rows = json::array();
    for (int r : cfg.distances) {
        require(shots_file(cfg, r, 1), "mitigate stage");
        require(shots_file(cfg, r, cfg.zne_m), "mitigate stage");
        ShotTable s1 = load_shots(shots_file(cfg, r, 1));
        ShotTable sm = load_shots(shots_file(cfg, r, cfg.zne_m));
        Estimate raw = estimate_xx(s1);
        Postselected p1 = postselect(s1), pm = postselect(sm);
        Estimate e1 = estimate_xx(p1.kept), em = estimate_xx(pm.kept);
        ZneResult z = zne(e1, em, cfg.zne_m);
        BootstrapResult boot = bootstrap_zne(s1, sm, cfg.zne_m, cfg.resamples,
                                             sub_seed(cfg.seed, 0xB0 + (uint64_t)r));
        DistanceRecord rec;
        rec.distance = r;
        rec.raw = raw.value;
        rec.raw_err = raw.stderr_;
        rec.heralded = e1.value;
        rec.heralded_err = e1.stderr_;
        rec.zne = z.e0;
        rec.zne_err = boot.sigma;
        rec.discard_rate = p1.discard_rate;
        rows.push_back(rec);
        meta_rows.push_back({{"distance", r},
                             {"discard_scale1", p1.discard_rate},
                             {"discard_scalem", pm.discard_rate},
                             {"sigma0_propagated", z.sigma0},
                             {"sigma0_bootstrap", boot.sigma},
                             {"kept_scale1", e1.n_kept},
                             {"kept_scalem", em.n_kept}});
    }
    write_estimates_csv(rows, csv_path, "config_hash=" + config_hash(cfg));
    json meta;
    meta["config_hash"] = config_hash(cfg);
    meta["distances"] = meta_rows;
    write_text(meta_path, meta.dump(2) + "\n");
}

void stage_fit(const RunConfig& cfg) {
    const std::string fit_path = path_in(cfg, "fit.json");
    if (exists(fit_path)) return;
    require(path_in(cfg, "estimates.csv"), "fit stage");
    std::vector<FitPoint> pts;
    for (const auto& rec : read_estimates_csv(path_in(cfg, "estimates.csv")))
        pts.push_back({rec.distance, rec.zne, rec.zne_err});
    PowerLawFit fit = fit_power_law(pts, cfg.resamples, sub_seed(cfg.seed, 0xF17));
    json j;
    j["config_hash"] = config_hash(cfg);
    j["eta"] = fit.bootstrap.eta;
    j["eta_err"] = fit.bootstrap.eta_err;
    j["eta_chisq"] = fit.chisq.eta;
    j["eta_chisq_err"] = fit.chisq.eta_err;
    j["amplitude"] = fit.chisq.amplitude;
    j["excluded"] = fit.chisq.excluded;
    json res = json::array();
    for (auto [r, v] : fit.chisq.residuals) res.push_back({{"distance", r}, {"residual", v}});
    j["residuals"] = res;
    write_text(fit_path, j.dump(2) + "\n");
}

void stage_report(const RunConfig& cfg) {
    const std::string report_path = path_in(cfg, "report.json");
    if (exists(report_path) && exists(path_in(cfg, "fig3.csv")) &&
        exists(path_in(cfg, "angles_hist.csv")))
        return;
    for (const char* need : {"network.json", "optimize.json", "estimates.csv",
                             "resources.json", "fit.json", "mitigate.json",
                             "placements.json"})
        require(path_in(cfg, need), "report stage");

    Report rep;
    rep.config_hash = config_hash(cfg);
    json opt = json::parse(read_text(path_in(cfg, "optimize.json")));
    rep.energy = opt.at("energy").get<double>();
    rep.energy_per_site = opt.at("per_site").get<double>();
    rep.reference_per_site = opt.at("reference_per_site").get<double>();
    json fit = json::parse(read_text(path_in(cfg, "fit.json")));
    rep.eta = fit.at("eta").get<double>();
    rep.eta_err = fit.at("eta_err").get<double>();
    rep.eta_chisq = fit.at("eta_chisq").get<double>();
    rep.eta_chisq_err = fit.at("eta_chisq_err").get<double>();
    rep.amplitude = fit.at("amplitude").get<double>();
    rep.estimates = read_estimates_csv(path_in(cfg, "estimates.csv"));
    json res = json::parse(read_text(path_in(cfg, "resources.json")));
    for (const auto& row : res.at("resources")) {
        ResourceStats s;
        s.distance = row.at("distance").get<int>();
        s.width_no_reuse = row.at("width_no_reuse").get<int>();
        s.width_greedy = row.at("width_greedy").get<int>();
        s.width_cap20 = row.at("width_cap20").get<int>();
        s.depth_no_reuse = row.at("depth_no_reuse").get<int>();
        s.depth_greedy = row.at("depth_greedy").get<int>();
        s.depth_cap20 = row.at("depth_cap20").get<int>();
        rep.resources.push_back(s);
    }
    json mit = json::parse(read_text(path_in(cfg, "mitigate.json")));
    for (const auto& row : mit.at("distances")) {
        rep.parity.push_back({row.at("distance").get<int>(), 1.0,
                              row.at("discard_scale1").get<double>()});
        rep.parity.push_back({row.at("distance").get<int>(), (double)cfg.zne_m,
                              row.at("discard_scalem").get<double>()});
    }
    json plc = json::parse(read_text(path_in(cfg, "placements.json")));
    for (const auto& row : plc.at("placements"))
        rep.placements.push_back(
            {row.at("distance").get<int>(), row.at("left_site").get<int>()});
    write_report(rep, cfg.out_dir);

    MeraNetwork net = load_network(path_in(cfg, "network.json"));
    write_angles_hist_csv(net.params, 64, path_in(cfg, "angles_hist.csv"));
}

void run_all(const RunConfig& cfg) {
    validate(cfg);
    stage_optimize(cfg);
    stage_cone(cfg);
    stage_compile(cfg);
    stage_simulate(cfg);
    stage_mitigate(cfg);
    stage_fit(cfg);
    stage_report(cfg);
}

}  // namespace qmera
