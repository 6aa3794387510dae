// Command-line front end: run check suites from a config file and emit
// JSON/CSV reports, run the invariant-series computations for the built-in
// group actions, or list the available checks.

#include <CLI11.hpp>

#include <gencov/ce.hpp>
#include <gencov/covariance.hpp>
#include <gencov/jets.hpp>
#include <gencov/yang_mills.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using gencov::CheckReport;
using gencov::ordered_json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Section {
    std::map<std::string, std::string> kv;

    bool has(const std::string& k) const { return kv.count(k) != 0; }
    std::string get(const std::string& k, const std::string& dflt) const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    }
    long get_int(const std::string& k, long dflt) const {
        auto it = kv.find(k);
        if (it == kv.end()) return dflt;
        try {
            return std::stol(it->second);
        } catch (const std::exception&) {
            throw ConfigError("key '" + k + "' is not an integer: " + it->second);
        }
    }
    double get_double(const std::string& k, double dflt) const {
        auto it = kv.find(k);
        if (it == kv.end()) return dflt;
        try {
            return std::stod(it->second);
        } catch (const std::exception&) {
            throw ConfigError("key '" + k + "' is not a number: " + it->second);
        }
    }
    std::vector<int> get_grids(const std::string& k, std::vector<int> dflt) const {
        auto it = kv.find(k);
        if (it == kv.end()) return dflt;
        std::vector<int> out;
        std::string tok;
        std::istringstream is(it->second);
        while (is >> tok) {
            for (char& c : tok)
                if (c == ',') c = ' ';
            std::istringstream inner(tok);
            int v;
            while (inner >> v) out.push_back(v);
        }
        if (out.empty()) throw ConfigError("key '" + k + "' lists no grid sizes");
        for (std::size_t i = 1; i < out.size(); ++i)
            if (out[i] <= out[i - 1])
                throw ConfigError("grid sizes must be strictly increasing");
        return out;
    }
};

struct Config {
    Section globals;
    std::vector<std::pair<std::string, Section>> sections;

    const Section& section(const std::string& name) const {
        static const Section empty;
        for (const auto& [n, s] : sections)
            if (n == name) return s;
        return empty;
    }
};

// Plain-text grammar: '#' starts a comment, '[name]' opens a section, and
// 'key = value' assigns inside the current section (or globally before the
// first section header). Blank lines are ignored.
Config parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    Config cfg;
    Section* cur = &cfg.globals;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        std::size_t a = s.find_first_not_of(" \t\r");
        std::size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
            std::string name = trim(line.substr(1, line.size() - 2));
            if (name.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            cfg.sections.emplace_back(name, Section{});
            cur = &cfg.sections.back().second;
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        cur->kv[key] = val;
    }
    return cfg;
}

struct CheckResult {
    std::string name;
    bool passed = false;
    ordered_json report;
    std::vector<std::pair<std::string, CheckReport>> tables;  // CSV payloads
};

CheckResult from_report(const std::string& name, CheckReport rep) {
    CheckResult out;
    out.name = name;
    out.passed = rep.passed;
    out.report = rep.to_json();
    if (!rep.grids.empty()) out.tables.emplace_back(name, rep);
    return out;
}

gencov::TolerancePolicy policy_from(const Section& sec) {
    gencov::TolerancePolicy tol;
    tol.min_order = sec.get_double("min_order", tol.min_order);
    tol.finest_rel_residual = sec.get_double("finest_rel", tol.finest_rel_residual);
    return tol;
}

Eigen::MatrixXd seeded_matrix(std::uint64_t seed, int n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) m(r, c) = u(rng);
    return m;
}

struct Check {
    std::string name;
    std::string anchor;
    std::function<CheckResult(const Section&)> run;
};

std::vector<Check> catalog() {
    using namespace gencov;
    std::vector<Check> out;

    out.push_back({"scalar_equivariance", "scalequiv", [](const Section& sec) {
        std::uint64_t s = sec.get_int("seed", 0);
        auto grids = sec.get_grids("grids", {32, 64, 128});
        auto rep = check_scalar_equivariance(random_metric(101 + s, 2, 0.05, 1),
                                             random_scalar(202 + s, 2, 1.0, 1),
                                             random_vector(303 + s, 2, 0.002, 1), grids);
        if (sec.has("min_order") || sec.has("finest_rel")) rep.evaluate(policy_from(sec));
        return from_report("scalar_equivariance", rep);
    }});

    out.push_back({"interacting_equivariance", "GCphi4", [](const Section& sec) {
        std::uint64_t s = sec.get_int("seed", 0);
        auto grids = sec.get_grids("grids", {32, 64, 128});
        PotentialSpec quartic{{{4, sec.get_double("lambda4", 1.3)}}};
        auto rep = check_scalar_equivariance(random_metric(101 + s, 2, 0.05, 1),
                                             random_scalar(202 + s, 2, 1.0, 1),
                                             random_vector(303 + s, 2, 0.002, 1), grids, quartic);
        if (sec.has("min_order") || sec.has("finest_rel")) rep.evaluate(policy_from(sec));
        return from_report("interacting_equivariance", rep);
    }});

    out.push_back({"laplacian_deformation", "derlaplace", [](const Section& sec) {
        std::uint64_t s = sec.get_int("seed", 0);
        int N = static_cast<int>(sec.get_int("grid", 32));
        auto rep = check_laplacian_deformation(random_metric(81 + s, 2), random_scalar(82 + s, 2),
                                               random_sym_tensor(85 + s, 2), N);
        return from_report("laplacian_deformation", rep);
    }});

    out.push_back({"variational_identity", "dgT", [](const Section& sec) {
        std::uint64_t s = sec.get_int("seed", 0);
        auto grids = sec.get_grids("grids", {16, 32, 64});
        auto rep = check_variational_identity(random_metric(91 + s, 2), random_scalar(92 + s, 2),
                                              random_sym_tensor(93 + s, 2), grids);
        return from_report("variational_identity", rep);
    }});

    out.push_back({"infinitesimal_covariance", "infgencov", [](const Section& sec) {
        std::uint64_t s = sec.get_int("seed", 0);
        auto grids = sec.get_grids("grids", {16, 32, 64});
        auto rep = check_infinitesimal_covariance(random_metric(113 + s, 2),
                                                  random_scalar(114 + s, 2),
                                                  random_vector(115 + s, 2), grids);
        return from_report("infinitesimal_covariance", rep);
    }});

    out.push_back({"noether_pairing", "dgT-noether", [](const Section& sec) {
        std::uint64_t s = sec.get_int("seed", 0);
        auto grids = sec.get_grids("grids", {16, 32, 64});
        auto rep = noether_divergence_identity(random_metric(122 + s, 2, 0.05, 1),
                                               random_scalar(123 + s, 2, 1.0, 1),
                                               random_vector(124 + s, 2, 0.3, 1), grids);
        return from_report("noether_pairing", rep);
    }});

    out.push_back({"jet_square", "perturbfields", [](const Section& sec) {
        std::uint64_t s = sec.get_int("seed", 0);
        int n = static_cast<int>(sec.get_int("size", 5));
        double tol = sec.get_double("max_relative", 1e-12);
        auto L = seeded_matrix(1001 + s, n);
        auto Q = seeded_matrix(1002 + s, n);
        CheckResult res;
        res.name = "jet_square";
        res.passed = true;
        ordered_json orders = ordered_json::array();
        ordered_json residuals = ordered_json::array();
        for (int k : {2, 3, 4}) {
            auto chk = check_jet_square(L, Q, k);
            orders.push_back(k);
            residuals.push_back(chk.max_relative);
            if (chk.max_relative >= tol) res.passed = false;
        }
        res.report["name"] = res.name;
        res.report["anchor"] = "perturbfields";
        res.report["orders"] = orders;
        res.report["max_relative"] = residuals;
        res.report["tolerance"] = tol;
        res.report["passed"] = res.passed;
        return res;
    }});

    out.push_back({"geometric_consistency", "equivariantfunctional", [](const Section& sec) {
        std::uint64_t s = sec.get_int("seed", 0);
        auto grids = sec.get_grids("grids", {16, 32, 64});
        auto rep = geometric_consistency(random_metric(54 + s, 2, 0.08, 1),
                                         random_vector(55 + s, 2, 0.5, 1),
                                         random_scalar(56 + s, 2, 1.0, 1), grids);
        return from_report("geometric_consistency", rep);
    }});

    out.push_back({"ym_equivariance", "YMequivariance", [](const Section& sec) {
        std::uint64_t s = sec.get_int("seed", 0);
        auto grids = sec.get_grids("grids", {16, 32, 64});
        auto reps = check_ym_equivariance(random_metric(71 + s, 2, 0.08, 1),
                                          random_form(72 + s, 2, 1, LieAlgebra::su2, 0.8, 1),
                                          random_vector(76 + s, 2, 0.01, 1),
                                          random_form(73 + s, 2, 0, LieAlgebra::su2, 1.0, 1),
                                          random_form(74 + s, 2, 1, LieAlgebra::su2, 1.0, 1),
                                          random_form(75 + s, 2, 1, LieAlgebra::su2, 1.0, 1),
                                          grids);
        CheckResult res;
        res.name = "ym_equivariance";
        res.passed = true;
        ordered_json squares = ordered_json::array();
        for (auto& r : reps) {
            squares.push_back(r.to_json());
            res.passed = res.passed && r.passed;
            res.tables.emplace_back(r.name, r);
        }
        res.report["name"] = res.name;
        res.report["anchor"] = "YMequivariance";
        res.report["squares"] = squares;
        res.report["passed"] = res.passed;
        return res;
    }});

    out.push_back({"sym_isomorphism", "akeythm", [](const Section& sec) {
        int d = static_cast<int>(sec.get_int("word_degree", 3));
        SymComplex sc{1, 1, d};
        RationalMatrix id(2, 2), N(2, 2), q(2, 2);
        id(0, 0) = id(1, 1) = 1;
        N(1, 0) = Rational(2, 3);
        q(1, 0) = 1;
        auto iso = induced_sym_isomorphism(sc, {id, N}, q);

        SymComplex rich{2, 2, std::min(d, 3)};
        RationalMatrix rid(4, 4), a1(4, 4), qr(4, 4);
        for (int i = 0; i < 4; ++i) rid(i, i) = 1;
        a1(0, 1) = Rational(1, 2);
        a1(1, 0) = -1;
        a1(2, 3) = Rational(3, 7);
        a1(3, 2) = Rational(1, 5);
        qr(2, 0) = 1;
        qr(3, 0) = 2;
        qr(2, 1) = 3;
        qr(3, 1) = -1;
        auto iso2 = induced_sym_isomorphism(rich, {rid, a1}, qr);

        CheckResult res;
        res.name = "sym_isomorphism";
        res.passed = iso.intertwines && iso2.intertwines;
        res.report["name"] = res.name;
        res.report["anchor"] = "akeythm";
        res.report["word_degree"] = d;
        res.report["two_term_basis_size"] = iso.basis.size();
        res.report["four_generator_basis_size"] = iso2.basis.size();
        res.report["intertwines"] = ordered_json::array({iso.intertwines, iso2.intertwines});
        res.report["passed"] = res.passed;
        return res;
    }});

    return out;
}

std::vector<std::string> suite_names(const Config& cfg) {
    if (cfg.globals.has("suite")) {
        std::vector<std::string> names;
        std::istringstream is(cfg.globals.kv.at("suite"));
        std::string tok;
        while (is >> tok) names.push_back(tok);
        return names;
    }
    std::vector<std::string> names;
    for (const auto& [n, s] : cfg.sections)
        if (n != "ce") names.push_back(n);
    return names;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << text;
}

int cmd_run(const std::string& config_path, std::string out_dir, int jobs) {
    Config cfg = parse_config(config_path);
    auto checks = catalog();
    auto names = suite_names(cfg);

    struct Task {
        std::string name;
        const Check* check;
        const Section* sec;
    };
    std::vector<Task> tasks;
    for (const auto& n : names) {
        const Check* found = nullptr;
        for (const auto& c : checks)
            if (c.name == n) found = &c;
        if (!found) throw ConfigError("unknown check name: " + n);
        tasks.push_back({n, found, &cfg.section(n)});
    }
    // validate grid lists up front so bad config never reaches the workers
    for (const auto& t : tasks) t.sec->get_grids("grids", {16, 32, 64});

    if (out_dir.empty()) out_dir = cfg.globals.get("out", "reports");
    fs::create_directories(out_dir);

    std::vector<CheckResult> results(tasks.size());
    std::vector<std::string> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    if (jobs < 1) jobs = 1;
    jobs = std::min<int>(jobs, std::max<std::size_t>(tasks.size(), 1));
    auto worker = [&]() {
        for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
            try {
                results[i] = tasks[i].check->run(*tasks[i].sec);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    int passed = 0, failed = 0;
    ordered_json summary;
    summary["config"] = fs::path(config_path).filename().string();
    ordered_json list = ordered_json::array();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!errors[i].empty()) {
            results[i].name = tasks[i].name;
            results[i].passed = false;
            results[i].report["name"] = tasks[i].name;
            results[i].report["error"] = errors[i];
            results[i].report["passed"] = false;
        }
        write_text(fs::path(out_dir) / (tasks[i].name + ".json"),
                   results[i].report.dump(2) + "\n");
        for (const auto& [tname, rep] : results[i].tables)
            rep.write_csv((fs::path(out_dir) / (tname + ".csv")).string());
        list.push_back({{"name", tasks[i].name}, {"passed", results[i].passed}});
        (results[i].passed ? passed : failed)++;
        std::cout << (results[i].passed ? "PASS " : "FAIL ") << tasks[i].name << "\n";
    }
    summary["checks"] = list;
    summary["passed"] = passed;
    summary["failed"] = failed;
    summary["all_passed"] = (failed == 0);
    write_text(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
    std::cout << passed << " passed, " << failed << " failed\n";
    return failed == 0 ? 0 : 1;
}

int cmd_ce(const std::string& config_path, std::string out_dir) {
    Config cfg = parse_config(config_path);
    const Section& sec = cfg.section("ce");
    int trunc = static_cast<int>(sec.get_int("truncation", cfg.globals.get_int("truncation", 4)));
    std::size_t cap = static_cast<std::size_t>(
        sec.get_int("basis_cap", cfg.globals.get_int("basis_cap", 20000)));
    if (out_dir.empty()) out_dir = cfg.globals.get("out", "reports");
    fs::create_directories(out_dir);

    using namespace gencov;
    ordered_json report;
    report["truncation"] = trunc;
    ordered_json exs = ordered_json::array();

    auto tangent_dims = [](const ActionLieData& a, const std::vector<Rational>& p) {
        auto [h_minus, h_zero] = cohomology_of_tangent_complex(build_tangent_complex(a, p));
        return ordered_json::array({h_minus, h_zero});
    };

    try {
        {
            auto a = examples::so2_r2(trunc);
            ordered_json j;
            j["name"] = "rotations_of_the_plane";
            j["tangent_at_origin"] = tangent_dims(a, {Rational(0), Rational(0)});
            j["tangent_at_unit_x"] = tangent_dims(a, {Rational(1), Rational(0)});
            auto levels = build_ce_complex(a, trunc, 1, cap);
            auto inv = invariants_h0(a, trunc);
            j["h0_dimension"] = inv.size();
            ordered_json basis = ordered_json::array();
            for (const auto& e : inv) basis.push_back(e.to_string());
            j["h0_basis"] = basis;
            j["level_dimensions"] =
                ordered_json::array({levels[0].basis.size(), levels[1].basis.size()});
            exs.push_back(j);
        }
        {
            auto a = examples::so3_r3(trunc);
            ordered_json j;
            j["name"] = "rotations_of_3_space";
            j["tangent_at_origin"] = tangent_dims(a, {Rational(0), Rational(0), Rational(0)});
            auto inv = invariants_h0(a, trunc);
            j["h0_dimension"] = inv.size();
            exs.push_back(j);
        }
        {
            auto a = examples::trivial_action(2, 2, trunc);
            ordered_json j;
            j["name"] = "abelian_pair_acting_trivially";
            j["tangent_at_origin"] = tangent_dims(a, {Rational(0), Rational(0)});
            auto inv = invariants_h0(a, trunc);
            j["h0_dimension"] = inv.size();  // the whole truncated polynomial space
            exs.push_back(j);
        }
    } catch (const std::length_error& e) {
        std::cerr << "basis cap exceeded: " << e.what() << "\n";
        return 1;
    }
    report["examples"] = exs;
    write_text(fs::path(out_dir) / "ce_report.json", report.dump(2) + "\n");
    std::cout << "wrote " << (fs::path(out_dir) / "ce_report.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical and exact checks for the generalized-covariance toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;

    auto* run = app.add_subcommand("run", "run a check suite from a config file");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_option("--jobs", jobs, "worker count");

    auto* ce = app.add_subcommand("ce", "invariant series and tangent complexes");
    ce->add_option("--config", config_path, "config file")->required();
    ce->add_option("--out", out_dir, "output directory (overrides the config)");

    auto* list = app.add_subcommand("list", "list available checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (list->parsed()) {
            for (const auto& c : catalog()) std::cout << c.name << "  " << c.anchor << "\n";
            return 0;
        }
        if (run->parsed()) return cmd_run(config_path, out_dir, jobs);
        return cmd_ce(config_path, out_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
