#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "zlocus/covering.hpp"
#include "zlocus/experiment_config.hpp"
#include "zlocus/flatness.hpp"
#include "zlocus/frequency.hpp"
#include "zlocus/qtuple.hpp"
#include "zlocus/tensor_quad.hpp"

namespace fs = std::filesystem;
using namespace zlocus;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitBudget = 4;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    long long seed = -1;
    int quad_order = 0;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config JSON")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override RNG seed");
    cmd->add_option("--quad-order", args.quad_order, "override quadrature panel order");
    cmd->add_option("--threads", args.threads, "override worker thread count");
}

ExperimentConfig load_with_overrides(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args.config_path);
    if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
    if (args.quad_order > 0) cfg.quad_order = args.quad_order;
    if (args.threads > 0) cfg.threads = args.threads;
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// ---------------- freq-profile ----------------

int cmd_freq_profile(const CommonArgs& args) {
    ExperimentConfig cfg = load_with_overrides(args);
    if (!cfg.freq_profile) throw ConfigError("config: missing 'freq_profile' section");
    if (!cfg.model.supports_frequency())
        throw ConfigError("config: model kind does not support frequency quadrature");
    const auto& fc = *cfg.freq_profile;
    FrequencyOptions opts = cfg.frequency_options();
    fs::create_directories(args.out_dir);

    FrequencyProfile prof = compute_profile(cfg.model, fc.center, fc.radii, opts);
    {
        std::ofstream out(fs::path(args.out_dir) / "profile.csv");
        write_profile_csv(out, prof);
    }

    // identity checks at the profile center plus sampled off-center pairs
    std::vector<IdentityResidual> rows;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double r_mid = fc.radii[fc.radii.size() / 2];
    std::vector<std::pair<Vec4, double>> pairs;
    Vec4 base = fc.center;
    if (cfg.model.dist_to_zero(base) < 1e-6) {
        // move the base slightly off the zero set for stable derivatives
        base = base + (0.35 * r_mid) * Vec4{1, 0, 0, 0};
    }
    pairs.emplace_back(base, r_mid);
    int wanted = std::max(0, fc.identity_pairs - 1);
    while (static_cast<int>(pairs.size()) < wanted + 1) {
        Vec4 x = fc.center;
        for (int d = 0; d < 4; ++d) x[d] += 0.5 * r_mid * unit(rng);
        double r = fc.radii.front() +
                   (fc.radii.back() - fc.radii.front()) * 0.5 * (unit(rng) + 1.0);
        if (r <= 0) continue;
        if (cfg.model.dist_to_zero(x) < 0.02 * r) continue;
        pairs.emplace_back(x, r);
    }
    for (const auto& [x, r] : pairs) {
        auto ids = check_flat_identities(cfg.model, x, r, fc.identity_h_rel * r,
                                         {0.5, 0.5, 0.5, 0.5}, opts);
        rows.insert(rows.end(), ids.begin(), ids.end());
    }
    write_text(fs::path(args.out_dir) / "identity_report.json", identity_report_json(rows));

    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, r.rel_residual);
    return worst <= fc.residual_threshold ? kExitOk : kExitFailure;
}

// ---------------- beta ----------------

int cmd_beta(const CommonArgs& args) {
    ExperimentConfig cfg = load_with_overrides(args);
    if (!cfg.beta) throw ConfigError("config: missing 'beta' section");
    const auto& bc = *cfg.beta;
    fs::create_directories(args.out_dir);

    WeightedPointCloud cloud;
    if (!bc.cloud_csv.empty()) {
        cloud = read_cloud_csv_file(bc.cloud_csv);
    } else if (bc.sample_from_model) {
        cloud = cfg.model.sample_zero_set(cfg.box, bc.sample_spacing, bc.sample_tol).cloud;
    } else {
        throw ConfigError("beta: need either cloud_csv or sample_from_model");
    }

    std::ostringstream out;
    out << "[";
    bool first = true;
    if (!cloud.atoms.empty()) {
        for (const auto& q : bc.queries) {
            double b2 = beta2(cloud, q.x, q.r);
            out << (first ? "\n" : ",\n");
            first = false;
            out << "  {\"x\": [" << fmt(q.x[0]) << ", " << fmt(q.x[1]) << ", " << fmt(q.x[2])
                << ", " << fmt(q.x[3]) << "], \"r\": " << fmt(q.r) << ", \"beta2\": " << fmt(b2);
            try {
                MomentAnalysis an = moment_analysis(cloud, q.x, q.r);
                out << ", \"analysis\": " << analysis_json(an);
            } catch (const EmptySupportError&) {
                out << ", \"analysis\": null";
            }
            out << "}";
        }
    }
    out << (first ? "]\n" : "\n]\n");
    write_text(fs::path(args.out_dir) / "beta_report.json", out.str());
    std::cout << out.str();
    return kExitOk;
}

// ---------------- sample-zero ----------------

int cmd_sample_zero(const CommonArgs& args) {
    ExperimentConfig cfg = load_with_overrides(args);
    if (!cfg.sample_zero) throw ConfigError("config: missing 'sample_zero' section");
    fs::create_directories(args.out_dir);
    ZeroSample sample =
        cfg.model.sample_zero_set(cfg.box, cfg.sample_zero->spacing, cfg.sample_zero->tol);
    write_cloud_csv_file((fs::path(args.out_dir) / "zero_sample.csv").string(), sample.cloud);
    return kExitOk;
}

// ---------------- cover ----------------

int cmd_cover(const CommonArgs& args) {
    ExperimentConfig cfg = load_with_overrides(args);
    if (!cfg.cover) throw ConfigError("config: missing 'cover' section");
    if (!cfg.model.supports_frequency())
        throw ConfigError("config: model kind does not support the frequency oracle");
    const auto& cc = *cfg.cover;
    fs::create_directories(args.out_dir);

    Ball root;
    root.center = cfg.box.center();
    root.radius = cfg.box.half_diagonal();

    CoveringParams params = cc.params;
    params.threads = cfg.threads;
    int n_gen = std::max(1, static_cast<int>(std::ceil(std::log(cc.scale_s / root.radius) /
                                                           std::log(params.beta) -
                                                       1e-9)));
    double leaf_r = root.radius * std::pow(params.beta, n_gen);
    double spacing = cc.sample_spacing > 0 ? cc.sample_spacing : leaf_r / 4.0;
    ZeroSample sample = cfg.model.sample_zero_set(cfg.box, spacing, 1e-6);
    std::vector<Vec4> carrier;
    carrier.reserve(sample.cloud.atoms.size());
    for (const auto& a : sample.cloud.atoms) carrier.push_back(a.position);

    FrequencyOptions opts = cfg.frequency_options().with_scale(cc.oracle_quad_scale);
    FrequencyTamingOracle oracle(cfg.model, cc.oracle_c, 0.0, opts);
    double r_probe = 0.5 * params.beta * root.radius;
    double lam = estimate_lambda(oracle, carrier, r_probe) * (1.0 + cc.lambda_margin);
    oracle.set_lambda(lam);
    params.lambda = lam;

    bool budget_hit = false;
    CoveringState state;
    MinkowskiResult mr;
    try {
        state = iterate_covering(root, carrier, oracle, params, n_gen);
        mr = minkowski_estimate(carrier, root, oracle, cc.scale_s, params);
        budget_hit = mr.budget_exceeded;
    } catch (const BudgetExceededError&) {
        budget_hit = true;
    }

    write_text(fs::path(args.out_dir) / "covering.json", covering_tree_json(state));
    {
        std::ofstream out(fs::path(args.out_dir) / "content.csv");
        write_content_csv(out, mr.ledger);
    }
    if (budget_hit) return kExitBudget;

    std::vector<Ball> family;
    for (int i : state.final_balls) family.push_back(state.tree[i]);
    std::vector<Vec4> in_root;
    for (int i : state.root_points) in_root.push_back(carrier[i]);
    bool ok = verify_packing(family) && verify_coverage(family, in_root) &&
              mr.all_internal_packings_ok && verify_coverage(mr.cover, in_root);
    return ok ? kExitOk : kExitFailure;
}

// ---------------- verify ----------------

struct SuiteResult {
    std::string name;
    int checks = 0;
    int failures = 0;
    double max_residual = 0.0;

    void record(bool ok, double residual = 0.0) {
        ++checks;
        if (!ok) ++failures;
        max_residual = std::max(max_residual, residual);
    }
};

SuiteResult suite_qtuple(uint64_t seed, int size) {
    SuiteResult res{"qtuple"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<int> qd(1, 4);
    for (int it = 0; it < size; ++it) {
        int q = qd(rng), dim = qd(rng);
        auto mk = [&]() {
            QTuple t(q, dim);
            for (int i = 0; i < q; ++i)
                for (int d = 0; d < dim; ++d) t.point(i)[d] = u(rng);
            return t;
        };
        QTuple a = mk(), b = mk(), c = mk();
        double dab = dist(a, b);
        res.record(std::abs(dab - dist(b, a)) <= 1e-12, std::abs(dab - dist(b, a)));
        double tri = dist(a, c) - (dab + dist(b, c));
        res.record(tri <= 1e-12, tri);
    }
    return res;
}

SuiteResult suite_fieldlab(uint64_t seed, int size) {
    SuiteResult res{"fieldlab"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    FieldModel k3 = FieldModel::homogeneous_planar(3);
    for (int it = 0; it < size; ++it) {
        Vec4 x{u(rng), u(rng), u(rng), u(rng)};
        QTuple t = k3.evaluate(x);
        double d = dist(t, t.negated());
        res.record(d <= 1e-12, d);
        if (k3.dist_to_zero(x) > 0.2) {
            double lam = 0.5;
            double u2a = k3.u_squared(k3.z_of(x));
            Vec4 xs = lam * x;
            double u2b = k3.u_squared(k3.z_of(xs));
            double expect = std::pow(lam, 3.0) * u2a;  // 2 alpha = k
            double rel = std::abs(u2b - expect) / (std::abs(expect) + 1e-300);
            res.record(rel <= 1e-10, rel);
            double resid = k3.check_harmonic(x, 1e-3 * std::min(1.0, k3.dist_to_zero(x)));
            res.record(resid < 1e-4, resid);
        }
    }
    return res;
}

SuiteResult suite_frequency(uint64_t seed, int size, const FrequencyOptions& opts) {
    SuiteResult res{"frequency"};
    for (int k : {1, 3}) {
        FieldModel m = FieldModel::homogeneous_planar(k);
        for (double r : {0.3, 0.7}) {
            double err = std::abs(smoothed_frequency(m, {0, 0, 0, 0}, r, opts) - 0.5 * k);
            res.record(err <= 1e-3, err);
            err = std::abs(frequency(m, {0, 0, 0, 0}, r, opts) - 0.5 * k);
            res.record(err <= 1e-3, err);
        }
    }
    FieldModel k1 = FieldModel::homogeneous_planar(1);
    int pairs = std::max(1, size / 16);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int it = 0; it < pairs; ++it) {
        Vec4 x{u(rng), u(rng), u(rng), u(rng)};
        double r = 0.25 + 0.15 * (it % 3);
        if (k1.dist_to_zero(x) < 0.02 * r) continue;
        for (const auto& row :
             check_flat_identities(k1, x, r, 1e-4 * r, {0.5, 0.5, 0.5, 0.5}, opts))
            res.record(row.rel_residual <= 1e-3, row.rel_residual);
    }
    // monotonicity along a short profile of the two-plane model
    FieldModel p2 = FieldModel::polynomial_branch({{0, 0}, {1, 0}});
    double prev = 0.0;
    for (int i = 0; i <= 8; ++i) {
        double r = 0.2 + 0.15 * i;
        double n = smoothed_frequency(p2, {0, 0, 0, 0}, r, opts);
        if (i > 0) res.record(n >= prev - 1e-6, prev - n);
        prev = n;
    }
    return res;
}

SuiteResult suite_flatness(uint64_t seed, int size) {
    SuiteResult res{"flatness"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // pinned example: unit masses at e1..e4 give 1/16 at (0, 2)
    WeightedPointCloud cloud;
    for (int i = 0; i < 4; ++i) {
        Vec4 p{};
        p[i] = 1.0;
        cloud.atoms.push_back({p, 1.0});
    }
    double err = std::abs(beta2(cloud, {0, 0, 0, 0}, 2.0) - 1.0 / 16.0);
    res.record(err <= 1e-12, err);
    for (int it = 0; it < size; ++it) {
        WeightedPointCloud c;
        int n = 5 + static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i)
            c.atoms.push_back({{u(rng), u(rng), u(rng), u(rng)}, 0.1 + std::abs(u(rng))});
        MomentAnalysis an = moment_analysis(c, {0, 0, 0, 0}, 3.0);
        for (int i = 0; i < 4; ++i) {
            double resid = eigen_identity_residual(c, an, i);
            double tol = 1e-10 * (1.0 + std::abs(an.eigenvalues[i]));
            res.record(resid <= tol, resid);
        }
        double b2 = beta2(c, {0, 0, 0, 0}, 3.0);
        double at_best = plane_deviation(c, {0, 0, 0, 0}, 3.0, best_plane(an));
        res.record(b2 <= at_best + 1e-10, b2 - at_best);
    }
    return res;
}

SuiteResult suite_covering(uint64_t seed, int size) {
    SuiteResult res{"covering"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int it = 0; it < size; ++it) {
        std::vector<Vec4> pts;
        int n = 4 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) pts.push_back({u(rng), u(rng), u(rng), u(rng)});
        double beta = 0.05 + 0.3 * std::abs(u(rng));
        std::vector<int> cert;
        if (beta_span(pts, 2, beta, &cert)) {
            bool ok = true;
            for (size_t j = 0; j < cert.size(); ++j) {
                std::vector<Vec4> rest;
                for (size_t i = 0; i < cert.size(); ++i)
                    if (i != j) rest.push_back(pts[cert[i]]);
                if (dist_to_affine_span_ls(pts[cert[j]], rest) < beta * (1.0 - 1e-9)) ok = false;
            }
            res.record(ok);
        } else if (auto spine = find_spine(pts, 2, beta)) {
            res.record(spine->max_distance <= 2.0 * beta + 1e-12,
                       spine->max_distance - 2.0 * beta);
        }
    }
    return res;
}

int cmd_verify(const CommonArgs& args) {
    ExperimentConfig cfg = load_with_overrides(args);
    VerifyConfig vc = cfg.verify.value_or(VerifyConfig{});
    fs::create_directories(args.out_dir);
    std::vector<std::string> all = {"qtuple", "fieldlab", "frequency", "flatness", "covering"};
    std::vector<std::string> suites = vc.suites.empty() ? all : vc.suites;
    for (const auto& s : suites)
        if (std::find(all.begin(), all.end(), s) == all.end())
            throw ConfigError("verify: unknown suite '" + s + "'");

    FrequencyOptions opts = cfg.frequency_options();
    std::vector<SuiteResult> results;
    for (const auto& s : suites) {
        if (s == "qtuple") results.push_back(suite_qtuple(cfg.seed, vc.size));
        if (s == "fieldlab") results.push_back(suite_fieldlab(cfg.seed + 1, vc.size));
        if (s == "frequency") results.push_back(suite_frequency(cfg.seed + 2, vc.size, opts));
        if (s == "flatness") results.push_back(suite_flatness(cfg.seed + 3, vc.size));
        if (s == "covering") results.push_back(suite_covering(cfg.seed + 4, vc.size));
    }
    std::ostringstream out;
    out << "{\n  \"seed\": " << cfg.seed << ",\n  \"quad_order\": " << cfg.quad_order
        << ",\n  \"suites\": [\n";
    int total_failures = 0;
    for (size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        total_failures += r.failures;
        out << "    {\"suite\": \"" << r.name << "\", \"checks\": " << r.checks
            << ", \"failures\": " << r.failures << ", \"max_residual\": " << fmt(r.max_residual)
            << "}" << (i + 1 < results.size() ? ",\n" : "\n");
    }
    out << "  ],\n  \"failures\": " << total_failures << "\n}\n";
    write_text(fs::path(args.out_dir) / "verify_report.json", out.str());
    std::cout << out.str();
    return total_failures == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for two-valued harmonic fields: frequency functions, "
                 "planar deviation, and good/bad ball coverings"};
    app.require_subcommand(1);

    CommonArgs freq_args, beta_args, cover_args, verify_args, sample_args;
    CLI::App* freq = app.add_subcommand("freq-profile", "frequency profile + identity report");
    add_common(freq, freq_args);
    CLI::App* beta = app.add_subcommand("beta", "planar deviation report for a point cloud");
    add_common(beta, beta_args);
    CLI::App* cover = app.add_subcommand("cover", "good/bad ball covering and content ledger");
    add_common(cover, cover_args);
    CLI::App* verify = app.add_subcommand("verify", "run the module property suites");
    add_common(verify, verify_args);
    CLI::App* sample = app.add_subcommand("sample-zero", "sample the zero set to CSV");
    add_common(sample, sample_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (freq->parsed()) return cmd_freq_profile(freq_args);
        if (beta->parsed()) return cmd_beta(beta_args);
        if (cover->parsed()) return cmd_cover(cover_args);
        if (verify->parsed()) return cmd_verify(verify_args);
        if (sample->parsed()) return cmd_sample_zero(sample_args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DegenerateFieldError& e) {
        std::cerr << "numeric degeneracy: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const BudgetExceededError& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return kExitBudget;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitConfig;
}
