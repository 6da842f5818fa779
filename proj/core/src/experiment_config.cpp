#include "zlocus/experiment_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace zlocus {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

Vec4 parse_vec4(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4) throw ConfigError(where + ": expected 4 numbers");
    Vec4 v;
    for (int i = 0; i < 4; ++i) v[i] = j[i].get<double>();
    return v;
}

json vec4_json(const Vec4& v) { return json::array({v[0], v[1], v[2], v[3]}); }

AffineSubspace parse_plane(const json& j) {
    check_keys(j, {"origin", "basis"}, "model.plane");
    AffineSubspace p;
    p.dim = 2;
    p.origin = j.contains("origin") ? parse_vec4(j["origin"], "model.plane.origin")
                                    : Vec4{0, 0, 0, 0};
    if (!j.contains("basis") || !j["basis"].is_array() || j["basis"].size() != 2)
        throw ConfigError("model.plane.basis: expected two basis vectors");
    p.basis[0] = parse_vec4(j["basis"][0], "model.plane.basis[0]");
    p.basis[1] = parse_vec4(j["basis"][1], "model.plane.basis[1]");
    return p;
}

Box4 parse_box(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4) throw ConfigError(where + ": expected 4 [lo, hi] pairs");
    Box4 b;
    for (int i = 0; i < 4; ++i) {
        if (!j[i].is_array() || j[i].size() != 2)
            throw ConfigError(where + ": expected [lo, hi] pairs");
        b.bounds[i][0] = j[i][0].get<double>();
        b.bounds[i][1] = j[i][1].get<double>();
        if (!(b.bounds[i][0] < b.bounds[i][1]))
            throw ConfigError(where + ": lo must be < hi");
    }
    return b;
}

json box_json(const Box4& b) {
    json j = json::array();
    for (int i = 0; i < 4; ++i) j.push_back(json::array({b.bounds[i][0], b.bounds[i][1]}));
    return j;
}

FieldModel parse_model(const json& j) {
    check_keys(j, {"kind", "k", "roots", "value", "plane", "box"}, "model");
    if (!j.contains("kind")) throw ConfigError("model: missing 'kind'");
    std::string kind = j["kind"].get<std::string>();

    std::optional<AffineSubspace> plane;
    if (j.contains("plane")) plane = parse_plane(j["plane"]);

    FieldModel model = [&]() -> FieldModel {
        if (kind == "homogeneous-planar") {
            if (!j.contains("k")) throw ConfigError("model: homogeneous-planar requires 'k'");
            int k = j["k"].get<int>();
            if (k < 1 || k % 2 == 0)
                throw ConfigError("model: homogeneous-planar k must be odd and positive");
            return plane ? FieldModel::homogeneous_planar(k, *plane)
                         : FieldModel::homogeneous_planar(k);
        }
        if (kind == "polynomial-branch") {
            if (!j.contains("roots")) throw ConfigError("model: polynomial-branch requires 'roots'");
            std::vector<Complex> roots;
            for (const auto& r : j["roots"]) {
                if (!r.is_array() || r.size() != 2)
                    throw ConfigError("model.roots: expected [re, im] pairs");
                roots.emplace_back(r[0].get<double>(), r[1].get<double>());
            }
            return plane ? FieldModel::polynomial_branch(roots, *plane)
                         : FieldModel::polynomial_branch(roots);
        }
        if (kind == "constant") {
            double v = j.contains("value") ? j["value"].get<double>() : 1.0;
            return FieldModel::constant(v);
        }
        if (kind == "linear") return FieldModel::linear();
        throw ConfigError("model: unknown kind '" + kind + "'");
    }();
    if (j.contains("box")) model.set_box(parse_box(j["box"], "model.box"));
    return model;
}

json model_json(const FieldModel& m) {
    json j;
    j["kind"] = m.kind_name();
    switch (m.kind()) {
        case ModelKind::HomogeneousPlanar:
            j["k"] = m.homogeneity_k();
            break;
        case ModelKind::PolynomialBranch: {
            json roots = json::array();
            for (const auto& r : m.roots()) roots.push_back(json::array({r.real(), r.imag()}));
            j["roots"] = roots;
            break;
        }
        case ModelKind::Constant:
            j["value"] = m.constant_value();
            break;
        case ModelKind::Linear:
            break;
    }
    auto planes = m.zero_planes();
    if (!planes.empty()) {
        json p;
        p["origin"] = vec4_json(m.origin());
        // frame vectors q3, q4 span the invariant plane
        AffineSubspace base = planes.front();
        p["basis"] = json::array({vec4_json(base.basis[0]), vec4_json(base.basis[1])});
        j["plane"] = p;
    }
    j["box"] = box_json(m.box());
    return j;
}

}  // namespace

FrequencyOptions ExperimentConfig::frequency_options() const {
    FrequencyOptions o;
    o.quad.scale = quad_scale;
    o.quad.panel_order = quad_order;
    o.threads = threads;
    return o;
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse failure: ") + e.what());
    }
    check_keys(j,
               {"model", "box", "seed", "threads", "quad_scale", "quad_order", "freq_profile",
                "beta", "cover", "sample_zero", "verify"},
               "config");
    ExperimentConfig c;
    if (!j.contains("model")) throw ConfigError("config: missing 'model'");
    c.model = parse_model(j["model"]);
    c.box = j.contains("box") ? parse_box(j["box"], "box") : c.model.box();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("threads")) {
        c.threads = j["threads"].get<int>();
        if (c.threads < 1) throw ConfigError("config: threads must be >= 1");
    }
    if (j.contains("quad_scale")) {
        c.quad_scale = j["quad_scale"].get<double>();
        if (!(c.quad_scale > 0)) throw ConfigError("config: quad_scale must be positive");
    }
    if (j.contains("quad_order")) {
        c.quad_order = j["quad_order"].get<int>();
        if (c.quad_order < 1) throw ConfigError("config: quad_order must be >= 1");
    }

    if (j.contains("freq_profile")) {
        const json& f = j["freq_profile"];
        check_keys(f, {"center", "radii", "radius_range", "identity_h_rel", "identity_pairs",
                       "residual_threshold"},
                   "freq_profile");
        FreqProfileConfig fc;
        if (f.contains("center")) fc.center = parse_vec4(f["center"], "freq_profile.center");
        if (f.contains("radii")) {
            for (const auto& r : f["radii"]) fc.radii.push_back(r.get<double>());
        } else if (f.contains("radius_range")) {
            const json& rr = f["radius_range"];
            check_keys(rr, {"min", "max", "count"}, "freq_profile.radius_range");
            double lo = rr["min"].get<double>(), hi = rr["max"].get<double>();
            int n = rr["count"].get<int>();
            if (!(lo > 0 && hi > lo && n >= 1))
                throw ConfigError("freq_profile.radius_range: need 0 < min < max, count >= 1");
            for (int i = 0; i < n; ++i)
                fc.radii.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
        } else {
            throw ConfigError("freq_profile: need 'radii' or 'radius_range'");
        }
        for (double r : fc.radii)
            if (!(r > 0)) throw ConfigError("freq_profile: radii must be positive");
        if (f.contains("identity_h_rel")) fc.identity_h_rel = f["identity_h_rel"].get<double>();
        if (f.contains("identity_pairs")) fc.identity_pairs = f["identity_pairs"].get<int>();
        if (f.contains("residual_threshold"))
            fc.residual_threshold = f["residual_threshold"].get<double>();
        c.freq_profile = fc;
    }

    if (j.contains("beta")) {
        const json& b = j["beta"];
        check_keys(b, {"cloud_csv", "sample_from_model", "sample_spacing", "sample_tol", "queries"},
                   "beta");
        BetaCommandConfig bc;
        if (b.contains("cloud_csv")) bc.cloud_csv = b["cloud_csv"].get<std::string>();
        if (b.contains("sample_from_model"))
            bc.sample_from_model = b["sample_from_model"].get<bool>();
        if (b.contains("sample_spacing")) bc.sample_spacing = b["sample_spacing"].get<double>();
        if (b.contains("sample_tol")) bc.sample_tol = b["sample_tol"].get<double>();
        if (b.contains("queries")) {
            for (const auto& q : b["queries"]) {
                check_keys(q, {"x", "r"}, "beta.queries[]");
                BetaCommandConfig::Query query;
                query.x = parse_vec4(q["x"], "beta.queries[].x");
                query.r = q["r"].get<double>();
                if (!(query.r > 0)) throw ConfigError("beta.queries[].r must be positive");
                bc.queries.push_back(query);
            }
        }
        c.beta = bc;
    }

    if (j.contains("cover")) {
        const json& v = j["cover"];
        check_keys(v,
                   {"scale_s", "sample_spacing", "beta", "beta_bar", "delta", "tau", "lambda",
                    "oracle_c", "lambda_margin", "oracle_quad_scale", "max_generations",
                    "ball_budget"},
                   "cover");
        CoverCommandConfig cc;
        if (v.contains("scale_s")) cc.scale_s = v["scale_s"].get<double>();
        if (!(cc.scale_s > 0 && cc.scale_s < 1))
            throw ConfigError("cover.scale_s must lie in (0, 1)");
        if (v.contains("sample_spacing")) cc.sample_spacing = v["sample_spacing"].get<double>();
        if (v.contains("beta")) cc.params.beta = v["beta"].get<double>();
        if (v.contains("beta_bar")) cc.params.beta_bar = v["beta_bar"].get<double>();
        if (!(cc.params.beta > 0 && cc.params.beta < 1))
            throw ConfigError("cover.beta must lie in (0, 1)");
        if (!(cc.params.beta_bar > 0 && cc.params.beta_bar < 1))
            throw ConfigError("cover.beta_bar must lie in (0, 1)");
        if (v.contains("delta")) {
            cc.params.delta = v["delta"].get<double>();
            if (!(cc.params.delta > 0)) throw ConfigError("cover.delta must be positive");
        }
        if (v.contains("tau")) {
            cc.params.tau = v["tau"].get<double>();
            if (!(cc.params.tau > 0)) throw ConfigError("cover.tau must be positive");
        }
        if (v.contains("lambda")) cc.params.lambda = v["lambda"].get<double>();
        if (v.contains("oracle_c")) cc.oracle_c = v["oracle_c"].get<double>();
        if (v.contains("lambda_margin")) cc.lambda_margin = v["lambda_margin"].get<double>();
        if (v.contains("oracle_quad_scale")) {
            cc.oracle_quad_scale = v["oracle_quad_scale"].get<double>();
            if (!(cc.oracle_quad_scale > 0))
                throw ConfigError("cover.oracle_quad_scale must be positive");
        }
        if (v.contains("max_generations"))
            cc.params.max_generations = v["max_generations"].get<int>();
        if (v.contains("ball_budget")) cc.params.ball_budget = v["ball_budget"].get<size_t>();
        c.cover = cc;
    }

    if (j.contains("sample_zero")) {
        const json& szj = j["sample_zero"];
        check_keys(szj, {"spacing", "tol"}, "sample_zero");
        SampleZeroConfig sz;
        if (szj.contains("spacing")) sz.spacing = szj["spacing"].get<double>();
        if (!(sz.spacing > 0)) throw ConfigError("sample_zero.spacing must be positive");
        if (szj.contains("tol")) sz.tol = szj["tol"].get<double>();
        c.sample_zero = sz;
    }

    if (j.contains("verify")) {
        const json& vj = j["verify"];
        check_keys(vj, {"suites", "size"}, "verify");
        VerifyConfig vc;
        if (vj.contains("suites")) {
            if (vj["suites"].empty())
                throw ConfigError("verify.suites: empty suite selection");
            for (const auto& s : vj["suites"]) vc.suites.push_back(s.get<std::string>());
        }
        if (vj.contains("size")) {
            vc.size = vj["size"].get<int>();
            if (vc.size < 1) throw ConfigError("verify.size must be >= 1");
        }
        c.verify = vc;
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    json j;
    j["model"] = model_json(c.model);
    j["box"] = box_json(c.box);
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["quad_scale"] = c.quad_scale;
    j["quad_order"] = c.quad_order;
    if (c.freq_profile) {
        json f;
        f["center"] = vec4_json(c.freq_profile->center);
        f["radii"] = c.freq_profile->radii;
        f["identity_h_rel"] = c.freq_profile->identity_h_rel;
        f["identity_pairs"] = c.freq_profile->identity_pairs;
        f["residual_threshold"] = c.freq_profile->residual_threshold;
        j["freq_profile"] = f;
    }
    if (c.beta) {
        json b;
        if (!c.beta->cloud_csv.empty()) b["cloud_csv"] = c.beta->cloud_csv;
        b["sample_from_model"] = c.beta->sample_from_model;
        b["sample_spacing"] = c.beta->sample_spacing;
        b["sample_tol"] = c.beta->sample_tol;
        json qs = json::array();
        for (const auto& q : c.beta->queries) {
            json qq;
            qq["x"] = vec4_json(q.x);
            qq["r"] = q.r;
            qs.push_back(qq);
        }
        b["queries"] = qs;
        j["beta"] = b;
    }
    if (c.cover) {
        json v;
        v["scale_s"] = c.cover->scale_s;
        v["sample_spacing"] = c.cover->sample_spacing;
        v["beta"] = c.cover->params.beta;
        v["beta_bar"] = c.cover->params.beta_bar;
        if (c.cover->params.delta > 0) v["delta"] = c.cover->params.delta;
        if (c.cover->params.tau > 0) v["tau"] = c.cover->params.tau;
        if (c.cover->params.lambda > 0) v["lambda"] = c.cover->params.lambda;
        v["oracle_c"] = c.cover->oracle_c;
        v["lambda_margin"] = c.cover->lambda_margin;
        v["oracle_quad_scale"] = c.cover->oracle_quad_scale;
        v["max_generations"] = c.cover->params.max_generations;
        v["ball_budget"] = c.cover->params.ball_budget;
        j["cover"] = v;
    }
    if (c.sample_zero) {
        json szj;
        szj["spacing"] = c.sample_zero->spacing;
        szj["tol"] = c.sample_zero->tol;
        j["sample_zero"] = szj;
    }
    if (c.verify) {
        json vj;
        if (!c.verify->suites.empty()) vj["suites"] = c.verify->suites;
        vj["size"] = c.verify->size;
        j["verify"] = vj;
    }
    return j.dump(2) + "\n";
}

FieldModel model_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model: JSON parse failure: ") + e.what());
    }
    return parse_model(j);
}

std::string model_to_json_text(const FieldModel& model) { return model_json(model).dump(2) + "\n"; }

}  // namespace zlocus
