#pragma once

#include <optional>
#include <string>
#include <vector>

#include "zlocus/covering.hpp"
#include "zlocus/field_model.hpp"

namespace zlocus {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FreqProfileConfig {
    Vec4 center{0, 0, 0, 0};
    std::vector<double> radii;          // explicit grid, or generated from range
    double identity_h_rel = 1e-4;       // h = h_rel * r for the identity checks
    int identity_pairs = 0;             // sampled (x, r) pairs; 0 = only the center
    double residual_threshold = 1e-3;
};

struct BetaCommandConfig {
    std::string cloud_csv;              // optional: read atoms from CSV
    bool sample_from_model = false;
    double sample_spacing = 0.1;
    double sample_tol = 1e-6;
    struct Query {
        Vec4 x{};
        double r = 1.0;
    };
    std::vector<Query> queries;
};

struct CoverCommandConfig {
    double scale_s = 0.05;
    double sample_spacing = 0.0;  // 0 = derived from the leaf radius
    CoveringParams params;
    double oracle_c = 0.0;
    double lambda_margin = 0.02;
    double oracle_quad_scale = 0.5;  // oracle accuracy needs ~1e-4, not 1e-8
};

struct SampleZeroConfig {
    double spacing = 0.1;
    double tol = 1e-6;
};

struct VerifyConfig {
    std::vector<std::string> suites;  // empty = all
    int size = 64;                    // per-suite instance count scaling
};

struct ExperimentConfig {
    FieldModel model;
    Box4 box;
    uint64_t seed = 1;
    int threads = 1;
    double quad_scale = 1.0;
    int quad_order = 16;

    std::optional<FreqProfileConfig> freq_profile;
    std::optional<BetaCommandConfig> beta;
    std::optional<CoverCommandConfig> cover;
    std::optional<SampleZeroConfig> sample_zero;
    std::optional<VerifyConfig> verify;

    FrequencyOptions frequency_options() const;
};

// Strict parse: unknown keys anywhere reject the config.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
// Canonical serialization (sorted keys, shortest round-trip floats).
std::string serialize_config(const ExperimentConfig& config);

FieldModel model_from_json_text(const std::string& json_text);
std::string model_to_json_text(const FieldModel& model);

}  // namespace zlocus
