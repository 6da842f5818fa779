#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "zlocus/field_model.hpp"
#include "zlocus/frequency.hpp"
#include "zlocus/point_cloud.hpp"

namespace zlocus {

struct BudgetExceededError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Monotone pinching oracle I(x, r) with a known upper bound.
class TamingOracle {
  public:
    virtual ~TamingOracle() = default;
    virtual double eval(const Vec4& x, double r) const = 0;
    virtual double lambda() const = 0;
};

// I(x, r) = N_phi(x, r) + C r^2 bound to a field model. Evaluations are
// memoized; the cache key is exact on (x, r) bits.
class FrequencyTamingOracle : public TamingOracle {
  public:
    FrequencyTamingOracle(const FieldModel& model, double c_coeff, double lambda,
                          FrequencyOptions opts = {});
    double eval(const Vec4& x, double r) const override;
    double lambda() const override { return lambda_; }
    void set_lambda(double l) { lambda_ = l; }

  private:
    const FieldModel* model_;
    double c_coeff_;
    double lambda_;
    FrequencyOptions opts_;
    mutable std::unordered_map<uint64_t, double> cache_;
    mutable std::mutex mutex_;
};

// Table/test oracle backed by a callback.
class CallbackTamingOracle : public TamingOracle {
  public:
    CallbackTamingOracle(std::function<double(const Vec4&, double)> fn, double lambda)
        : fn_(std::move(fn)), lambda_(lambda) {}
    double eval(const Vec4& x, double r) const override { return fn_(x, r); }
    double lambda() const override { return lambda_; }

  private:
    std::function<double(const Vec4&, double)> fn_;
    double lambda_;
};

// Estimate an upper bound of the oracle over sampled carrier points at the
// largest working radius (plus a small margin).
double estimate_lambda(const TamingOracle& raw, const std::vector<Vec4>& carrier, double r_max,
                       size_t max_samples = 64);

// ---- quantitative affine independence ----

// True iff some (k+1)-subset of pts is beta-linearly independent; on success
// the witness indices are written to cert (k+1 entries). Exhaustive up to 40
// points, greedy + 2-swap beyond.
bool beta_span(const std::vector<Vec4>& pts, int k, double beta, std::vector<int>* cert = nullptr);

// Distance from p to the affine span of base (Gram-Schmidt route).
double dist_to_affine_span(const Vec4& p, const std::vector<Vec4>& base);
// Independent distance computation (normal-equations route), for certificate
// re-verification.
double dist_to_affine_span_ls(const Vec4& p, const std::vector<Vec4>& base);

struct SpineResult {
    AffineSubspace spine;       // (k-1)-dimensional
    double max_distance = 0.0;  // over the input set
    bool half_max_certified = true;
};

// When pts fails to beta-span a k-plane, returns a (k-1)-plane whose
// 2 beta neighborhood contains pts. Returns nullopt when pts beta-spans.
std::optional<SpineResult> find_spine(const std::vector<Vec4>& pts, int k, double beta);

// ---- good/bad covering ----

struct CoveringParams {
    double beta = 0.1;
    double beta_bar = 0.01;
    double delta = -1.0;  // default 0.05 * lambda
    double tau = -1.0;    // default 0.02 * lambda
    double lambda = -1.0; // default oracle.lambda()
    int max_generations = 12;
    size_t ball_budget = 2000000;
    size_t span_subsample = 48;
    int threads = 1;

    void validate() const;
    double delta_or_default() const;
    double tau_or_default() const;
};

enum class BallLabel { Root, Good, Bad, Leaf };

struct Ball {
    Vec4 center{};
    double radius = 0.0;
    BallLabel label = BallLabel::Root;
    int depth = 0;
    int parent = -1;
    double pinch_value = 0.0;   // I(center, radius/2) for refined balls
    bool pinch_certified = false;
};

struct GenerationRow {
    int generation = 0;
    size_t ball_count = 0;
    size_t frozen_bad = 0;
    double content = 0.0;  // sum r_i^2 over frozen + current
};

struct CoveringState {
    std::vector<Ball> tree;       // all nodes, parents before children
    std::vector<int> final_balls; // indices into tree: frozen bad + last leaves
    std::vector<Vec4> carrier;
    std::vector<int> root_points; // carrier indices inside the root
    // carrier index -> final ball index that captured it (bad freeze or leaf)
    std::vector<int> captured_by;
    CoveringParams params;
    double lambda = 0.0;
    std::vector<GenerationRow> ledger;

    double content() const;
    WeightedPointCloud ball_cloud() const;  // atoms = centers, weights = r^2
    // truncation mu_j: atoms with radius <= beta^{N-j} * root radius
    WeightedPointCloud mu_truncation(int j) const;
    int generations = 0;
};

// Points of `pts` (by index) whose oracle value at radius beta*r/2 reaches
// lambda - delta.
std::vector<int> pinched_set(const TamingOracle& oracle, const std::vector<Vec4>& pts,
                             const std::vector<int>& candidate, double r, double delta,
                             double beta, double lambda);

// Bad iff the pinched subset fails to (beta_bar * r)-span a 2-plane.
BallLabel classify_ball(const Ball& ball, const std::vector<Vec4>& carrier,
                        const std::vector<int>& pts_in_ball, const TamingOracle& oracle,
                        const CoveringParams& params, double lambda);

// Maximal (sep)-separated subset of pts (by index), greedy in lexicographic
// order; every input point ends within sep of a chosen center.
std::vector<int> greedy_net(const std::vector<Vec4>& carrier, const std::vector<int>& pts,
                            double sep);

// One refinement sweep: good balls are jointly replaced by beta*r children
// centered on a net of the surviving carrier; bad balls pass through.
std::vector<Ball> refine(const std::vector<Ball>& balls, const std::vector<Vec4>& carrier,
                         const std::vector<int>& active, const TamingOracle& oracle,
                         const CoveringParams& params);

CoveringState iterate_covering(const Ball& root, const std::vector<Vec4>& carrier,
                               const TamingOracle& oracle, const CoveringParams& params, int n);

bool verify_packing(const std::vector<Ball>& balls);
bool verify_coverage(const std::vector<Ball>& balls, const std::vector<Vec4>& pts);

// ---- discrete Reifenberg functional ----

struct ReifenbergReport {
    double functional = 0.0;   // sum_z w_z sum_s D_mu^2(z, s) ln 2
    double mass_ratio = 0.0;   // mu(B(x, r)) / r^2
};

ReifenbergReport reifenberg_functional(const WeightedPointCloud& cloud, const Vec4& x, double r,
                                       int n_scales);

// ---- scale-s covering of the sampled zero set ----

struct ContentRow {
    double scale = 0.0;
    size_t ball_count = 0;
    double content = 0.0;
    double wall_seconds = 0.0;
};

struct MinkowskiResult {
    std::vector<Ball> cover;  // final family, radii in [4 beta_bar s, s]
    double content = 0.0;
    int type2_rounds = 0;
    size_t realized_split_count = 0;  // largest net used for one spine split
    bool budget_exceeded = false;
    bool all_internal_packings_ok = true;
    std::vector<ContentRow> ledger;
};

MinkowskiResult minkowski_estimate(const std::vector<Vec4>& carrier, const Ball& root,
                                   const TamingOracle& oracle, double s,
                                   const CoveringParams& params);

std::string covering_tree_json(const CoveringState& state);
void write_content_csv(std::ostream& out, const std::vector<ContentRow>& rows);

}  // namespace zlocus
