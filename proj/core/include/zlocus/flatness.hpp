#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "zlocus/field_model.hpp"
#include "zlocus/frequency.hpp"
#include "zlocus/point_cloud.hpp"

namespace zlocus {

struct EmptySupportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Mat4 = std::array<std::array<double, 4>, 4>;

// Cyclic Jacobi eigendecomposition of a symmetric 4x4 matrix.
// Eigenvalues ascending, eigenvectors orthonormal (columns paired by index).
struct EigenDecomposition {
    std::array<double, 4> values;
    std::array<Vec4, 4> vectors;
};
EigenDecomposition jacobi_eigen(const Mat4& m);

// Second-moment analysis of the atoms inside a closed ball.
struct MomentAnalysis {
    Vec4 ball_center{};
    double ball_radius = 0.0;
    double mass = 0.0;
    size_t atom_count = 0;
    Vec4 barycenter{};
    Mat4 second_moment{};
    std::array<double, 4> eigenvalues{};
    std::array<Vec4, 4> eigenvectors{};
};

MomentAnalysis moment_analysis(const WeightedPointCloud& cloud, const Vec4& x, double r);

// Scale-normalized planar deviation r^{-4} (lambda_1 + lambda_2); equals the
// infimum over affine 2-planes L of r^{-4} int_B dist(., L)^2 dmu. Zero on
// empty support.
double beta2(const WeightedPointCloud& cloud, const Vec4& x, double r);

// Minimizing plane: through the barycenter, spanned by the top two
// eigenvectors. Ties resolved by the Jacobi output order.
AffineSubspace best_plane(const MomentAnalysis& analysis);

// | sum_j w_j ((x_j - zbar) . v_i) x_j  -  lambda_i v_i |
double eigen_identity_residual(const WeightedPointCloud& cloud, const MomentAnalysis& analysis,
                               int i);

// Direct evaluation of the planar deviation at a given plane (for oracles).
double plane_deviation(const WeightedPointCloud& cloud, const Vec4& x, double r,
                       const AffineSubspace& plane);

struct BetaBoundReport {
    double lhs = 0.0;            // D_mu^2(x, r/8)
    double rhs = 0.0;            // (1/r^2) int (W_{r/4}^{4r}(z) + C r^2) dmu(z)
    double ratio = 0.0;          // lhs / rhs, 0 on empty support
    double pinch_integral = 0.0; // int W_{r/4}^{4r} dmu over the ball
    double mass = 0.0;           // mu(B(x, r/8))
    size_t support_size = 0;
};

BetaBoundReport beta_bound_check(const FieldModel& model, const ZeroSample& sample, const Vec4& x,
                                 double r, double c_trial, const FrequencyOptions& opts = {});

struct PoincareReport {
    double annulus_integral = 0.0;  // int over B(5r/4)-B(3r/4) of sum_j |grad_{v_j} u|^2
    double h_phi = 0.0;
    double ratio = 0.0;  // annulus_integral * r / H_phi(x, r)
    bool precondition_ok = false;   // Z intersects B(x, r/8)
};

PoincareReport poincare_check(const FieldModel& model, const Vec4& x, double r,
                              const std::array<Vec4, 3>& frame,
                              const FrequencyOptions& opts = {});

std::string analysis_json(const MomentAnalysis& analysis);

}  // namespace zlocus
