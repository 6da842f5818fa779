#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "zlocus/field_model.hpp"
#include "zlocus/planar_quad.hpp"

namespace zlocus {

// H_phi collapsed below representable positivity.
struct DegenerateFieldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FrequencyOptions {
    PlanarQuadOptions quad;
    int threads = 1;

    FrequencyOptions with_scale(double s) const {
        FrequencyOptions o = *this;
        o.quad = o.quad.with_scale(s);
        return o;
    }
};

// Raw quantities. height integrates |u|^2 over the sphere of radius r around
// x; dirichlet integrates |grad u|^2 over the ball.
double height(const FieldModel& model, const Vec4& x, double r, const FrequencyOptions& opts = {});
double dirichlet(const FieldModel& model, const Vec4& x, double r,
                 const FrequencyOptions& opts = {});
double frequency(const FieldModel& model, const Vec4& x, double r,
                 const FrequencyOptions& opts = {});  // r D / H

struct SmoothedQuartet {
    double h_phi;
    double d_phi;
    double e_phi;
    double n_phi;
};

SmoothedQuartet smoothed_quartet(const FieldModel& model, const Vec4& x, double r,
                                 const FrequencyOptions& opts = {});

double smoothed_frequency(const FieldModel& model, const Vec4& x, double r,
                          const FrequencyOptions& opts = {});

// W_s^r(x) = N_phi(x, r) - N_phi(x, s), 0 < s < r (s = r allowed, gives 0).
double pinching(const FieldModel& model, const Vec4& x, double s, double r,
                const FrequencyOptions& opts = {});

// The radial derivative of N_phi in its exact flat integral form:
//   (2 / (r H_phi)) * int -phi'(d/r) d^{-1} |grad_{eta_x} u - N_phi u|^2 dy.
// Nonnegative up to quadrature error.
double radial_derivative_N(const FieldModel& model, const Vec4& x, double r,
                           const FrequencyOptions& opts = {});

// Directional derivative of N_phi in center, exact flat integral form.
double v_derivative_N(const FieldModel& model, const Vec4& x, double r, const Vec4& v,
                      const FrequencyOptions& opts = {});

struct IdentityResidual {
    std::string name;
    double r;
    double lhs;
    double rhs;
    double rel_residual;
};

// The five exact integration-by-parts identities of the flat setting.
// Left sides are central differences of quadrature values with step h; right
// sides are the closed-form integrals.
std::vector<IdentityResidual> check_flat_identities(const FieldModel& model, const Vec4& x,
                                                    double r, double h,
                                                    const Vec4& v = {0.5, 0.5, 0.5, 0.5},
                                                    const FrequencyOptions& opts = {});

struct FrequencyProfile {
    Vec4 center{};
    std::vector<double> radii;
    std::vector<double> H, D, N;
    std::vector<double> H_phi, D_phi, E_phi, N_phi;
    std::vector<double> W_quarter_to_4r;
    int quad_panel_order = 0;
    double quad_scale = 1.0;
};

FrequencyProfile compute_profile(const FieldModel& model, const Vec4& x,
                                 const std::vector<double>& radii,
                                 const FrequencyOptions& opts = {});

void write_profile_csv(std::ostream& out, const FrequencyProfile& p);
std::string identity_report_json(const std::vector<IdentityResidual>& rows);

// Annulus integral of |grad_{eta_x} u - N_phi(x, d) u|^2 over B(3r) - B(r/3),
// with the frequency evaluated at the running distance d.
double pinching_annulus_integral(const FieldModel& model, const Vec4& x, double r,
                                 const FrequencyOptions& opts = {});

}  // namespace zlocus
