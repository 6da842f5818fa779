#pragma once

#include <complex>
#include <string>
#include <vector>

#include "zlocus/point_cloud.hpp"
#include "zlocus/qtuple.hpp"
#include "zlocus/vec4.hpp"

namespace zlocus {

using Complex = std::complex<double>;

enum class ModelKind { HomogeneousPlanar, PolynomialBranch, Constant, Linear };

struct Box4 {
    std::array<std::array<double, 2>, 4> bounds{{{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}}};
    bool contains(const Vec4& x) const {
        for (int i = 0; i < 4; ++i)
            if (x[i] < bounds[i][0] || x[i] > bounds[i][1]) return false;
        return true;
    }
    Vec4 center() const {
        return {0.5 * (bounds[0][0] + bounds[0][1]), 0.5 * (bounds[1][0] + bounds[1][1]),
                0.5 * (bounds[2][0] + bounds[2][1]), 0.5 * (bounds[3][0] + bounds[3][1])};
    }
    double half_diagonal() const {
        double s = 0.0;
        for (int i = 0; i < 4; ++i) {
            double h = 0.5 * (bounds[i][1] - bounds[i][0]);
            s += h * h;
        }
        return std::sqrt(s);
    }
};

struct ZeroSample {
    WeightedPointCloud cloud;
    double tolerance = 0.0;
};

// Analytic two-valued field on flat R^4. A splitting R^4 = R^2_z x R^2_w is
// fixed by an orthonormal frame; the branch value is an analytic function of
// z alone, so the field is invariant along the w-plane.
//
//   homogeneous-planar: branch = z^{k/2}, k odd; zero set {z = 0}
//   polynomial-branch:  branch = sqrt(prod_j (z - z_j)); zero set U_j {z = z_j}
//   constant, linear:   single-valued debug fields
class FieldModel {
  public:
    FieldModel() = default;  // constant 1 debug field
    static FieldModel homogeneous_planar(int k);
    static FieldModel homogeneous_planar(int k, const AffineSubspace& zero_plane);
    static FieldModel polynomial_branch(const std::vector<Complex>& roots);
    static FieldModel polynomial_branch(const std::vector<Complex>& roots,
                                        const AffineSubspace& zero_plane_at_origin_root);
    static FieldModel constant(double value);
    static FieldModel linear();

    ModelKind kind() const { return kind_; }
    int homogeneity_k() const { return k_; }
    // Holder exponent metadata: |U|^2 ~ d^eps near the zero sheet.
    double holder_exponent() const { return holder_; }
    double constant_value() const { return value_; }
    const std::vector<Complex>& roots() const { return roots_; }
    const Box4& box() const { return box_; }
    void set_box(const Box4& b) { box_ = b; }

    // Frame and complex coordinates. z = ((x-o).q1, (x-o).q2).
    Complex z_of(const Vec4& x) const;
    Complex w_of(const Vec4& x) const;
    Vec4 point_from_zw(Complex z, Complex w) const;
    Complex z_component(const Vec4& v) const;  // linear part only, for directions
    const Vec4& origin() const { return origin_; }

    // Branch data at a z-plane point. For two-valued kinds, the principal
    // branch; the pair {f, -f} is what carries meaning.
    Complex branch_value(Complex z) const;
    Complex branch_derivative(Complex z) const;  // df/dz
    double u_squared(Complex z) const;           // |f|^2, stable closed form
    double grad_squared(Complex z) const;        // |grad u|^2 = 2 |f'|^2

    bool supports_frequency() const { return kind_ != ModelKind::Linear; }

    // Field evaluation on R^4.
    QTuple evaluate(const Vec4& x) const;              // {u(x), -u(x)}
    QTuple gradient(const Vec4& x, const Vec4& v) const;  // {grad_v u, -grad_v u}
    struct EnergyDensity {
        double u_sq;
        double grad_sq;
    };
    EnergyDensity energy_density(const Vec4& x) const;

    double dist_to_zero(const Vec4& x) const;
    std::vector<AffineSubspace> zero_planes() const;

    // Grid-scan sampling of the zero set inside a box. For kinds with declared
    // planes, points are produced by exact projection; otherwise by |u|
    // minimization along grid edges. Weight defaults to spacing^2 per point.
    ZeroSample sample_zero_set(const Box4& box, double spacing, double tol,
                               double weight_override = -1.0) const;

    // Sum of per-axis central second differences of the branch components,
    // branch-aligned against the value at x. O(h^2) residual for harmonic
    // branches.
    double check_harmonic(const Vec4& x, double h) const;

    std::string kind_name() const;

  private:
    void set_frame_from_plane(const AffineSubspace& plane);

    ModelKind kind_ = ModelKind::Constant;
    int k_ = 1;
    double value_ = 1.0;
    double holder_ = 1.0;
    std::vector<Complex> roots_;
    Vec4 origin_{0, 0, 0, 0};
    // q[0], q[1] span the z-plane; q[2], q[3] span the invariant w-plane.
    std::array<Vec4, 4> q_{{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
    Box4 box_;
};

constexpr double kSingularGuard = 1e-9;

}  // namespace zlocus
