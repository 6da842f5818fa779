#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include "zlocus/field_model.hpp"
#include "zlocus/planar_quad.hpp"
#include "zlocus/qtuple.hpp"

using namespace zlocus;

namespace {

double tuple_norm_at(const FieldModel& m, const Vec4& x) { return norm(m.evaluate(x)) / std::sqrt(2.0); }

// central-difference directional derivative of one aligned branch
double fd_directional(const FieldModel& m, const Vec4& x, const Vec4& v, double h) {
    Complex f0 = m.branch_value(m.z_of(x));
    auto aligned = [&](const Vec4& p) {
        Complex f = m.branch_value(m.z_of(p));
        if (std::norm(f - f0) > std::norm(f + f0)) f = -f;
        return f;
    };
    Complex fp = aligned(x + h * v);
    Complex fm = aligned(x - h * v);
    return std::abs((fp - fm) / (2.0 * h));
}

AffineSubspace rotated_plane() {
    // invariant plane spanned by two non-axis directions
    AffineSubspace p;
    p.dim = 2;
    p.origin = {0, 0, 0, 0};
    p.basis[0] = normalized(Vec4{0, 1, 1, 0});
    p.basis[1] = normalized(Vec4{0, -1, 1, 2});
    // orthonormalize the second against the first
    p.basis[1] = normalized(p.basis[1] - dot(p.basis[1], p.basis[0]) * p.basis[0]);
    return p;
}

}  // namespace

TEST_CASE("evaluate: pinned examples") {
    FieldModel k1 = FieldModel::homogeneous_planar(1);
    // |u| at a point with |z| = 1, arbitrary w: |z^{1/2}| = 1
    Vec4 x{1.0, 0.0, 0.7, -2.0};
    CHECK(tuple_norm_at(k1, x) == doctest::Approx(1.0).epsilon(1e-13));
    // against the direct complex square root
    Complex direct = std::sqrt(Complex(1.0, 0.0));
    CHECK(std::abs(k1.branch_value(k1.z_of(x)) - direct) <= 1e-14);

    // on the zero plane
    Vec4 onz{0.0, 0.0, 0.3, -5.0};
    CHECK(tuple_norm_at(k1, onz) == doctest::Approx(0.0));

    FieldModel p2 = FieldModel::polynomial_branch({{0, 0}, {1, 0}});
    Vec4 mid{0.5, 0.0, 9.0, -3.0};
    CHECK(tuple_norm_at(p2, mid) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("evaluate is two-valued with +- symmetry") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    FieldModel models[] = {FieldModel::homogeneous_planar(1), FieldModel::homogeneous_planar(3),
                           FieldModel::polynomial_branch({{0, 0}, {1, 0}, {0, 1}})};
    for (const auto& m : models)
        for (int it = 0; it < 50; ++it) {
            Vec4 x{u(rng), u(rng), u(rng), u(rng)};
            QTuple t = m.evaluate(x);
            CHECK(dist(t, t.negated()) <= 1e-12);
        }
}

TEST_CASE("gradient: pinned examples and finite-difference oracle") {
    FieldModel k1 = FieldModel::homogeneous_planar(1);
    Vec4 x{1.0, 0.0, 0.2, 0.2};
    Vec4 radial{1, 0, 0, 0};
    QTuple g = k1.gradient(x, radial);
    double mag = norm(g) / std::sqrt(2.0);
    CHECK(mag == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mag == doctest::Approx(fd_directional(k1, x, radial, 1e-6)).epsilon(1e-7));

    // invariant directions give the zero tuple
    Vec4 wdir{0, 0, 1, 0};
    CHECK(norm(k1.gradient(x, wdir)) <= 1e-14);

    FieldModel k3 = FieldModel::homogeneous_planar(3);
    QTuple g3 = k3.gradient(x, radial);
    CHECK(norm(g3) / std::sqrt(2.0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(norm(g3) / std::sqrt(2.0) ==
          doctest::Approx(fd_directional(k3, x, radial, 1e-6)).epsilon(1e-7));
}

TEST_CASE("gradient near the zero set is rejected") {
    FieldModel k1 = FieldModel::homogeneous_planar(1);
    Vec4 near_z{1e-10, 0.0, 0.5, 0.5};
    CHECK_THROWS_AS(k1.gradient(near_z, {1, 0, 0, 0}), std::domain_error);
    CHECK_THROWS_AS(k1.energy_density(near_z), std::domain_error);
}

TEST_CASE("energy density: closed forms and finite differences") {
    FieldModel k1 = FieldModel::homogeneous_planar(1);
    for (double r : {0.3, 0.8, 1.7}) {
        Vec4 x{r, 0.0, -0.4, 0.1};
        auto e = k1.energy_density(x);
        CHECK(e.u_sq == doctest::Approx(r).epsilon(1e-13));
        CHECK(e.grad_sq == doctest::Approx(1.0 / (2.0 * r)).epsilon(1e-13));
        // finite-difference oracle for |grad u|^2 over the frame
        double acc = 0.0;
        for (int d = 0; d < 4; ++d) {
            Vec4 v{};
            v[d] = 1.0;
            double g = fd_directional(k1, x, v, 1e-6);
            acc += g * g;
        }
        CHECK(e.grad_sq == doctest::Approx(acc).epsilon(1e-6));
    }
    Vec4 onz{0.0, 0.0, 1.0, 1.0};
    CHECK(k1.u_squared(k1.z_of(onz)) == 0.0);
}

TEST_CASE("homogeneity of |u|^2 under scaling about the pole") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int k : {1, 3, 5}) {
        FieldModel m = FieldModel::homogeneous_planar(k);
        for (int it = 0; it < 40; ++it) {
            Vec4 x{u(rng), u(rng), u(rng), u(rng)};
            if (m.dist_to_zero(x) < 1e-3) continue;
            double lam = 0.05 + 0.9 * std::abs(u(rng)) / 1.5;
            double lhs = m.u_squared(m.z_of(lam * x));
            double rhs = std::pow(lam, static_cast<double>(k)) * m.u_squared(m.z_of(x));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }
    }
}

TEST_CASE("rotated invariant plane: field constant along the plane") {
    FieldModel m = FieldModel::homogeneous_planar(3, rotated_plane());
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto plane = rotated_plane();
    for (int it = 0; it < 30; ++it) {
        Vec4 x{u(rng), u(rng), u(rng), u(rng)};
        if (m.dist_to_zero(x) < 1e-2) continue;
        for (int b = 0; b < 2; ++b) {
            CHECK(norm(m.gradient(x, plane.basis[b])) <= 1e-12);
            double before = m.u_squared(m.z_of(x));
            double after = m.u_squared(m.z_of(x + 0.37 * plane.basis[b]));
            CHECK(after == doctest::Approx(before).epsilon(1e-11));
        }
    }
}

TEST_CASE("volume growth of |U|^2 around zero-plane centers") {
    // int_{B_c(r)} |U|^2 <= C r^{4+k} for centers on the invariant plane
    for (int k : {1, 3}) {
        FieldModel m = FieldModel::homogeneous_planar(k);
        Vec4 c{0, 0, 0.3, -0.2};
        double prev_ratio = -1.0;
        for (double r : {0.125, 0.25, 0.5, 1.0}) {
            auto vals = planar_integrate(
                m, m.z_of(c), {RadialKernel::ball_raw(r)},
                [&](Complex z, Complex, double* out) { out[0] = 2.0 * m.u_squared(z); }, {});
            double ratio = vals[0] / std::pow(r, 4.0 + k);
            if (prev_ratio > 0) CHECK(ratio == doctest::Approx(prev_ratio).epsilon(1e-8));
            prev_ratio = ratio;
        }
    }
}

TEST_CASE("sample_zero_set: planar model fills its plane") {
    FieldModel k1 = FieldModel::homogeneous_planar(1);
    Box4 box;
    ZeroSample s = k1.sample_zero_set(box, 0.1, 1e-6);
    REQUIRE(!s.cloud.atoms.empty());
    for (const auto& a : s.cloud.atoms) {
        CHECK(std::abs(a.position[0]) <= 1e-12);
        CHECK(std::abs(a.position[1]) <= 1e-12);
    }
    // 21 x 21 grid on the plane
    CHECK(s.cloud.atoms.size() == 441);
}

TEST_CASE("sample_zero_set: two-plane model clusters on both roots") {
    FieldModel p2 = FieldModel::polynomial_branch({{0, 0}, {1, 0}});
    Box4 box;
    box.bounds[0] = {-0.5, 1.5};
    ZeroSample s = p2.sample_zero_set(box, 0.25, 1e-6);
    REQUIRE(!s.cloud.atoms.empty());
    size_t on0 = 0, on1 = 0;
    for (const auto& a : s.cloud.atoms) {
        if (std::abs(a.position[0]) <= 1e-12) ++on0;
        if (std::abs(a.position[0] - 1.0) <= 1e-12) ++on1;
    }
    CHECK(on0 + on1 == s.cloud.atoms.size());
    CHECK(on0 > 0);
    CHECK(on1 > 0);
}

TEST_CASE("sample_zero_set: box disjoint from the zero set") {
    FieldModel k1 = FieldModel::homogeneous_planar(1);
    Box4 box;
    box.bounds[0] = {2.0, 3.0};
    ZeroSample s = k1.sample_zero_set(box, 0.1, 1e-6);
    CHECK(s.cloud.atoms.empty());
}

TEST_CASE("sample_zero_set: generic bisection path on the linear debug field") {
    FieldModel lin = FieldModel::linear();
    Box4 box;
    box.bounds[0] = {-0.55, 0.55};
    ZeroSample s = lin.sample_zero_set(box, 0.55, 1e-8);
    REQUIRE(!s.cloud.atoms.empty());
    for (const auto& a : s.cloud.atoms) CHECK(std::abs(a.position[0]) <= 1e-8);
}

TEST_CASE("check_harmonic: branches are harmonic away from the zero set") {
    FieldModel k1 = FieldModel::homogeneous_planar(1);
    FieldModel k3 = FieldModel::homogeneous_planar(3);
    Vec4 x{1.0, 0.0, 0.0, 0.0};
    CHECK(k1.check_harmonic(x, 1e-3) < 1e-5);
    CHECK(k3.check_harmonic(x, 1e-3) < 1e-5);
    // O(h^2) decay of the stencil residual
    double r1 = k1.check_harmonic(x, 2e-3);
    double r2 = k1.check_harmonic(x, 1e-3);
    CHECK(r2 <= 0.35 * r1);

    FieldModel lin = FieldModel::linear();
    CHECK(lin.check_harmonic({1.0, 2.0, 3.0, 4.0}, 1e-3) <= 1e-9);
    CHECK_THROWS_AS(k1.check_harmonic({1e-4, 0, 0, 0}, 1e-3), std::domain_error);
}

TEST_CASE("model construction rejects invalid parameters") {
    CHECK_THROWS_AS(FieldModel::homogeneous_planar(2), std::invalid_argument);
    CHECK_THROWS_AS(FieldModel::homogeneous_planar(0), std::invalid_argument);
    CHECK_THROWS_AS(FieldModel::polynomial_branch({}), std::invalid_argument);
}

TEST_CASE("zero sample CSV round-trips") {
    FieldModel p2 = FieldModel::polynomial_branch({{0, 0}, {1, 0}});
    Box4 box;
    box.bounds[0] = {-0.5, 1.5};
    ZeroSample s = p2.sample_zero_set(box, 0.4, 1e-6);
    REQUIRE(!s.cloud.atoms.empty());
    std::stringstream buf;
    write_cloud_csv(buf, s.cloud);
    WeightedPointCloud back = read_cloud_csv(buf);
    REQUIRE(back.atoms.size() == s.cloud.atoms.size());
    for (size_t i = 0; i < back.atoms.size(); ++i) {
        CHECK(back.atoms[i].position == s.cloud.atoms[i].position);
        CHECK(back.atoms[i].weight == s.cloud.atoms[i].weight);
    }
}
