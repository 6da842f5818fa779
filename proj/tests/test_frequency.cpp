#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "zlocus/cutoff.hpp"
#include "zlocus/frequency.hpp"
#include "zlocus/gauss.hpp"
#include "zlocus/tensor_quad.hpp"

using namespace zlocus;

namespace {

const FieldModel& k1_model() {
    static FieldModel m = FieldModel::homogeneous_planar(1);
    return m;
}
const FieldModel& k3_model() {
    static FieldModel m = FieldModel::homogeneous_planar(3);
    return m;
}
const FieldModel& two_plane() {
    static FieldModel m = FieldModel::polynomial_branch({{0, 0}, {1, 0}});
    return m;
}

}  // namespace

TEST_CASE("cutoff profile invariants") {
    CHECK(cutoff::phi(0.5) == 1.0);
    CHECK(cutoff::phi(0.75) == 1.0);
    CHECK(cutoff::phi(1.0) == 0.0);
    CHECK(cutoff::phi(1.2) == 0.0);
    for (int i = 0; i <= 400; ++i) {
        double t = 1.5 * i / 400.0;
        CHECK(cutoff::dphi(t) <= 0.0);
        if (t <= 0.75 || t >= 1.0) CHECK(cutoff::dphi(t) == 0.0);
        CHECK(cutoff::phi(t) >= 0.0);
        CHECK(cutoff::phi(t) <= 1.0);
    }
    // non-increasing
    double prev = cutoff::phi(0.0);
    for (int i = 1; i <= 300; ++i) {
        double v = cutoff::phi(1.2 * i / 300.0);
        CHECK(v <= prev + 1e-15);
        prev = v;
    }
    // derivative consistency and C^2 joins via finite differences
    for (double t : {0.8, 0.9, 0.97}) {
        double fd = (cutoff::phi(t + 1e-6) - cutoff::phi(t - 1e-6)) / 2e-6;
        CHECK(fd == doctest::Approx(cutoff::dphi(t)).epsilon(1e-6));
    }
    // closed-form integral of phi(t) t against a dense quadrature split at
    // the plateau end
    double num = 0.0;
    for (auto [a, b] : {std::pair{0.3, 0.75}, std::pair{0.75, 1.0}}) {
        GaussRule g = gauss_legendre(80, a, b);
        for (int i = 0; i < 80; ++i) num += g.weights[i] * cutoff::phi(g.nodes[i]) * g.nodes[i];
    }
    CHECK(cutoff::phi_t_integral(0.3) == doctest::Approx(num).epsilon(1e-14));
    CHECK(cutoff::phi_t_integral(1.0) == 0.0);
}

TEST_CASE("height: pinned values") {
    // constant field: surface measure of the 3-sphere of radius r
    FieldModel c = FieldModel::constant(1.0);
    for (double r : {0.25, 1.0, 2.0}) {
        CHECK(height(c, {0, 0, 0, 0}, r) ==
              doctest::Approx(2.0 * M_PI * M_PI * r * r * r).epsilon(1e-12));
    }
    // degree-1/2 growth: H(0, 2r)/H(0, r) = 2^{3 + 1} = 16
    double h1 = height(k1_model(), {0, 0, 0, 0}, 0.4);
    double h2 = height(k1_model(), {0, 0, 0, 0}, 0.8);
    CHECK(h2 / h1 == doctest::Approx(16.0).epsilon(1e-10));
    // continuity: H(x, r) / (2 pi^2 r^3) -> |u(x)|^2 at non-zero points
    Vec4 x{1.0, 0.0, 0.3, 0.0};
    double u2 = k1_model().u_squared(k1_model().z_of(x));
    double hr = height(k1_model(), x, 1e-3);
    CHECK(hr / (2.0 * M_PI * M_PI * 1e-9) == doctest::Approx(u2).epsilon(1e-5));
    CHECK_THROWS_AS(height(k1_model(), x, 0.0), std::invalid_argument);
}

TEST_CASE("raw frequency of homogeneous models, dense tensor oracle") {
    for (int k : {1, 3}) {
        FieldModel m = FieldModel::homogeneous_planar(k);
        for (double r : {0.3, 0.9}) {
            double n = frequency(m, {0, 0, 0, 0}, r);
            CHECK(n == doctest::Approx(0.5 * k).epsilon(1e-10));
            // independent route: full 4D tensor quadrature
            double ht = tensor_height(m, {0, 0, 0, 0}, r);
            double dt = tensor_dirichlet(m, {0, 0, 0, 0}, r);
            CHECK(r * dt / ht == doctest::Approx(n).epsilon(1e-5));
        }
    }
    FieldModel c = FieldModel::constant(2.0);
    CHECK(dirichlet(c, {0, 0, 0, 0}, 0.7) == doctest::Approx(0.0));
}

TEST_CASE("smoothed quartet: homogeneous exactness at every radius") {
    for (int k : {1, 3, 5}) {
        FieldModel m = FieldModel::homogeneous_planar(k);
        for (double r : {0.1, 0.45, 1.0}) {
            SmoothedQuartet q = smoothed_quartet(m, {0, 0, 0, 0}, r);
            CHECK(q.n_phi == doctest::Approx(0.5 * k).epsilon(1e-10));
            CHECK(q.h_phi > 0.0);
            // flat radial-derivative consistency: E/(r D) equals N for
            // radially homogeneous fields
            CHECK(q.e_phi / (r * q.d_phi) == doctest::Approx(q.n_phi).epsilon(1e-10));
        }
    }
}

TEST_CASE("smoothed quartet: tensor-engine cross-check at an off-center point") {
    Vec4 x{0.2, 0.0, 0.3, 0.0};
    SmoothedQuartet q = smoothed_quartet(k1_model(), x, 0.3);
    TensorQuadOptions t;
    t.sphere_xi = t.sphere_phi1 = t.sphere_phi2 = 48;
    TensorQuartet tq = tensor_smoothed_quartet(k1_model(), x, 0.3, t);
    // the tensor grid converges slowly across the zero set; agreement at its
    // own accuracy level is what certifies the two independent routes
    CHECK(std::abs(tq.h_phi - q.h_phi) / q.h_phi < 1e-4);
    CHECK(std::abs(tq.n_phi - q.n_phi) / q.n_phi < 0.05);
}

TEST_CASE("smoothed quartet: constant and degenerate fields") {
    FieldModel c = FieldModel::constant(1.0);
    SmoothedQuartet q = smoothed_quartet(c, {0, 0, 0, 0}, 0.8);
    CHECK(q.d_phi == doctest::Approx(0.0));
    CHECK(q.e_phi == doctest::Approx(0.0));
    CHECK(q.n_phi == doctest::Approx(0.0));
    FieldModel z = FieldModel::constant(0.0);
    CHECK_THROWS_AS(smoothed_quartet(z, {0, 0, 0, 0}, 0.8), DegenerateFieldError);
}

TEST_CASE("pinching: pinned cases") {
    // homogeneous at the pole: frequency is radius-free
    CHECK(std::abs(pinching(k1_model(), {0, 0, 0, 0}, 0.1, 1.6)) <= 1e-9);
    CHECK(pinching(k1_model(), {0, 0, 0, 0}, 0.5, 0.5) == 0.0);
    CHECK_THROWS_AS(pinching(k1_model(), {0, 0, 0, 0}, 0.5, 0.3), std::invalid_argument);
    // second branch plane entering the window raises the frequency
    double w = pinching(two_plane(), {0, 0, 0, 0}, 0.2, 3.2);
    CHECK(w > 0.05);
    // dense tensor oracle agrees on the magnitude
    TensorQuadOptions t;
    t.sphere_xi = t.sphere_phi1 = t.sphere_phi2 = 32;
    double w_t = tensor_smoothed_quartet(two_plane(), {0, 0, 0, 0}, 3.2, t).n_phi -
                 tensor_smoothed_quartet(two_plane(), {0, 0, 0, 0}, 0.2, t).n_phi;
    CHECK(w == doctest::Approx(w_t).epsilon(0.02));
}

TEST_CASE("flat identities: pinned example points") {
    // generic off-center point of the k=1 model
    auto rows = check_flat_identities(k1_model(), {0.2, 0.0, 0.3, 0.0}, 0.3, 1e-4);
    REQUIRE(rows.size() == 5);
    for (const auto& r : rows) {
        INFO(r.name);
        CHECK(r.rel_residual < 1e-3);
    }
    // centered k=3
    auto rows3 = check_flat_identities(k3_model(), {0, 0, 0, 0.4}, 0.5, 1e-4);
    for (const auto& r : rows3) {
        INFO(r.name);
        CHECK(r.rel_residual < 1e-3);
    }
    // constant field: all sides vanish or cancel up to rounding and the
    // O(h^2) truncation of the central differences
    FieldModel c = FieldModel::constant(1.0);
    auto rowsc = check_flat_identities(c, {0, 0, 0, 0}, 0.5, 1e-4);
    for (const auto& r : rowsc) {
        INFO(r.name);
        CHECK(r.rel_residual < 1e-6);
    }
}

TEST_CASE("flat identities improve under quadrature refinement") {
    FrequencyOptions coarse;
    coarse.quad.scale = 0.5;
    FrequencyOptions fine;
    fine.quad.scale = 2.0;
    Vec4 x{0.2, 0.0, 0.3, 0.0};
    auto rc = check_flat_identities(k1_model(), x, 0.3, 1e-4, {0.5, 0.5, 0.5, 0.5}, coarse);
    auto rf = check_flat_identities(k1_model(), x, 0.3, 1e-4, {0.5, 0.5, 0.5, 0.5}, fine);
    double worst_c = 0.0, worst_f = 0.0;
    for (const auto& r : rc) worst_c = std::max(worst_c, r.rel_residual);
    for (const auto& r : rf) worst_f = std::max(worst_f, r.rel_residual);
    CHECK(worst_f < worst_c);
    CHECK(worst_f * 4.0 <= worst_c + 1e-12);
}

TEST_CASE("radial derivative of N_phi") {
    // vanishes identically for homogeneous fields centered at the pole
    CHECK(std::abs(radial_derivative_N(k1_model(), {0, 0, 0, 0}, 0.7)) <= 1e-10);
    FieldModel c = FieldModel::constant(1.0);
    CHECK(std::abs(radial_derivative_N(c, {0, 0, 0, 0}, 0.7)) <= 1e-12);
    // two-plane model: strictly positive and matched by the finite
    // difference of N_phi
    double v = radial_derivative_N(two_plane(), {0, 0, 0, 0}, 0.8);
    CHECK(v > 0.0);
    double h = 1e-3 * 0.8;
    double fd = (smoothed_frequency(two_plane(), {0, 0, 0, 0}, 0.8 + h) -
                 smoothed_frequency(two_plane(), {0, 0, 0, 0}, 0.8 - h)) /
                (2.0 * h);
    CHECK(v == doctest::Approx(fd).epsilon(1e-3));
}

TEST_CASE("integrands are invariant under the branch flip") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int it = 0; it < 50; ++it) {
        Complex z{u(rng), u(rng)}, zeta{u(rng), u(rng)}, vz{u(rng), u(rng)};
        Complex f = two_plane().branch_value(z);
        Complex fp = two_plane().branch_derivative(z);
        double nphi = 0.37;
        auto val = [&](Complex ff, Complex ffp) {
            double a = std::norm(ff);                                  // |u|^2
            double b = std::norm(ffp);                                 // |f'|^2
            double c = (std::conj(ff) * ffp * zeta).real();            // grad_nu u . u
            double d = std::norm(ffp * zeta - nphi * ff);              // |grad_eta u - N u|^2
            double e = ((ffp * zeta - nphi * ff) * std::conj(ffp * vz)).real();
            return std::array<double, 5>{a, b, c, d, e};
        };
        auto plus = val(f, fp), minus = val(-f, -fp);
        for (int i = 0; i < 5; ++i) CHECK(plus[i] == doctest::Approx(minus[i]).epsilon(1e-14));
    }
}

TEST_CASE("profile: monotone N_phi and exported columns") {
    std::vector<double> radii;
    for (int i = 1; i <= 10; ++i) radii.push_back(0.25 * i);
    FrequencyProfile p = compute_profile(two_plane(), {0, 0, 0, 0}, radii);
    for (size_t i = 1; i < p.N_phi.size(); ++i) CHECK(p.N_phi[i] >= p.N_phi[i - 1] - 1e-6);
    for (double h : p.H_phi) CHECK(h > 0.0);
    for (double h : p.H) CHECK(h > 0.0);
    // frequency climbs from the simple-root value toward the total degree
    CHECK(p.N_phi.front() == doctest::Approx(0.5).epsilon(1e-2));
    CHECK(p.N_phi.back() > 0.8);

    std::ostringstream csv;
    write_profile_csv(csv, p);
    CHECK(csv.str().rfind("r,H,D,N,H_phi,D_phi,E_phi,N_phi,W_quarter_to_4r\n", 0) == 0);

    // threaded evaluation is bit-identical to serial
    FrequencyOptions par;
    par.threads = 2;
    FrequencyProfile p2 = compute_profile(two_plane(), {0, 0, 0, 0}, radii, par);
    for (size_t i = 0; i < radii.size(); ++i) {
        CHECK(p2.N_phi[i] == p.N_phi[i]);
        CHECK(p2.H[i] == p.H[i]);
    }
}

TEST_CASE("height doubling bound along sampled radius pairs") {
    // flat-case monotonicity of H(x, r) / r^3
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int it = 0; it < 10; ++it) {
        Vec4 x{u(rng), u(rng), u(rng), u(rng)};
        double s = 0.2 + 0.3 * std::abs(u(rng));
        double r = s * (1.5 + std::abs(u(rng)));
        double hs = height(two_plane(), x, s);
        double hr = height(two_plane(), x, r);
        CHECK(hr >= std::pow(r / s, 3.0) * hs * (1.0 - 1e-9));
    }
}

TEST_CASE("scale covariance of the smoothed frequency") {
    // u_lambda(x) = u(lambda x) corresponds to dividing the roots by lambda
    double lambda = 0.5;
    FieldModel scaled = FieldModel::polynomial_branch({{0, 0}, {1.0 / lambda, 0}});
    for (double r : {0.4, 0.9}) {
        double lhs = smoothed_frequency(scaled, {0, 0, 0, 0}, r);
        double rhs = smoothed_frequency(two_plane(), {0, 0, 0, 0}, lambda * r);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
}

TEST_CASE("rotated model: planar engine is frame-exact") {
    AffineSubspace plane;
    plane.dim = 2;
    plane.origin = {0, 0, 0, 0};
    plane.basis[0] = normalized(Vec4{0, 0, 1, 1});
    plane.basis[1] = normalized(Vec4{1, -1, 0, 0});
    for (int k : {1, 3}) {
        FieldModel rot = FieldModel::homogeneous_planar(k, plane);
        CHECK(smoothed_frequency(rot, {0, 0, 0, 0}, 0.6) ==
              doctest::Approx(0.5 * k).epsilon(1e-10));
        CHECK(frequency(rot, {0, 0, 0, 0}, 0.6) == doctest::Approx(0.5 * k).epsilon(1e-10));
    }
}

TEST_CASE("center-difference pinching bound: measured constant is stable") {
    // |N(x1, r) - N(x2, r)| <= C [ sqrt|W(x1)| + sqrt|W(x2)| + r ]
    auto measured = [&](const FrequencyOptions& opts) {
        double worst = 0.0;
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int it = 0; it < 6; ++it) {
            double r = 0.5 + 0.3 * std::abs(u(rng));
            Vec4 x1{0.1 * u(rng), 0.1 * u(rng), u(rng), u(rng)};
            Vec4 x2 = x1 + (0.2 * r) * normalized(Vec4{u(rng), u(rng), u(rng), u(rng)});
            double w1 = std::abs(pinching(two_plane(), x1, 0.25 * r, 4.0 * r, opts));
            double w2 = std::abs(pinching(two_plane(), x2, 0.25 * r, 4.0 * r, opts));
            double lhs = std::abs(smoothed_frequency(two_plane(), x1, r, opts) -
                                  smoothed_frequency(two_plane(), x2, r, opts));
            worst = std::max(worst, lhs / (std::sqrt(w1) + std::sqrt(w2) + r));
        }
        return worst;
    };
    FrequencyOptions base, fine;
    fine.quad.scale = 2.0;
    double c0 = measured(base), c1 = measured(fine);
    CHECK(std::isfinite(c0));
    CHECK(c0 == doctest::Approx(c1).epsilon(0.2));
}

TEST_CASE("center-derivative pinching bound: measured constant is stable") {
    // d(x1,x2) |dv N_phi(x, r)| <= C [ sqrt|W(x1)| + sqrt|W(x2)| + r ]
    auto measured = [&](const FrequencyOptions& opts) {
        double worst = 0.0;
        std::mt19937_64 rng(37);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int it = 0; it < 5; ++it) {
            double r = 0.6 + 0.2 * std::abs(u(rng));
            Vec4 x1{0.05 * u(rng), 0.05 * u(rng), u(rng), u(rng)};
            Vec4 v = normalized(Vec4{u(rng), u(rng), u(rng), u(rng)});
            double d12 = 0.2 * r;
            Vec4 x2 = x1 + d12 * v;
            Vec4 mid = x1 + (0.5 * d12) * v;
            double w1 = std::abs(pinching(two_plane(), x1, 0.25 * r, 4.0 * r, opts));
            double w2 = std::abs(pinching(two_plane(), x2, 0.25 * r, 4.0 * r, opts));
            double dv = std::abs(v_derivative_N(two_plane(), mid, r, v, opts));
            worst = std::max(worst, d12 * dv / (std::sqrt(w1) + std::sqrt(w2) + r));
        }
        return worst;
    };
    FrequencyOptions base, fine;
    fine.quad.scale = 2.0;
    double c0 = measured(base), c1 = measured(fine);
    CHECK(std::isfinite(c0));
    CHECK(c0 == doctest::Approx(c1).epsilon(0.2));
}

TEST_CASE("v-derivative integral matches the finite difference of N_phi") {
    Vec4 x{0.3, 0.1, 0.2, -0.1};
    Vec4 v = normalized(Vec4{1, 1, 0.5, -0.3});
    double r = 0.5;
    double dv = v_derivative_N(two_plane(), x, r, v);
    double h = 1e-3 * r;
    double fd = (smoothed_frequency(two_plane(), x + h * v, r) -
                 smoothed_frequency(two_plane(), x - h * v, r)) /
                (2.0 * h);
    CHECK(dv == doctest::Approx(fd).epsilon(2e-3));
}

TEST_CASE("annulus pinching integral: bounded ratio, stable under refinement") {
    // int_{B(3r)-B(r/3)} |grad_eta u - N(d) u|^2 <= C r H_phi (W + r^2)
    auto ratio_at = [&](const FrequencyOptions& opts) {
        Vec4 x{0, 0, 0.3, -0.1};
        double r = 0.4;
        double lhs = pinching_annulus_integral(two_plane(), x, r, opts);
        double w = std::abs(pinching(two_plane(), x, 0.25 * r, 4.0 * r, opts));
        double hphi = smoothed_quartet(two_plane(), x, r, opts).h_phi;
        return lhs / (r * hphi * (w + r * r));
    };
    FrequencyOptions base, fine;
    fine.quad.scale = 1.5;
    double c0 = ratio_at(base), c1 = ratio_at(fine);
    CHECK(std::isfinite(c0));
    CHECK(c0 > 0.0);
    CHECK(c0 == doctest::Approx(c1).epsilon(0.2));
    // vanishes identically for exactly homogeneous fields
    CHECK(pinching_annulus_integral(k1_model(), {0, 0, 0, 0}, 0.4) <= 1e-8);
}

TEST_CASE("identity report serialization") {
    auto rows = check_flat_identities(k1_model(), {0.2, 0.0, 0.3, 0.0}, 0.3, 1e-4);
    std::string json = identity_report_json(rows);
    CHECK(json.find("\"identity\": \"dr_H_phi\"") != std::string::npos);
    CHECK(json.find("\"rel_residual\"") != std::string::npos);
}
