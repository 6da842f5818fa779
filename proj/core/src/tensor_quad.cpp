#include "zlocus/tensor_quad.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "zlocus/cutoff.hpp"
#include "zlocus/gauss.hpp"

namespace zlocus {

namespace {

struct SphereGrid {
    // unit S^3 points expressed in the model frame as (z, w) pairs
    std::vector<Complex> z_part;
    std::vector<Complex> w_part;
    std::vector<double> weight;  // includes the Hopf Jacobian, sums to 2 pi^2
};

SphereGrid make_sphere_grid(const TensorQuadOptions& opts) {
    SphereGrid g;
    GaussRule xi = gauss_legendre(opts.sphere_xi, 0.0, 0.5 * M_PI);
    const double dp1 = 2.0 * M_PI / opts.sphere_phi1;
    const double dp2 = 2.0 * M_PI / opts.sphere_phi2;
    g.z_part.reserve(opts.sphere_xi * opts.sphere_phi1 * opts.sphere_phi2);
    for (int i = 0; i < opts.sphere_xi; ++i) {
        double c = std::cos(xi.nodes[i]);
        double s = std::sin(xi.nodes[i]);
        double wj = xi.weights[i] * c * s * dp1 * dp2;
        for (int j = 0; j < opts.sphere_phi1; ++j) {
            Complex zc = std::polar(c, (j + 0.5) * dp1);
            for (int k = 0; k < opts.sphere_phi2; ++k) {
                g.z_part.push_back(zc);
                g.w_part.push_back(std::polar(s, (k + 0.5) * dp2));
                g.weight.push_back(wj);
            }
        }
    }
    return g;
}

std::vector<std::pair<double, double>> radial_segments(const FieldModel& model, const Vec4& x,
                                                       double lo, double hi, bool split) {
    std::vector<double> bps;
    if (split && (model.kind() == ModelKind::HomogeneousPlanar ||
                  model.kind() == ModelKind::PolynomialBranch)) {
        Complex zx = model.z_of(x);
        for (const auto& root : model.roots()) {
            double d = std::abs(zx - root);
            if (d > lo && d < hi) bps.push_back(d);
        }
    }
    bps.push_back(hi);
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    std::vector<std::pair<double, double>> segs;
    double prev = lo;
    for (double p : bps) {
        if (p > prev) segs.emplace_back(prev, p);
        prev = p;
    }
    return segs;
}

}  // namespace

double tensor_height(const FieldModel& model, const Vec4& x, double r,
                     const TensorQuadOptions& opts) {
    if (r <= 0.0) throw std::invalid_argument("tensor_height: r must be positive");
    SphereGrid g = make_sphere_grid(opts);
    Complex zx = model.z_of(x);
    double acc = 0.0;
    for (size_t i = 0; i < g.z_part.size(); ++i)
        acc += g.weight[i] * model.u_squared(zx + r * g.z_part[i]);
    return r * r * r * acc;
}

double tensor_dirichlet(const FieldModel& model, const Vec4& x, double r,
                        const TensorQuadOptions& opts) {
    if (r <= 0.0) throw std::invalid_argument("tensor_dirichlet: r must be positive");
    SphereGrid g = make_sphere_grid(opts);
    Complex zx = model.z_of(x);
    double acc = 0.0;
    for (auto [a, b] : radial_segments(model, x, 0.0, r, opts.radial_split_at_planes)) {
        int n = std::max(8, static_cast<int>(std::lround(opts.radial_ball * (b - a) / r)));
        GaussRule rad = gauss_legendre(n, a, b);
        for (int is = 0; is < n; ++is) {
            double s = rad.nodes[is];
            double sph = 0.0;
            for (size_t i = 0; i < g.z_part.size(); ++i)
                sph += g.weight[i] * model.grad_squared(zx + s * g.z_part[i]);
            acc += rad.weights[is] * s * s * s * sph;
        }
    }
    return acc;
}

TensorQuartet tensor_smoothed_quartet(const FieldModel& model, const Vec4& x, double r,
                                      const TensorQuadOptions& opts) {
    if (r <= 0.0) throw std::invalid_argument("tensor_smoothed_quartet: r must be positive");
    SphereGrid g = make_sphere_grid(opts);
    Complex zx = model.z_of(x);
    double D = 0.0;
    for (auto [a, b] : radial_segments(model, x, 0.0, r, opts.radial_split_at_planes)) {
        int n = std::max(8, static_cast<int>(std::lround(opts.radial_ball * (b - a) / r)));
        GaussRule rad = gauss_legendre(n, a, b);
        for (int is = 0; is < n; ++is) {
            double s = rad.nodes[is];
            double sph = 0.0;
            for (size_t i = 0; i < g.z_part.size(); ++i)
                sph += g.weight[i] * model.grad_squared(zx + s * g.z_part[i]);
            D += rad.weights[is] * cutoff::phi(s / r) * s * s * s * sph;
        }
    }
    double H = 0.0, E = 0.0;
    for (auto [a, b] :
         radial_segments(model, x, cutoff::kPlateauEnd * r, r, opts.radial_split_at_planes)) {
        int n = std::max(8, static_cast<int>(std::lround(opts.radial_annulus * (b - a) /
                                                         ((1.0 - cutoff::kPlateauEnd) * r))));
        GaussRule rad = gauss_legendre(n, a, b);
        for (int is = 0; is < n; ++is) {
            double s = rad.nodes[is];
            double dphi_s = cutoff::dphi(s / r);
            double sph_u = 0.0, sph_e = 0.0;
            for (size_t i = 0; i < g.z_part.size(); ++i) {
                Complex z = zx + s * g.z_part[i];
                sph_u += g.weight[i] * model.u_squared(z);
                // |grad_nu u|^2 = |f'|^2 |nu_z|^2 with nu the unit radial direction
                sph_e += g.weight[i] * 0.5 * model.grad_squared(z) * std::norm(g.z_part[i]);
            }
            H += -rad.weights[is] * dphi_s * s * s * sph_u;
            E += -rad.weights[is] * dphi_s * s * s * s * s * sph_e;
        }
    }
    TensorQuartet q{H, D, E, 0.0};
    q.n_phi = r * D / H;
    return q;
}

}  // namespace zlocus
