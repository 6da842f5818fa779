#include "zlocus/frequency.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "zlocus/cutoff.hpp"
#include "zlocus/gauss.hpp"

namespace zlocus {

namespace {

void require_frequency_support(const FieldModel& model) {
    if (!model.supports_frequency())
        throw std::invalid_argument("frequency machinery does not support this model kind");
}

constexpr double kHphiFloor = 1e-300;

}  // namespace

double height(const FieldModel& model, const Vec4& x, double r, const FrequencyOptions& opts) {
    require_frequency_support(model);
    if (r <= 0.0) throw std::invalid_argument("height: r must be positive");
    Complex zx = model.z_of(x);
    auto vals = planar_integrate(
        model, zx, {RadialKernel::disk(r)},
        [&](Complex z, Complex, double* out) { out[0] = model.u_squared(z); }, opts.quad);
    return 2.0 * M_PI * r * vals[0];
}

double dirichlet(const FieldModel& model, const Vec4& x, double r, const FrequencyOptions& opts) {
    require_frequency_support(model);
    if (r <= 0.0) throw std::invalid_argument("dirichlet: r must be positive");
    Complex zx = model.z_of(x);
    auto vals = planar_integrate(
        model, zx, {RadialKernel::ball_raw(r)},
        [&](Complex z, Complex, double* out) { out[0] = model.grad_squared(z); }, opts.quad);
    return vals[0];
}

double frequency(const FieldModel& model, const Vec4& x, double r, const FrequencyOptions& opts) {
    double h = height(model, x, r, opts);
    if (h < kHphiFloor) throw DegenerateFieldError("frequency: vanishing height");
    return r * dirichlet(model, x, r, opts) / h;
}

SmoothedQuartet smoothed_quartet(const FieldModel& model, const Vec4& x, double r,
                                 const FrequencyOptions& opts) {
    require_frequency_support(model);
    if (r <= 0.0) throw std::invalid_argument("smoothed_quartet: r must be positive");
    Complex zx = model.z_of(x);
    auto vals = planar_integrate(
        model, zx,
        {RadialKernel::phi_of_r(r), RadialKernel::ball_phi(r), RadialKernel::phi_of_r(r)},
        [&](Complex z, Complex zeta, double* out) {
            double u2 = model.u_squared(z);
            double g2 = model.grad_squared(z);
            out[0] = u2;                          // -> H_phi
            out[1] = g2;                          // -> D_phi
            out[2] = 0.5 * g2 * std::norm(zeta);  // -> E_phi
        },
        opts.quad);
    SmoothedQuartet q;
    q.h_phi = 2.0 * M_PI * r * vals[0];
    q.d_phi = vals[1];
    q.e_phi = 2.0 * M_PI * r * vals[2];
    if (q.h_phi < kHphiFloor)
        throw DegenerateFieldError("smoothed_quartet: H_phi degenerate at this center/radius");
    q.n_phi = r * q.d_phi / q.h_phi;
    return q;
}

double smoothed_frequency(const FieldModel& model, const Vec4& x, double r,
                          const FrequencyOptions& opts) {
    return smoothed_quartet(model, x, r, opts).n_phi;
}

double pinching(const FieldModel& model, const Vec4& x, double s, double r,
                const FrequencyOptions& opts) {
    if (s <= 0.0 || s > r) throw std::invalid_argument("pinching: need 0 < s <= r");
    if (s == r) return 0.0;
    return smoothed_frequency(model, x, r, opts) - smoothed_frequency(model, x, s, opts);
}

double radial_derivative_N(const FieldModel& model, const Vec4& x, double r,
                           const FrequencyOptions& opts) {
    SmoothedQuartet q = smoothed_quartet(model, x, r, opts);
    Complex zx = model.z_of(x);
    double nphi = q.n_phi;
    auto vals = planar_integrate(
        model, zx, {RadialKernel::phi_of_r(r)},
        [&](Complex z, Complex zeta, double* out) {
            Complex f = model.branch_value(z);
            Complex fp = model.branch_derivative(z);
            out[0] = std::norm(fp * zeta - nphi * f);
        },
        opts.quad);
    return 4.0 * M_PI * vals[0] / q.h_phi;
}

double v_derivative_N(const FieldModel& model, const Vec4& x, double r, const Vec4& v,
                      const FrequencyOptions& opts) {
    SmoothedQuartet q = smoothed_quartet(model, x, r, opts);
    Complex zx = model.z_of(x);
    Complex vz = model.z_component(v);
    double nphi = q.n_phi;
    auto vals = planar_integrate(
        model, zx, {RadialKernel::phi_of_r(r)},
        [&](Complex z, Complex zeta, double* out) {
            Complex f = model.branch_value(z);
            Complex fp = model.branch_derivative(z);
            out[0] = ((fp * zeta - nphi * f) * std::conj(fp * vz)).real();
        },
        opts.quad);
    return 4.0 * M_PI * r * vals[0] / q.h_phi;
}

std::vector<IdentityResidual> check_flat_identities(const FieldModel& model, const Vec4& x,
                                                    double r, double h, const Vec4& v,
                                                    const FrequencyOptions& opts) {
    require_frequency_support(model);
    if (r <= 0.0 || h <= 0.0) throw std::invalid_argument("check_flat_identities: need r, h > 0");
    Vec4 vu = normalized(v);
    Complex zx = model.z_of(x);
    Complex vz = model.z_component(vu);

    SmoothedQuartet q0 = smoothed_quartet(model, x, r, opts);
    // right-hand side integrals sharing the phi(rho/r) kernel
    auto vals = planar_integrate(
        model, zx,
        {RadialKernel::phi_of_r(r), RadialKernel::phi_of_r(r), RadialKernel::phi_of_r(r)},
        [&](Complex z, Complex zeta, double* out) {
            Complex f = model.branch_value(z);
            Complex fp = model.branch_derivative(z);
            out[0] = (std::conj(f) * fp * zeta).real();       // grad_nu u . u reduced
            out[1] = std::norm(fp) * (std::conj(vz) * zeta).real();  // grad_nu u . grad_v u
            out[2] = (std::conj(f) * fp * vz).real();         // u . grad_v u
        },
        opts.quad);
    const double rhs1 = 2.0 * M_PI * vals[0];
    const double rhs3 = 4.0 * M_PI * vals[1];
    const double rhs5 = 4.0 * M_PI * r * vals[2];

    SmoothedQuartet qrp = smoothed_quartet(model, x, r + h, opts);
    SmoothedQuartet qrm = smoothed_quartet(model, x, r - h, opts);
    SmoothedQuartet qvp = smoothed_quartet(model, x + h * vu, r, opts);
    SmoothedQuartet qvm = smoothed_quartet(model, x - h * vu, r, opts);

    // Both sides of the v-derivative identities vanish identically when the
    // center sits on an invariant plane; a tiny floor at the problem scale
    // keeps the relative residual meaningful there.
    const double scale = 3.0 / r * q0.h_phi + 4.0 / r * q0.d_phi + 2.0 / (r * r) * q0.e_phi;
    auto rel = [&](double lhs, double rhs) {
        return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1e-9 * scale +
                                      std::numeric_limits<double>::epsilon());
    };
    std::vector<IdentityResidual> out;
    out.push_back({"D_phi_first_variation", r, q0.d_phi, rhs1, rel(q0.d_phi, rhs1)});
    double lhs2 = (qrp.d_phi - qrm.d_phi) / (2.0 * h);
    double rhs2 = 2.0 / r * q0.d_phi + 2.0 / (r * r) * q0.e_phi;
    out.push_back({"dr_D_phi", r, lhs2, rhs2, rel(lhs2, rhs2)});
    double lhs3 = (qvp.d_phi - qvm.d_phi) / (2.0 * h);
    out.push_back({"dv_D_phi", r, lhs3, rhs3, rel(lhs3, rhs3)});
    double lhs4 = (qrp.h_phi - qrm.h_phi) / (2.0 * h);
    double rhs4 = 3.0 / r * q0.h_phi + 2.0 * q0.d_phi;
    out.push_back({"dr_H_phi", r, lhs4, rhs4, rel(lhs4, rhs4)});
    double lhs5 = (qvp.h_phi - qvm.h_phi) / (2.0 * h);
    out.push_back({"dv_H_phi", r, lhs5, rhs5, rel(lhs5, rhs5)});
    return out;
}

FrequencyProfile compute_profile(const FieldModel& model, const Vec4& x,
                                 const std::vector<double>& radii,
                                 const FrequencyOptions& opts) {
    require_frequency_support(model);
    for (double r : radii)
        if (r <= 0.0) throw std::invalid_argument("compute_profile: radii must be positive");
    FrequencyProfile p;
    p.center = x;
    p.radii = radii;
    size_t n = radii.size();
    p.H.resize(n);
    p.D.resize(n);
    p.N.resize(n);
    p.H_phi.resize(n);
    p.D_phi.resize(n);
    p.E_phi.resize(n);
    p.N_phi.resize(n);
    p.W_quarter_to_4r.resize(n);
    p.quad_panel_order = opts.quad.panel_order;
    p.quad_scale = opts.quad.scale;

    auto task = [&](size_t i) {
        double r = radii[i];
        p.H[i] = height(model, x, r, opts);
        p.D[i] = dirichlet(model, x, r, opts);
        p.N[i] = r * p.D[i] / p.H[i];
        SmoothedQuartet q = smoothed_quartet(model, x, r, opts);
        p.H_phi[i] = q.h_phi;
        p.D_phi[i] = q.d_phi;
        p.E_phi[i] = q.e_phi;
        p.N_phi[i] = q.n_phi;
        p.W_quarter_to_4r[i] = smoothed_frequency(model, x, 4.0 * r, opts) -
                               smoothed_frequency(model, x, 0.25 * r, opts);
    };
    int nthreads = std::max(1, opts.threads);
    if (nthreads == 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) task(i);
    } else {
        // deterministic: each index writes its own slots
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) task(i);
            });
        for (auto& th : pool) th.join();
    }
    return p;
}

namespace {
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

void write_profile_csv(std::ostream& out, const FrequencyProfile& p) {
    out << "r,H,D,N,H_phi,D_phi,E_phi,N_phi,W_quarter_to_4r\n";
    for (size_t i = 0; i < p.radii.size(); ++i) {
        out << fmt(p.radii[i]) << ',' << fmt(p.H[i]) << ',' << fmt(p.D[i]) << ',' << fmt(p.N[i])
            << ',' << fmt(p.H_phi[i]) << ',' << fmt(p.D_phi[i]) << ',' << fmt(p.E_phi[i]) << ','
            << fmt(p.N_phi[i]) << ',' << fmt(p.W_quarter_to_4r[i]) << '\n';
    }
}

std::string identity_report_json(const std::vector<IdentityResidual>& rows) {
    std::ostringstream out;
    out << "[\n";
    for (size_t i = 0; i < rows.size(); ++i) {
        out << "  {\"identity\": \"" << rows[i].name << "\", \"r\": " << fmt(rows[i].r)
            << ", \"lhs\": " << fmt(rows[i].lhs) << ", \"rhs\": " << fmt(rows[i].rhs)
            << ", \"rel_residual\": " << fmt(rows[i].rel_residual) << "}";
        out << (i + 1 < rows.size() ? ",\n" : "\n");
    }
    out << "]\n";
    return out.str();
}

double pinching_annulus_integral(const FieldModel& model, const Vec4& x, double r,
                                 const FrequencyOptions& opts) {
    require_frequency_support(model);
    if (r <= 0.0) throw std::invalid_argument("pinching_annulus_integral: r must be positive");
    Complex zx = model.z_of(x);
    // int over B(3r)-B(r/3) of |grad_eta u - N_phi(x, d) u|^2, via the sphere
    // reduction at Gauss nodes in the radius.
    const int nrad = std::max(8, static_cast<int>(std::lround(24 * opts.quad.scale)));
    GaussRule rad = gauss_legendre(nrad, r / 3.0, 3.0 * r);
    double acc = 0.0;
    for (int i = 0; i < nrad; ++i) {
        double s = rad.nodes[i];
        double nphi = smoothed_frequency(model, x, s, opts);
        auto vals = planar_integrate(
            model, zx, {RadialKernel::disk(s)},
            [&](Complex z, Complex zeta, double* out) {
                Complex f = model.branch_value(z);
                Complex fp = model.branch_derivative(z);
                out[0] = std::norm(fp * zeta - nphi * f);
            },
            opts.quad);
        acc += rad.weights[i] * 2.0 * M_PI * s * vals[0];
    }
    return acc;
}

}  // namespace zlocus
