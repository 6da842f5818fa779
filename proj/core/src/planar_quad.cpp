#include "zlocus/planar_quad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "zlocus/cutoff.hpp"
#include "zlocus/gauss.hpp"

namespace zlocus {

double RadialKernel::eval(double rho) const {
    switch (type) {
        case Type::PhiOfR:
            return cutoff::phi(rho / r);
        case Type::BallPhi:
            return 2.0 * M_PI * r * r * cutoff::phi_t_integral(rho / r);
        case Type::BallRaw: {
            double v = r * r - rho * rho;
            return v > 0.0 ? M_PI * v : 0.0;
        }
        case Type::Disk:
            return rho <= r ? 1.0 : 0.0;
        case Type::Shell: {
            if (rho >= b) return 0.0;
            double lo = std::max(rho, a);
            return M_PI * (b * b - lo * lo);
        }
    }
    return 0.0;
}

double RadialKernel::reach() const { return type == Type::Shell ? b : r; }

void RadialKernel::breakpoints(std::vector<double>& out) const {
    switch (type) {
        case Type::PhiOfR:
        case Type::BallPhi:
            out.push_back(cutoff::kPlateauEnd * r);
            out.push_back(r);
            break;
        case Type::BallRaw:
        case Type::Disk:
            out.push_back(r);
            break;
        case Type::Shell:
            out.push_back(a);
            out.push_back(b);
            break;
    }
}

void RadialKernel::jump_radii(std::vector<double>& out) const {
    if (type == Type::Disk) out.push_back(r);
}

namespace {

// C^3 step, 0 -> 1 over [0, 1].
double step_c3(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double t2 = t * t;
    return t2 * t2 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
}

// 1 on [0, eps/2], smoothly down to 0 at eps.
double bump(double rho, double eps) {
    if (rho <= 0.5 * eps) return 1.0;
    if (rho >= eps) return 0.0;
    return 1.0 - step_c3((rho - 0.5 * eps) / (0.5 * eps));
}

struct SingularDisk {
    Complex center;
    double dist;  // |center - z_center|
    double eps;
};

}  // namespace

std::vector<double> planar_integrate(const FieldModel& model, Complex z_center,
                                     const std::vector<RadialKernel>& kernels,
                                     const PlanarIntegrand& integrand,
                                     const PlanarQuadOptions& opts) {
    const size_t ncomp = kernels.size();
    if (ncomp == 0) throw std::invalid_argument("planar_integrate: no kernels");
    double reach = 0.0;
    for (const auto& k : kernels) reach = std::max(reach, k.reach());
    if (!(reach > 0.0)) throw std::invalid_argument("planar_integrate: empty reach");

    auto scaled = [&](int n) { return std::max(4, static_cast<int>(std::lround(n * opts.scale))); };
    const int q_panel = scaled(opts.panel_order);
    const int n_dt = scaled(opts.disk_angular);
    const int n_dr = scaled(opts.disk_radial);

    std::vector<double> jumps;
    for (const auto& k : kernels) k.jump_radii(jumps);

    // Singular disks around field roots within reach. The self-root of a
    // centered evaluation (dist 0) is handled by the main polar grid, whose
    // Jacobian absorbs the singularity.
    std::vector<SingularDisk> disks;
    const auto& roots = model.roots();
    if (model.kind() == ModelKind::HomogeneousPlanar ||
        model.kind() == ModelKind::PolynomialBranch) {
        std::vector<Complex> distinct;
        for (const auto& r : roots) {
            bool seen = false;
            for (const auto& d : distinct)
                if (std::abs(d - r) < 1e-14) seen = true;
            if (!seen) distinct.push_back(r);
        }
        for (const auto& zr : distinct) {
            double d = std::abs(zr - z_center);
            if (d < 1e-13) continue;
            if (d > 1.25 * reach) continue;
            double gap = std::numeric_limits<double>::infinity();
            for (const auto& other : distinct)
                if (std::abs(other - zr) > 1e-14) gap = std::min(gap, std::abs(other - zr));
            double eps = std::min({0.35 * d, 0.35 * gap, 0.5 * reach});
            // keep jump circles out of the disk when there is room
            for (double s0 : jumps) {
                double margin = std::abs(d - s0);
                if (margin < eps && margin > 1e-3 * reach) eps = 0.9 * margin;
            }
            if (eps > 0.0) disks.push_back({zr, d, eps});
        }
    }

    // --- theta panels around z_center ---
    std::vector<double> tbps;
    for (const auto& sd : disks) {
        double alpha = std::arg(sd.center - z_center);
        double gamma = std::asin(std::min(1.0, sd.eps / sd.dist));
        for (double t : {alpha - gamma, alpha, alpha + gamma}) {
            double tt = std::fmod(t, 2.0 * M_PI);
            if (tt < 0.0) tt += 2.0 * M_PI;
            tbps.push_back(tt);
        }
    }
    std::sort(tbps.begin(), tbps.end());
    tbps.erase(std::unique(tbps.begin(), tbps.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               tbps.end());
    std::vector<std::pair<double, double>> theta_panels;
    const double max_arc = 2.0 * M_PI / opts.base_theta_panels;
    auto push_arc = [&](double a, double b) {
        int nsub = std::max(1, static_cast<int>(std::ceil((b - a) / max_arc)));
        for (int i = 0; i < nsub; ++i)
            theta_panels.emplace_back(a + (b - a) * i / nsub, a + (b - a) * (i + 1) / nsub);
    };
    if (tbps.empty()) {
        push_arc(0.0, 2.0 * M_PI);
    } else {
        for (size_t i = 0; i + 1 < tbps.size(); ++i) push_arc(tbps[i], tbps[i + 1]);
        push_arc(tbps.back(), tbps.front() + 2.0 * M_PI);
    }

    // --- radial panels (shared by all theta nodes) ---
    std::vector<double> rbps;
    for (const auto& k : kernels) k.breakpoints(rbps);
    for (const auto& sd : disks)
        for (double p : {sd.dist - sd.eps, sd.dist, sd.dist + sd.eps})
            if (p > 0.0 && p < reach) rbps.push_back(p);
    rbps.push_back(reach);
    std::sort(rbps.begin(), rbps.end());
    rbps.erase(std::remove_if(rbps.begin(), rbps.end(),
                              [&](double p) { return p <= 0.0 || p > reach + 1e-15; }),
               rbps.end());
    rbps.erase(std::unique(rbps.begin(), rbps.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-14; }),
               rbps.end());
    std::vector<std::pair<double, double>> radial_panels;
    double prev = 0.0;
    const double max_len = 0.25 * reach;
    for (double p : rbps) {
        int nsub = std::max(1, static_cast<int>(std::ceil((p - prev) / max_len)));
        for (int i = 0; i < nsub; ++i)
            radial_panels.emplace_back(prev + (p - prev) * i / nsub,
                                       prev + (p - prev) * (i + 1) / nsub);
        prev = p;
    }

    std::vector<double> acc(ncomp, 0.0);
    std::vector<double> comp(ncomp);

    // main polar grid around z_center, singular disks masked out by bumps
    for (const auto& [ta, tb] : theta_panels) {
        GaussRule tg = gauss_legendre(q_panel, ta, tb);
        for (int it = 0; it < q_panel; ++it) {
            const Complex dir = std::polar(1.0, tg.nodes[it]);
            const double wt = tg.weights[it];
            for (const auto& [ra, rb] : radial_panels) {
                GaussRule rg = gauss_legendre(q_panel, ra, rb);
                for (int ir = 0; ir < q_panel; ++ir) {
                    const double rho = rg.nodes[ir];
                    Complex zeta = rho * dir;
                    Complex z = z_center + zeta;
                    double mask = 1.0;
                    for (const auto& sd : disks) mask -= bump(std::abs(z - sd.center), sd.eps);
                    if (mask <= 0.0) continue;
                    integrand(z, zeta, comp.data());
                    const double w = wt * rg.weights[ir] * rho * mask;
                    for (size_t c = 0; c < ncomp; ++c)
                        acc[c] += w * comp[c] * kernels[c].eval(rho);
                }
            }
        }
    }

    // singular disks in their own polar grids
    for (const auto& sd : disks) {
        GaussRule rg = gauss_legendre(n_dr, 0.0, sd.eps);
        const double dtheta = 2.0 * M_PI / n_dt;
        for (int it = 0; it < n_dt; ++it) {
            const Complex dir = std::polar(1.0, (it + 0.5) * dtheta);
            for (int ir = 0; ir < n_dr; ++ir) {
                const double rj = rg.nodes[ir];
                double bm = bump(rj, sd.eps);
                if (bm <= 0.0) continue;
                Complex z = sd.center + rj * dir;
                Complex zeta = z - z_center;
                double rho = std::abs(zeta);
                integrand(z, zeta, comp.data());
                const double w = dtheta * rg.weights[ir] * rj * bm;
                for (size_t c = 0; c < ncomp; ++c)
                    acc[c] += w * comp[c] * kernels[c].eval(rho);
            }
        }
    }

    return acc;
}

}  // namespace zlocus
