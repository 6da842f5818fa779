#pragma once

#include <functional>
#include <vector>

#include "zlocus/field_model.hpp"

namespace zlocus {

// Radial weight attached to one integrand component. Every 4D integral used
// by the frequency machinery has the form  int g(z(y)) * psi(|y - x|) dy
// for a w-invariant g; integrating out the two invariant directions turns
// it into a planar integral  int g(z) * K(|z - z_x|) dA(z)  with one of the
// kernels below (reach r, sphere radius s, shell [a, b]).
struct RadialKernel {
    enum class Type {
        PhiOfR,   // phi(rho / r)
        BallPhi,  // 2 pi r^2 * int_{rho/r}^1 phi(t) t dt
        BallRaw,  // pi (r^2 - rho^2)+
        Disk,     // indicator rho <= s
        Shell,    // pi (b^2 - max(rho, a)^2)+
    };
    Type type = Type::PhiOfR;
    double r = 1.0;
    double a = 0.0;
    double b = 1.0;

    double eval(double rho) const;
    double reach() const;
    void breakpoints(std::vector<double>& out) const;
    // radii where eval jumps (Disk only); root disks must not straddle these
    void jump_radii(std::vector<double>& out) const;

    static RadialKernel phi_of_r(double r) { return {Type::PhiOfR, r, 0, 0}; }
    static RadialKernel ball_phi(double r) { return {Type::BallPhi, r, 0, 0}; }
    static RadialKernel ball_raw(double r) { return {Type::BallRaw, r, 0, 0}; }
    static RadialKernel disk(double s) { return {Type::Disk, s, 0, 0}; }
    static RadialKernel shell(double a, double b) { return {Type::Shell, b, a, b}; }
};

struct PlanarQuadOptions {
    int panel_order = 16;      // GL nodes per theta/rho panel
    int disk_angular = 24;     // midpoint nodes around each singular disk
    int disk_radial = 14;      // GL nodes across each singular disk
    int base_theta_panels = 8;
    double scale = 1.0;        // multiplies all node counts

    PlanarQuadOptions with_scale(double s) const {
        PlanarQuadOptions o = *this;
        o.scale *= s;
        return o;
    }
};

// Integrand callback: given z and zeta = z - z_center, write ncomp raw
// component values; the engine multiplies component c by kernels[c](rho)
// with rho = |zeta| and accumulates. Deterministic summation order.
using PlanarIntegrand = std::function<void(Complex z, Complex zeta, double* out)>;

std::vector<double> planar_integrate(const FieldModel& model, Complex z_center,
                                     const std::vector<RadialKernel>& kernels,
                                     const PlanarIntegrand& integrand,
                                     const PlanarQuadOptions& opts);

}  // namespace zlocus
