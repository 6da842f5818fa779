#include "zlocus/field_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace zlocus {

namespace {

// Complete {plane.basis[0], plane.basis[1]} to an orthonormal frame of R^4.
// Deterministic: repeatedly picks the standard basis vector with the largest
// residual against the span built so far (lowest index wins ties).
std::array<Vec4, 4> complete_frame(const AffineSubspace& plane) {
    std::array<Vec4, 4> q;
    q[2] = normalized(plane.basis[0]);
    Vec4 b2 = plane.basis[1] - dot(plane.basis[1], q[2]) * q[2];
    if (norm(b2) < 1e-12) throw std::invalid_argument("plane basis is degenerate");
    q[3] = normalized(b2);

    std::vector<Vec4> chosen;
    for (int slot = 0; slot < 2; ++slot) {
        double best = -1.0;
        Vec4 bestr{};
        for (int i = 0; i < 4; ++i) {
            Vec4 e{};
            e[i] = 1.0;
            Vec4 r = e - dot(e, q[2]) * q[2] - dot(e, q[3]) * q[3];
            for (const auto& c : chosen) r = r - dot(r, c) * c;
            double n = norm(r);
            if (n > best + 1e-14) {
                best = n;
                bestr = r;
            }
        }
        if (best < 1e-9) throw std::invalid_argument("cannot complete frame from plane");
        chosen.push_back(normalized(bestr));
    }
    q[0] = chosen[0];
    q[1] = chosen[1];
    return q;
}

}  // namespace

void FieldModel::set_frame_from_plane(const AffineSubspace& plane) {
    if (plane.dim != 2) throw std::invalid_argument("zero plane must be 2-dimensional");
    origin_ = plane.origin;
    q_ = complete_frame(plane);
}

FieldModel FieldModel::homogeneous_planar(int k) {
    if (k < 1 || k % 2 == 0) throw std::invalid_argument("homogeneous-planar: k must be odd and >= 1");
    FieldModel m;
    m.kind_ = ModelKind::HomogeneousPlanar;
    m.k_ = k;
    m.holder_ = static_cast<double>(k);
    m.roots_ = {Complex(0.0, 0.0)};
    return m;
}

FieldModel FieldModel::homogeneous_planar(int k, const AffineSubspace& zero_plane) {
    FieldModel m = homogeneous_planar(k);
    m.set_frame_from_plane(zero_plane);
    return m;
}

FieldModel FieldModel::polynomial_branch(const std::vector<Complex>& roots) {
    if (roots.empty()) throw std::invalid_argument("polynomial-branch: at least one root required");
    FieldModel m;
    m.kind_ = ModelKind::PolynomialBranch;
    m.roots_ = roots;
    // Holder exponent = smallest sheet multiplicity.
    int min_mult = std::numeric_limits<int>::max();
    for (const auto& r : roots) {
        int mult = 0;
        for (const auto& s : roots)
            if (std::abs(s - r) < 1e-14) ++mult;
        min_mult = std::min(min_mult, mult);
    }
    m.holder_ = static_cast<double>(min_mult);
    return m;
}

FieldModel FieldModel::polynomial_branch(const std::vector<Complex>& roots,
                                         const AffineSubspace& plane) {
    FieldModel m = polynomial_branch(roots);
    m.set_frame_from_plane(plane);
    return m;
}

FieldModel FieldModel::constant(double value) {
    FieldModel m;
    m.kind_ = ModelKind::Constant;
    m.value_ = value;
    m.holder_ = 0.0;
    return m;
}

FieldModel FieldModel::linear() {
    FieldModel m;
    m.kind_ = ModelKind::Linear;
    m.holder_ = 2.0;
    return m;
}

Complex FieldModel::z_of(const Vec4& x) const {
    Vec4 d = x - origin_;
    return {dot(d, q_[0]), dot(d, q_[1])};
}

Complex FieldModel::w_of(const Vec4& x) const {
    Vec4 d = x - origin_;
    return {dot(d, q_[2]), dot(d, q_[3])};
}

Vec4 FieldModel::point_from_zw(Complex z, Complex w) const {
    return origin_ + z.real() * q_[0] + z.imag() * q_[1] + w.real() * q_[2] + w.imag() * q_[3];
}

Complex FieldModel::z_component(const Vec4& v) const {
    return {dot(v, q_[0]), dot(v, q_[1])};
}

namespace {
Complex poly_eval(const std::vector<Complex>& roots, Complex z) {
    Complex p(1.0, 0.0);
    for (const auto& r : roots) p *= (z - r);
    return p;
}
Complex poly_deriv(const std::vector<Complex>& roots, Complex z) {
    Complex d(0.0, 0.0);
    for (size_t i = 0; i < roots.size(); ++i) {
        Complex term(1.0, 0.0);
        for (size_t j = 0; j < roots.size(); ++j)
            if (j != i) term *= (z - roots[j]);
        d += term;
    }
    return d;
}
}  // namespace

Complex FieldModel::branch_value(Complex z) const {
    switch (kind_) {
        case ModelKind::HomogeneousPlanar: {
            Complex acc = std::sqrt(z);
            Complex zp(1.0, 0.0);
            for (int i = 0; i < (k_ - 1) / 2; ++i) zp *= z;
            return acc * zp;
        }
        case ModelKind::PolynomialBranch:
            return std::sqrt(poly_eval(roots_, z));
        case ModelKind::Constant:
            return {value_, 0.0};
        case ModelKind::Linear:
            return {z.real(), 0.0};
    }
    return {};
}

Complex FieldModel::branch_derivative(Complex z) const {
    switch (kind_) {
        case ModelKind::HomogeneousPlanar:
            return 0.5 * static_cast<double>(k_) * branch_value(z) / z;
        case ModelKind::PolynomialBranch:
            return poly_deriv(roots_, z) / (2.0 * std::sqrt(poly_eval(roots_, z)));
        case ModelKind::Constant:
            return {0.0, 0.0};
        case ModelKind::Linear:
            return {1.0, 0.0};  // d(Re z)/dz convention unused; kept for completeness
    }
    return {};
}

double FieldModel::u_squared(Complex z) const {
    switch (kind_) {
        case ModelKind::HomogeneousPlanar: {
            double az = std::abs(z);
            return std::pow(az, static_cast<double>(k_));
        }
        case ModelKind::PolynomialBranch:
            return std::abs(poly_eval(roots_, z));
        case ModelKind::Constant:
            return value_ * value_;
        case ModelKind::Linear:
            return z.real() * z.real();
    }
    return 0.0;
}

double FieldModel::grad_squared(Complex z) const {
    switch (kind_) {
        case ModelKind::HomogeneousPlanar: {
            double az = std::abs(z);
            return 0.5 * k_ * k_ * std::pow(az, static_cast<double>(k_ - 2));
        }
        case ModelKind::PolynomialBranch: {
            double p = std::abs(poly_eval(roots_, z));
            Complex dp = poly_deriv(roots_, z);
            return std::norm(dp) / (2.0 * p);
        }
        case ModelKind::Constant:
            return 0.0;
        case ModelKind::Linear:
            return 1.0;
    }
    return 0.0;
}

QTuple FieldModel::evaluate(const Vec4& x) const {
    Complex f = branch_value(z_of(x));
    QTuple t(2, 2);
    t.point(0)[0] = f.real();
    t.point(0)[1] = f.imag();
    t.point(1)[0] = -f.real();
    t.point(1)[1] = -f.imag();
    return t;
}

QTuple FieldModel::gradient(const Vec4& x, const Vec4& v) const {
    if (dist_to_zero(x) <= kSingularGuard)
        throw std::domain_error("gradient: point is on or too close to the zero set");
    Complex vz = z_component(v);
    Complex g;
    if (kind_ == ModelKind::Linear) {
        g = {vz.real(), 0.0};
    } else {
        g = branch_derivative(z_of(x)) * vz;
    }
    QTuple t(2, 2);
    t.point(0)[0] = g.real();
    t.point(0)[1] = g.imag();
    t.point(1)[0] = -g.real();
    t.point(1)[1] = -g.imag();
    return t;
}

FieldModel::EnergyDensity FieldModel::energy_density(const Vec4& x) const {
    if (dist_to_zero(x) <= kSingularGuard)
        throw std::domain_error("energy_density: point is on or too close to the zero set");
    Complex z = z_of(x);
    return {u_squared(z), grad_squared(z)};
}

double FieldModel::dist_to_zero(const Vec4& x) const {
    switch (kind_) {
        case ModelKind::HomogeneousPlanar:
            return std::abs(z_of(x));
        case ModelKind::PolynomialBranch: {
            Complex z = z_of(x);
            double d = std::numeric_limits<double>::infinity();
            for (const auto& r : roots_) d = std::min(d, std::abs(z - r));
            return d;
        }
        case ModelKind::Constant:
            return value_ == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        case ModelKind::Linear:
            return std::abs(z_of(x).real());
    }
    return 0.0;
}

std::vector<AffineSubspace> FieldModel::zero_planes() const {
    std::vector<AffineSubspace> planes;
    if (kind_ != ModelKind::HomogeneousPlanar && kind_ != ModelKind::PolynomialBranch)
        return planes;
    std::vector<Complex> distinct;
    for (const auto& r : roots_) {
        bool seen = false;
        for (const auto& d : distinct)
            if (std::abs(d - r) < 1e-14) seen = true;
        if (!seen) distinct.push_back(r);
    }
    for (const auto& r : distinct) {
        AffineSubspace p;
        p.dim = 2;
        p.origin = point_from_zw(r, {0.0, 0.0});
        p.basis[0] = q_[2];
        p.basis[1] = q_[3];
        planes.push_back(p);
    }
    return planes;
}

namespace {

struct LatticeKey {
    long long a, b, c, d;
    bool operator==(const LatticeKey& o) const { return a == o.a && b == o.b && c == o.c && d == o.d; }
};
struct LatticeHash {
    size_t operator()(const LatticeKey& k) const {
        size_t h = 1469598103934665603ull;
        for (long long v : {k.a, k.b, k.c, k.d}) {
            h ^= static_cast<size_t>(v);
            h *= 1099511628211ull;
        }
        return h;
    }
};

double abs_u(const FieldModel& m, const Vec4& x) { return std::sqrt(m.u_squared(m.z_of(x))); }

}  // namespace

ZeroSample FieldModel::sample_zero_set(const Box4& box, double spacing, double tol,
                                       double weight_override) const {
    if (spacing <= 0.0) throw std::invalid_argument("sample_zero_set: spacing must be positive");
    ZeroSample sample;
    sample.tolerance = tol;
    double w = weight_override > 0.0 ? weight_override : spacing * spacing;

    auto planes = zero_planes();
    if (!planes.empty()) {
        // Exact projection path: walk a grid on each declared plane, clip to box.
        Vec4 c = box.center();
        for (const auto& plane : planes) {
            double reach = box.half_diagonal() + dist(plane.origin, c);
            int n = static_cast<int>(std::ceil(reach / spacing));
            for (int i = -n; i <= n; ++i) {
                for (int j = -n; j <= n; ++j) {
                    Vec4 p = plane.origin + (i * spacing) * plane.basis[0] +
                             (j * spacing) * plane.basis[1];
                    if (!box.contains(p)) continue;
                    double res = abs_u(*this, p);
                    sample.tolerance = std::max(sample.tolerance, res);
                    sample.cloud.atoms.push_back({p, w});
                }
            }
        }
        return sample;
    }

    // Generic path: |u| minimization along grid edges, lattice dedup.
    std::unordered_set<LatticeKey, LatticeHash> seen;
    std::array<int, 4> counts;
    for (int d = 0; d < 4; ++d)
        counts[d] = static_cast<int>(std::floor((box.bounds[d][1] - box.bounds[d][0]) / spacing)) + 1;
    auto node = [&](int i0, int i1, int i2, int i3) -> Vec4 {
        return {box.bounds[0][0] + i0 * spacing, box.bounds[1][0] + i1 * spacing,
                box.bounds[2][0] + i2 * spacing, box.bounds[3][0] + i3 * spacing};
    };
    auto try_accept = [&](const Vec4& p) {
        if (!box.contains(p)) return;
        double res = abs_u(*this, p);
        if (res > tol) return;
        LatticeKey key{llround(p[0] / (0.5 * spacing)), llround(p[1] / (0.5 * spacing)),
                       llround(p[2] / (0.5 * spacing)), llround(p[3] / (0.5 * spacing))};
        if (!seen.insert(key).second) return;
        sample.cloud.atoms.push_back({p, w});
    };
    for (int i0 = 0; i0 < counts[0]; ++i0)
        for (int i1 = 0; i1 < counts[1]; ++i1)
            for (int i2 = 0; i2 < counts[2]; ++i2)
                for (int i3 = 0; i3 < counts[3]; ++i3) {
                    Vec4 a = node(i0, i1, i2, i3);
                    for (int d = 0; d < 4; ++d) {
                        Vec4 b = a;
                        b[d] += spacing;
                        if (!box.contains(b)) continue;
                        // golden-section minimization of |u| along the edge
                        double lo = 0.0, hi = 1.0;
                        const double gr = 0.381966011250105;
                        double m1 = lo + gr * (hi - lo), m2 = hi - gr * (hi - lo);
                        auto at = [&](double t) {
                            Vec4 p = a + t * (b - a);
                            return abs_u(*this, p);
                        };
                        double f1 = at(m1), f2 = at(m2);
                        for (int it = 0; it < 60 && (hi - lo) * spacing > 1e-12; ++it) {
                            if (f1 < f2) {
                                hi = m2;
                                m2 = m1;
                                f2 = f1;
                                m1 = lo + gr * (hi - lo);
                                f1 = at(m1);
                            } else {
                                lo = m1;
                                m1 = m2;
                                f1 = f2;
                                m2 = hi - gr * (hi - lo);
                                f2 = at(m2);
                            }
                        }
                        double t = 0.5 * (lo + hi);
                        try_accept(a + t * (b - a));
                    }
                }
    return sample;
}

double FieldModel::check_harmonic(const Vec4& x, double h) const {
    if (h <= 0.0) throw std::invalid_argument("check_harmonic: h must be positive");
    if (dist_to_zero(x) <= 10.0 * h)
        throw std::domain_error("check_harmonic: point too close to the zero set");
    Complex f0 = branch_value(z_of(x));
    double lap_re = 0.0, lap_im = 0.0;
    for (int d = 0; d < 4; ++d) {
        Vec4 e{};
        e[d] = h;
        for (double sgn : {1.0, -1.0}) {
            Complex f = branch_value(z_of(x + sgn * e));
            // align the two-valued branch with the center value
            if (std::norm(f - f0) > std::norm(f + f0)) f = -f;
            lap_re += f.real() - f0.real();
            lap_im += f.imag() - f0.imag();
        }
    }
    double inv_h2 = 1.0 / (h * h);
    return std::hypot(lap_re * inv_h2, lap_im * inv_h2);
}

std::string FieldModel::kind_name() const {
    switch (kind_) {
        case ModelKind::HomogeneousPlanar: return "homogeneous-planar";
        case ModelKind::PolynomialBranch: return "polynomial-branch";
        case ModelKind::Constant: return "constant";
        case ModelKind::Linear: return "linear";
    }
    return "?";
}

}  // namespace zlocus
