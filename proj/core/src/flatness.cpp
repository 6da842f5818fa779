#include "zlocus/flatness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "zlocus/planar_quad.hpp"

namespace zlocus {

EigenDecomposition jacobi_eigen(const Mat4& m) {
    Mat4 a = m;
    Mat4 v{};
    for (int i = 0; i < 4; ++i) v[i][i] = 1.0;

    const int max_sweeps = 50;
    const double threshold = 1e-14;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 4; ++p)
            for (int q = p + 1; q < 4; ++q) off += a[p][q] * a[p][q];
        double scale = 0.0;
        for (int p = 0; p < 4; ++p) scale += std::abs(a[p][p]);
        if (std::sqrt(off) <= threshold * std::max(scale, 1e-300)) break;
        for (int p = 0; p < 4; ++p) {
            for (int q = p + 1; q < 4; ++q) {
                if (a[p][q] == 0.0) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < 4; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 4; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 4; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::array<int, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a[i][i] < a[j][j]; });
    EigenDecomposition out;
    for (int i = 0; i < 4; ++i) {
        out.values[i] = a[order[i]][order[i]];
        for (int k = 0; k < 4; ++k) out.vectors[i][k] = v[k][order[i]];
    }
    return out;
}

MomentAnalysis moment_analysis(const WeightedPointCloud& cloud, const Vec4& x, double r) {
    if (r <= 0.0) throw std::invalid_argument("moment_analysis: r must be positive");
    auto idx = cloud.in_ball(x, r);
    MomentAnalysis an;
    an.ball_center = x;
    an.ball_radius = r;
    an.atom_count = idx.size();
    for (size_t i : idx) an.mass += cloud.atoms[i].weight;
    if (idx.empty() || an.mass <= 0.0)
        throw EmptySupportError("moment_analysis: no mass in the ball");

    Vec4 zbar{};
    for (size_t i : idx) zbar = zbar + cloud.atoms[i].weight * cloud.atoms[i].position;
    an.barycenter = (1.0 / an.mass) * zbar;

    for (size_t i : idx) {
        Vec4 d = cloud.atoms[i].position - an.barycenter;
        double w = cloud.atoms[i].weight;
        for (int p = 0; p < 4; ++p)
            for (int q = 0; q < 4; ++q) an.second_moment[p][q] += w * d[p] * d[q];
    }
    EigenDecomposition e = jacobi_eigen(an.second_moment);
    an.eigenvalues = e.values;
    an.eigenvectors = e.vectors;
    return an;
}

double beta2(const WeightedPointCloud& cloud, const Vec4& x, double r) {
    if (r <= 0.0) throw std::invalid_argument("beta2: r must be positive");
    MomentAnalysis an;
    try {
        an = moment_analysis(cloud, x, r);
    } catch (const EmptySupportError&) {
        return 0.0;
    }
    double r4 = r * r * r * r;
    return (an.eigenvalues[0] + an.eigenvalues[1]) / r4;
}

AffineSubspace best_plane(const MomentAnalysis& an) {
    AffineSubspace plane;
    plane.dim = 2;
    plane.origin = an.barycenter;
    plane.basis[0] = an.eigenvectors[2];
    plane.basis[1] = an.eigenvectors[3];
    // re-orthonormalize against accumulated rounding
    plane.basis[0] = normalized(plane.basis[0]);
    plane.basis[1] =
        normalized(plane.basis[1] - dot(plane.basis[1], plane.basis[0]) * plane.basis[0]);
    return plane;
}

double eigen_identity_residual(const WeightedPointCloud& cloud, const MomentAnalysis& an, int i) {
    if (i < 0 || i > 3) throw std::invalid_argument("eigen_identity_residual: i in 0..3");
    auto idx = cloud.in_ball(an.ball_center, an.ball_radius);
    Vec4 lhs{};
    for (size_t j : idx) {
        const auto& a = cloud.atoms[j];
        double c = a.weight * dot(a.position - an.barycenter, an.eigenvectors[i]);
        lhs = lhs + c * a.position;
    }
    Vec4 rhs = an.eigenvalues[i] * an.eigenvectors[i];
    return dist(lhs, rhs);
}

double plane_deviation(const WeightedPointCloud& cloud, const Vec4& x, double r,
                       const AffineSubspace& plane) {
    auto idx = cloud.in_ball(x, r);
    double acc = 0.0;
    for (size_t i : idx) {
        double d = plane.distance(cloud.atoms[i].position);
        acc += cloud.atoms[i].weight * d * d;
    }
    double r4 = r * r * r * r;
    return acc / r4;
}

BetaBoundReport beta_bound_check(const FieldModel& model, const ZeroSample& sample, const Vec4& x,
                                 double r, double c_trial, const FrequencyOptions& opts) {
    if (r <= 0.0) throw std::invalid_argument("beta_bound_check: r must be positive");
    BetaBoundReport rep;
    auto idx = sample.cloud.in_ball(x, r / 8.0);
    rep.support_size = idx.size();
    if (idx.empty()) return rep;

    WeightedPointCloud restricted;
    for (size_t i : idx) restricted.atoms.push_back(sample.cloud.atoms[i]);
    rep.lhs = beta2(restricted, x, r / 8.0);

    for (size_t i : idx) {
        const auto& a = sample.cloud.atoms[i];
        double w_pinch = smoothed_frequency(model, a.position, 4.0 * r, opts) -
                         smoothed_frequency(model, a.position, 0.25 * r, opts);
        rep.pinch_integral += a.weight * w_pinch;
        rep.mass += a.weight;
    }
    rep.rhs = (rep.pinch_integral + c_trial * r * r * rep.mass) / (r * r);
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

PoincareReport poincare_check(const FieldModel& model, const Vec4& x, double r,
                              const std::array<Vec4, 3>& frame, const FrequencyOptions& opts) {
    if (r <= 0.0) throw std::invalid_argument("poincare_check: r must be positive");
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            double d = dot(frame[i], frame[j]) - (i == j ? 1.0 : 0.0);
            if (std::abs(d) > 1e-9)
                throw std::invalid_argument("poincare_check: frame must be orthonormal");
        }
    PoincareReport rep;
    rep.precondition_ok = model.dist_to_zero(x) <= r / 8.0;
    // sum_j |grad_{v_j} u|^2 = |f'|^2 sum_j |(v_j)_z|^2
    double frame_weight = 0.0;
    for (const auto& v : frame) frame_weight += std::norm(model.z_component(v));
    Complex zx = model.z_of(x);
    auto vals = planar_integrate(
        model, zx, {RadialKernel::shell(0.75 * r, 1.25 * r)},
        [&](Complex z, Complex, double* out) { out[0] = 0.5 * model.grad_squared(z); }, opts.quad);
    rep.annulus_integral = frame_weight * vals[0];
    rep.h_phi = smoothed_quartet(model, x, r, opts).h_phi;
    rep.ratio = rep.annulus_integral * r / rep.h_phi;
    return rep;
}

namespace {
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

std::string analysis_json(const MomentAnalysis& an) {
    std::ostringstream out;
    out << "{\"center\": [" << fmt(an.ball_center[0]) << ", " << fmt(an.ball_center[1]) << ", "
        << fmt(an.ball_center[2]) << ", " << fmt(an.ball_center[3]) << "], "
        << "\"r\": " << fmt(an.ball_radius) << ", \"mass\": " << fmt(an.mass)
        << ", \"barycenter\": [" << fmt(an.barycenter[0]) << ", " << fmt(an.barycenter[1]) << ", "
        << fmt(an.barycenter[2]) << ", " << fmt(an.barycenter[3]) << "], \"eigenvalues\": [";
    for (int i = 0; i < 4; ++i) out << fmt(an.eigenvalues[i]) << (i < 3 ? ", " : "]");
    AffineSubspace plane = best_plane(an);
    out << ", \"plane_basis\": [[";
    for (int i = 0; i < 4; ++i) out << fmt(plane.basis[0][i]) << (i < 3 ? ", " : "], [");
    for (int i = 0; i < 4; ++i) out << fmt(plane.basis[1][i]) << (i < 3 ? ", " : "]]");
    out << ", \"beta2\": "
        << fmt((an.eigenvalues[0] + an.eigenvalues[1]) /
               (an.ball_radius * an.ball_radius * an.ball_radius * an.ball_radius))
        << "}";
    return out.str();
}

}  // namespace zlocus
