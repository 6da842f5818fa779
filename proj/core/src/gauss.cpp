#include "zlocus/gauss.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace zlocus {

namespace {

GaussRule compute_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    // Newton iteration on Legendre polynomials, Chebyshev initial guess.
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[n - 1 - i] = x;
        rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
    return it->second;
}

GaussRule gauss_legendre(int n, double a, double b) {
    const GaussRule& base = gauss_legendre(n);
    GaussRule out;
    out.nodes.resize(n);
    out.weights.resize(n);
    double mid = 0.5 * (a + b);
    double half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        out.nodes[i] = mid + half * base.nodes[i];
        out.weights[i] = half * base.weights[i];
    }
    return out;
}

}  // namespace zlocus
