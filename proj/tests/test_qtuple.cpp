#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "zlocus/qtuple.hpp"

using namespace zlocus;

namespace {

// independent oracle: recursive assignment enumeration (no std::next_permutation)
double brute_force_dist(const QTuple& t, const QTuple& s) {
    int q = t.q();
    std::vector<int> perm(q, -1);
    std::vector<bool> used(q, false);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(int, double)> rec = [&](int i, double acc) {
        if (acc >= best) return;
        if (i == q) {
            best = acc;
            return;
        }
        for (int j = 0; j < q; ++j) {
            if (used[j]) continue;
            double c = 0.0;
            for (int d = 0; d < t.dim(); ++d) {
                double diff = t.point(i)[d] - s.point(j)[d];
                c += diff * diff;
            }
            used[j] = true;
            rec(i + 1, acc + c);
            used[j] = false;
        }
    };
    rec(0, 0.0);
    return std::sqrt(best);
}

QTuple random_tuple(std::mt19937_64& rng, int q, int dim) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    QTuple t(q, dim);
    for (int i = 0; i < q; ++i)
        for (int d = 0; d < dim; ++d) t.point(i)[d] = u(rng);
    return t;
}

// random rotation of R^dim via Gram-Schmidt on a random matrix
std::vector<std::vector<double>> random_rotation(std::mt19937_64& rng, int dim) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> m(dim, std::vector<double>(dim));
    for (int i = 0; i < dim; ++i) {
        for (int d = 0; d < dim; ++d) m[i][d] = u(rng);
        for (int j = 0; j < i; ++j) {
            double c = 0.0;
            for (int d = 0; d < dim; ++d) c += m[i][d] * m[j][d];
            for (int d = 0; d < dim; ++d) m[i][d] -= c * m[j][d];
        }
        double n = 0.0;
        for (int d = 0; d < dim; ++d) n += m[i][d] * m[i][d];
        n = std::sqrt(n);
        for (int d = 0; d < dim; ++d) m[i][d] /= n;
    }
    return m;
}

QTuple apply_rotation(const QTuple& t, const std::vector<std::vector<double>>& m) {
    QTuple out(t.q(), t.dim());
    for (int i = 0; i < t.q(); ++i)
        for (int r = 0; r < t.dim(); ++r) {
            double acc = 0.0;
            for (int c = 0; c < t.dim(); ++c) acc += m[r][c] * t.point(i)[c];
            out.point(i)[r] = acc;
        }
    return out;
}

}  // namespace

TEST_CASE("dist on pinned examples") {
    QTuple t{{1, 0}, {-1, 0}};
    CHECK(dist(t, t) == doctest::Approx(0.0).epsilon(1e-15));

    QTuple s{{0, 1}, {0, -1}};
    CHECK(dist(t, s) == doctest::Approx(2.0).epsilon(1e-14));

    QTuple a{{3, 4}, {0, 0}};
    QTuple z{{0, 0}, {0, 0}};
    CHECK(dist(a, z) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("norm on pinned examples") {
    CHECK(norm(QTuple{{0, 0}, {0, 0}}) == 0.0);
    CHECK(norm(QTuple{{3, 4}, {0, 0}}) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(norm(QTuple{{1, 0}, {-1, 0}}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("order of points does not matter") {
    QTuple t{{1, 2}, {-3, 4}, {0.5, -0.25}};
    QTuple s{{0.5, -0.25}, {1, 2}, {-3, 4}};
    CHECK(dist(t, s) <= 1e-12);
}

TEST_CASE("mismatched tuples are rejected") {
    QTuple a(2, 2), b(3, 2), c(2, 3);
    CHECK_THROWS_AS(dist(a, b), std::invalid_argument);
    CHECK_THROWS_AS(dist(a, c), std::invalid_argument);
}

TEST_CASE("metric properties on random tuples") {
    std::mt19937_64 rng(42);
    for (int it = 0; it < 300; ++it) {
        int q = 1 + static_cast<int>(rng() % 4);
        int dim = 1 + static_cast<int>(rng() % 4);
        QTuple a = random_tuple(rng, q, dim);
        QTuple b = random_tuple(rng, q, dim);
        QTuple c = random_tuple(rng, q, dim);
        double dab = dist(a, b);
        CHECK(dab == doctest::Approx(dist(b, a)).epsilon(1e-12));
        CHECK(dist(a, c) <= dab + dist(b, c) + 1e-12);
    }
}

TEST_CASE("permutation minimum matches brute-force enumeration up to Q=4") {
    std::mt19937_64 rng(7);
    for (int it = 0; it < 200; ++it) {
        int q = 2 + static_cast<int>(rng() % 3);
        int dim = 1 + static_cast<int>(rng() % 3);
        QTuple a = random_tuple(rng, q, dim);
        QTuple b = random_tuple(rng, q, dim);
        CHECK(dist(a, b) == doctest::Approx(brute_force_dist(a, b)).epsilon(1e-13));
    }
}

TEST_CASE("dist is invariant under simultaneous orthogonal maps") {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 100; ++it) {
        int q = 2 + static_cast<int>(rng() % 3);
        int dim = 2 + static_cast<int>(rng() % 3);
        QTuple a = random_tuple(rng, q, dim);
        QTuple b = random_tuple(rng, q, dim);
        auto rot = random_rotation(rng, dim);
        double before = dist(a, b);
        double after = dist(apply_rotation(a, rot), apply_rotation(b, rot));
        CHECK(after == doctest::Approx(before).epsilon(1e-11));
    }
}

TEST_CASE("Q bounds") {
    CHECK_THROWS_AS(QTuple(0, 2), std::invalid_argument);
    CHECK_THROWS_AS(QTuple(7, 2), std::invalid_argument);
    CHECK_NOTHROW(QTuple(6, 2));
}
