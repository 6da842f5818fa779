#include "zlocus/covering.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "zlocus/flatness.hpp"

namespace zlocus {

// ---------- oracle ----------

FrequencyTamingOracle::FrequencyTamingOracle(const FieldModel& model, double c_coeff,
                                             double lambda, FrequencyOptions opts)
    : model_(&model), c_coeff_(c_coeff), lambda_(lambda), opts_(opts) {}

namespace {
uint64_t key_bits(const Vec4& x, double r) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](double v) {
        uint64_t b;
        std::memcpy(&b, &v, sizeof(b));
        h ^= b;
        h *= 1099511628211ull;
    };
    for (double v : x) mix(v);
    mix(r);
    return h;
}
}  // namespace

double FrequencyTamingOracle::eval(const Vec4& x, double r) const {
    uint64_t key = key_bits(x, r);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    double v = smoothed_frequency(*model_, x, r, opts_) + c_coeff_ * r * r;
    std::lock_guard<std::mutex> lock(mutex_);
    cache_.emplace(key, v);
    return v;
}

double estimate_lambda(const TamingOracle& raw, const std::vector<Vec4>& carrier, double r_max,
                       size_t max_samples) {
    if (carrier.empty()) return raw.lambda();
    size_t stride = std::max<size_t>(1, carrier.size() / max_samples);
    double m = 0.0;
    for (size_t i = 0; i < carrier.size(); i += stride)
        m = std::max(m, raw.eval(carrier[i], r_max));
    return m * (1.0 + 1e-9);
}

// ---------- affine span utilities ----------

double dist_to_affine_span(const Vec4& p, const std::vector<Vec4>& base) {
    if (base.empty()) throw std::invalid_argument("dist_to_affine_span: empty base");
    std::vector<Vec4> ortho;
    for (size_t i = 1; i < base.size(); ++i) {
        Vec4 v = base[i] - base[0];
        for (const auto& u : ortho) v = v - dot(v, u) * u;
        double n = norm(v);
        if (n > 1e-13) ortho.push_back((1.0 / n) * v);
    }
    Vec4 d = p - base[0];
    for (const auto& u : ortho) d = d - dot(d, u) * u;
    return norm(d);
}

double dist_to_affine_span_ls(const Vec4& p, const std::vector<Vec4>& base) {
    if (base.empty()) throw std::invalid_argument("dist_to_affine_span_ls: empty base");
    // minimize |p - base0 - B c| via normal equations with ridge-free pivoted
    // Cholesky; rank deficiency handled by skipping tiny pivots.
    size_t m = base.size() - 1;
    if (m == 0) return dist(p, base[0]);
    std::vector<Vec4> cols(m);
    for (size_t i = 0; i < m; ++i) cols[i] = base[i + 1] - base[0];
    std::vector<std::vector<double>> g(m, std::vector<double>(m));
    std::vector<double> rhs(m);
    Vec4 d = p - base[0];
    for (size_t i = 0; i < m; ++i) {
        rhs[i] = dot(cols[i], d);
        for (size_t j = 0; j < m; ++j) g[i][j] = dot(cols[i], cols[j]);
    }
    // Gaussian elimination with partial pivoting; skip negligible pivots.
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    double scale = 0.0;
    for (size_t i = 0; i < m; ++i) scale = std::max(scale, g[i][i]);
    std::vector<double> c(m, 0.0);
    std::vector<bool> used(m, false);
    for (size_t step = 0; step < m; ++step) {
        size_t piv = m;
        double best = 1e-12 * std::max(scale, 1e-300);
        for (size_t i = 0; i < m; ++i)
            if (!used[i] && std::abs(g[i][i]) > best) {
                best = std::abs(g[i][i]);
                piv = i;
            }
        if (piv == m) break;
        used[piv] = true;
        for (size_t i = 0; i < m; ++i) {
            if (i == piv || std::abs(g[i][piv]) == 0.0) continue;
            double f = g[i][piv] / g[piv][piv];
            for (size_t j = 0; j < m; ++j) g[i][j] -= f * g[piv][j];
            rhs[i] -= f * rhs[piv];
        }
    }
    for (size_t i = 0; i < m; ++i)
        if (used[i]) c[i] = rhs[i] / g[i][i];
    Vec4 res = d;
    for (size_t i = 0; i < m; ++i) res = res - c[i] * cols[i];
    return norm(res);
}

namespace {

double simplex_volume(const std::vector<Vec4>& pts, const std::vector<int>& idx) {
    // (|idx|-1)-simplex volume via Gram determinant
    size_t k = idx.size();
    if (k < 2) return 0.0;
    std::vector<Vec4> e(k - 1);
    for (size_t i = 1; i < k; ++i) e[i - 1] = pts[idx[i]] - pts[idx[0]];
    // Gram matrix
    double g[3][3] = {};
    size_t m = k - 1;
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < m; ++j) g[i][j] = dot(e[i], e[j]);
    double det = 0.0;
    if (m == 1)
        det = g[0][0];
    else if (m == 2)
        det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    else
        det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
              g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
              g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    if (det <= 0.0) return 0.0;
    double vol = std::sqrt(det);
    for (size_t i = 2; i <= m; ++i) vol /= static_cast<double>(i);
    return vol;
}

bool certificate_ok(const std::vector<Vec4>& pts, const std::vector<int>& idx, double beta) {
    for (size_t j = 0; j < idx.size(); ++j) {
        std::vector<Vec4> rest;
        for (size_t i = 0; i < idx.size(); ++i)
            if (i != j) rest.push_back(pts[idx[i]]);
        if (dist_to_affine_span(pts[idx[j]], rest) < beta) return false;
    }
    return true;
}

// deterministic spread subsample: lexicographic sort, even stride
std::vector<int> lex_subsample(const std::vector<Vec4>& pts, const std::vector<int>& cand,
                               size_t cap) {
    std::vector<int> order = cand;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (pts[a] != pts[b]) return pts[a] < pts[b];
        return a < b;
    });
    if (order.size() <= cap) return order;
    std::vector<int> out;
    out.reserve(cap);
    for (size_t i = 0; i < cap; ++i) out.push_back(order[i * order.size() / cap]);
    return out;
}

// greedy max-volume (k)-subset with 2-swap improvement, indices into pts
std::vector<int> greedy_max_volume(const std::vector<Vec4>& pts, const std::vector<int>& cand,
                                   int k) {
    if (cand.empty()) return {};
    std::vector<int> cur;
    // seed: lexicographically smallest
    int seed = *std::min_element(cand.begin(), cand.end(), [&](int a, int b) {
        if (pts[a] != pts[b]) return pts[a] < pts[b];
        return a < b;
    });
    cur.push_back(seed);
    while (static_cast<int>(cur.size()) < k) {
        int best = -1;
        double best_v = -1.0;
        for (int c : cand) {
            if (std::find(cur.begin(), cur.end(), c) != cur.end()) continue;
            std::vector<int> trial = cur;
            trial.push_back(c);
            double v = (trial.size() == 1) ? 0.0 : simplex_volume(pts, trial);
            if (trial.size() == 2) v = dist(pts[trial[0]], pts[trial[1]]);
            if (v > best_v) {
                best_v = v;
                best = c;
            }
        }
        if (best < 0) break;
        cur.push_back(best);
    }
    if (static_cast<int>(cur.size()) < k) return cur;
    // 2-swap local improvement
    bool improved = true;
    int rounds = 0;
    while (improved && rounds++ < 8) {
        improved = false;
        double cur_v = simplex_volume(pts, cur);
        for (size_t slot = 0; slot < cur.size(); ++slot) {
            for (int c : cand) {
                if (std::find(cur.begin(), cur.end(), c) != cur.end()) continue;
                std::vector<int> trial = cur;
                trial[slot] = c;
                double v = simplex_volume(pts, trial);
                if (v > cur_v * (1.0 + 1e-12)) {
                    cur = trial;
                    cur_v = v;
                    improved = true;
                }
            }
        }
    }
    return cur;
}

}  // namespace

bool beta_span(const std::vector<Vec4>& pts, int k, double beta, std::vector<int>* cert) {
    if (k < 1 || k > 3) throw std::invalid_argument("beta_span: k must be in {1,2,3}");
    if (beta <= 0.0) throw std::invalid_argument("beta_span: beta must be positive");
    const int need = k + 1;
    if (static_cast<int>(pts.size()) < need) return false;

    std::vector<int> all(pts.size());
    std::iota(all.begin(), all.end(), 0);

    auto accept = [&](const std::vector<int>& idx) {
        if (cert) *cert = idx;
        return true;
    };

    if (pts.size() <= 40) {
        // exhaustive over (k+1)-subsets
        std::vector<int> idx(need);
        std::function<bool(int, int)> rec = [&](int start, int depth) -> bool {
            if (depth == need) return certificate_ok(pts, idx, beta);
            for (int i = start; i < static_cast<int>(pts.size()); ++i) {
                idx[depth] = i;
                if (rec(i + 1, depth + 1)) return true;
            }
            return false;
        };
        if (rec(0, 0)) return accept(idx);
        return false;
    }

    // large set: greedy max-volume candidate + subsample escalation
    std::vector<int> g = greedy_max_volume(pts, all, need);
    if (static_cast<int>(g.size()) == need && certificate_ok(pts, g, beta)) return accept(g);
    std::vector<int> sub = lex_subsample(pts, all, 48);
    std::vector<int> idx(need);
    std::function<bool(int, int)> rec = [&](int start, int depth) -> bool {
        if (depth == need) return certificate_ok(pts, idx, beta);
        for (int i = start; i < static_cast<int>(sub.size()); ++i) {
            idx[depth] = sub[i];
            if (rec(i + 1, depth + 1)) return true;
        }
        return false;
    };
    if (rec(0, 0)) return accept(idx);
    return false;
}

std::optional<SpineResult> find_spine(const std::vector<Vec4>& pts, int k, double beta) {
    if (k < 1 || k > 3) throw std::invalid_argument("find_spine: k must be in {1,2,3}");
    if (beta <= 0.0) throw std::invalid_argument("find_spine: beta must be positive");
    if (beta_span(pts, k, beta)) return std::nullopt;
    SpineResult res;
    if (pts.empty()) {
        res.spine.dim = std::max(0, k - 1);
        return res;
    }

    std::vector<int> all(pts.size());
    std::iota(all.begin(), all.end(), 0);

    std::vector<int> best;
    if (pts.size() <= 40) {
        // exhaustive max-volume k-subset
        double best_v = -1.0;
        std::vector<int> idx(k);
        std::function<void(int, int)> rec = [&](int start, int depth) {
            if (depth == k) {
                double v = (k == 1) ? 0.0 : simplex_volume(pts, idx);
                if (v > best_v) {
                    best_v = v;
                    best = idx;
                }
                return;
            }
            for (int i = start; i < static_cast<int>(pts.size()); ++i) {
                idx[depth] = i;
                rec(i + 1, depth + 1);
            }
        };
        if (k == 1) {
            best = {0};
        } else {
            rec(0, 0);
        }
    } else {
        best = greedy_max_volume(pts, all, k);
        res.half_max_certified = false;  // approximate volume maximizer
    }

    AffineSubspace spine;
    spine.dim = k - 1;
    spine.origin = pts[best.empty() ? 0 : best[0]];
    std::vector<Vec4> ortho;
    for (size_t i = 1; i < best.size(); ++i) {
        Vec4 v = pts[best[i]] - spine.origin;
        for (const auto& u : ortho) v = v - dot(v, u) * u;
        double n = norm(v);
        if (n > 1e-13) ortho.push_back((1.0 / n) * v);
    }
    for (size_t i = 0; i < ortho.size() && i < 3; ++i) spine.basis[i] = ortho[i];
    spine.dim = static_cast<int>(std::min<size_t>(ortho.size(), 3));
    // a degenerate max simplex still defines a lower-dimensional spine; that
    // only strengthens containment
    res.spine = spine;
    for (const auto& p : pts) res.max_distance = std::max(res.max_distance, spine.distance(p));
    return res;
}

// ---------- covering parameters ----------

void CoveringParams::validate() const {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("covering: beta must lie in (0, 1)");
    if (!(beta_bar > 0.0 && beta_bar < 1.0))
        throw std::invalid_argument("covering: beta_bar must lie in (0, 1)");
    if (delta == 0.0) throw std::invalid_argument("covering: delta must be positive");
    if (tau == 0.0) throw std::invalid_argument("covering: tau must be positive");
    if (max_generations < 1) throw std::invalid_argument("covering: max_generations >= 1");
}

double CoveringParams::delta_or_default() const { return delta > 0.0 ? delta : 0.05 * lambda; }
double CoveringParams::tau_or_default() const { return tau > 0.0 ? tau : 0.02 * lambda; }

// ---------- spatial hash over carrier points ----------

namespace {

struct PointGrid {
    double cell;
    std::unordered_map<uint64_t, std::vector<int>> cells;
    const std::vector<Vec4>* pts;

    PointGrid(const std::vector<Vec4>& p, double cell_size) : cell(cell_size), pts(&p) {}

    static uint64_t key(long long a, long long b, long long c, long long d) {
        uint64_t h = 1469598103934665603ull;
        for (long long v : {a, b, c, d}) {
            h ^= static_cast<uint64_t>(v) + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        return h;
    }
    std::array<long long, 4> coords(const Vec4& x) const {
        return {static_cast<long long>(std::floor(x[0] / cell)),
                static_cast<long long>(std::floor(x[1] / cell)),
                static_cast<long long>(std::floor(x[2] / cell)),
                static_cast<long long>(std::floor(x[3] / cell))};
    }
    void insert(int i) {
        auto c = coords((*pts)[i]);
        cells[key(c[0], c[1], c[2], c[3])].push_back(i);
    }
    template <typename F>
    void for_each_near(const Vec4& x, double radius, F&& f) const {
        auto lo = coords({x[0] - radius, x[1] - radius, x[2] - radius, x[3] - radius});
        auto hi = coords({x[0] + radius, x[1] + radius, x[2] + radius, x[3] + radius});
        for (long long a = lo[0]; a <= hi[0]; ++a)
            for (long long b = lo[1]; b <= hi[1]; ++b)
                for (long long c = lo[2]; c <= hi[2]; ++c)
                    for (long long d = lo[3]; d <= hi[3]; ++d) {
                        auto it = cells.find(key(a, b, c, d));
                        if (it == cells.end()) continue;
                        for (int i : it->second) f(i);
                    }
    }
};

std::vector<int> points_in_ball(const PointGrid& grid, const std::vector<Vec4>& pts,
                                const Vec4& c, double r) {
    std::vector<int> out;
    grid.for_each_near(c, r, [&](int i) {
        if (dist(pts[i], c) <= r) out.push_back(i);
    });
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<int> pinched_set(const TamingOracle& oracle, const std::vector<Vec4>& pts,
                             const std::vector<int>& candidate, double r, double delta,
                             double beta, double lambda) {
    if (delta <= 0.0) throw std::invalid_argument("pinched_set: delta must be positive");
    std::vector<int> out;
    for (int i : candidate)
        if (oracle.eval(pts[i], 0.5 * beta * r) >= lambda - delta) out.push_back(i);
    return out;
}

namespace {

// same filter with the oracle evaluations fanned out over a thread pool;
// output order stays deterministic
std::vector<int> pinched_set_parallel(const TamingOracle& oracle, const std::vector<Vec4>& pts,
                                      const std::vector<int>& candidate, double r, double delta,
                                      double beta, double lambda, int threads) {
    if (threads <= 1 || candidate.size() < 64)
        return pinched_set(oracle, pts, candidate, r, delta, beta, lambda);
    std::vector<char> keep(candidate.size(), 0);
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < candidate.size(); i = next.fetch_add(1))
                keep[i] = oracle.eval(pts[candidate[i]], 0.5 * beta * r) >= lambda - delta;
        });
    for (auto& th : pool) th.join();
    std::vector<int> out;
    for (size_t i = 0; i < candidate.size(); ++i)
        if (keep[i]) out.push_back(candidate[i]);
    return out;
}

}  // namespace

namespace {

// balanced-midpoint enumeration of the lex-sorted indices; prefixes of the
// result are spread-out subsets at every resolution
std::vector<int> spread_order(const std::vector<Vec4>& carrier, std::vector<int> idx) {
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (carrier[a] != carrier[b]) return carrier[a] < carrier[b];
        return a < b;
    });
    std::vector<int> out;
    out.reserve(idx.size());
    std::vector<std::pair<size_t, size_t>> queue{{0, idx.size()}};
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        auto [a, b] = queue[qi];
        if (a >= b) continue;
        size_t m = a + (b - a) / 2;
        out.push_back(idx[m]);
        queue.emplace_back(a, m);
        queue.emplace_back(m + 1, b);
    }
    return out;
}

}  // namespace

BallLabel classify_ball(const Ball& ball, const std::vector<Vec4>& carrier,
                        const std::vector<int>& pts_in_ball, const TamingOracle& oracle,
                        const CoveringParams& params, double lambda) {
    const double span_scale = params.beta_bar * ball.radius;
    // evaluate the pinching filter in spread-out batches: a spanning triple
    // among any pinched subset already certifies the ball good
    std::vector<int> order = spread_order(carrier, pts_in_ball);
    std::vector<Vec4> pinched_pts;
    size_t done = 0;
    for (size_t batch : {size_t{64}, size_t{512}, order.size()}) {
        batch = std::min(batch, order.size());
        if (batch <= done && batch < order.size()) continue;
        std::vector<int> chunk(order.begin() + done, order.begin() + batch);
        done = batch;
        auto pinched = pinched_set_parallel(oracle, carrier, chunk, ball.radius,
                                            params.delta_or_default(), params.beta, lambda,
                                            params.threads);
        for (int i : pinched) pinched_pts.push_back(carrier[i]);
        if (pinched_pts.size() >= 3 && beta_span(pinched_pts, 2, span_scale))
            return BallLabel::Good;
        if (done >= order.size()) break;
    }
    return BallLabel::Bad;
}

std::vector<int> greedy_net(const std::vector<Vec4>& carrier, const std::vector<int>& pts,
                            double sep) {
    std::vector<int> order = pts;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (carrier[a] != carrier[b]) return carrier[a] < carrier[b];
        return a < b;
    });
    std::vector<int> chosen;
    PointGrid grid(carrier, std::max(sep, 1e-12));
    for (int i : order) {
        bool blocked = false;
        grid.for_each_near(carrier[i], sep, [&](int j) {
            if (!blocked && dist(carrier[i], carrier[j]) < sep) blocked = true;
        });
        if (!blocked) {
            chosen.push_back(i);
            grid.insert(i);
        }
    }
    return chosen;
}

namespace {

struct GenerationOutcome {
    std::vector<BallLabel> labels;               // per input ball
    std::vector<std::vector<int>> frozen_points; // per input ball (bad ones only)
    std::vector<Ball> children;                  // Ball::parent holds the input slot
};

GenerationOutcome sweep_generation(const std::vector<Ball>& current,
                                   const std::vector<Vec4>& carrier, std::vector<char>& active,
                                   const TamingOracle& oracle, const CoveringParams& params,
                                   double lambda, int depth) {
    GenerationOutcome out;
    if (current.empty()) return out;
    double r = current.front().radius;
    PointGrid grid(carrier, std::max(r, 1e-12));
    for (size_t i = 0; i < carrier.size(); ++i)
        if (active[i]) grid.insert(static_cast<int>(i));

    std::vector<std::vector<int>> ball_pts(current.size());
    out.labels.resize(current.size());
    out.frozen_points.resize(current.size());
    for (size_t b = 0; b < current.size(); ++b) {
        ball_pts[b] = points_in_ball(grid, carrier, current[b].center, current[b].radius);
        out.labels[b] = classify_ball(current[b], carrier, ball_pts[b], oracle, params, lambda);
    }

    // delete the points of bad balls before refining
    for (size_t b = 0; b < current.size(); ++b) {
        if (out.labels[b] != BallLabel::Bad) continue;
        for (int i : ball_pts[b])
            if (active[i]) {
                out.frozen_points[b].push_back(i);
                active[i] = 0;
            }
    }

    // joint net over surviving points of the good balls
    std::vector<int> union_pts;
    for (size_t b = 0; b < current.size(); ++b) {
        if (out.labels[b] != BallLabel::Good) continue;
        for (int i : ball_pts[b])
            if (active[i]) union_pts.push_back(i);
    }
    std::sort(union_pts.begin(), union_pts.end());
    union_pts.erase(std::unique(union_pts.begin(), union_pts.end()), union_pts.end());

    double child_r = params.beta * r;
    auto net = greedy_net(carrier, union_pts, 0.5 * child_r);
    double cert_floor = lambda - params.delta_or_default() - params.tau_or_default();
    std::vector<double> cert_values(net.size());
    if (params.threads > 1 && net.size() >= 64) {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < params.threads; ++t)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < net.size(); i = next.fetch_add(1))
                    cert_values[i] = oracle.eval(carrier[net[i]], 0.5 * child_r);
            });
        for (auto& th : pool) th.join();
    } else {
        for (size_t i = 0; i < net.size(); ++i)
            cert_values[i] = oracle.eval(carrier[net[i]], 0.5 * child_r);
    }
    for (size_t i = 0; i < net.size(); ++i) {
        Ball child;
        child.center = carrier[net[i]];
        child.radius = child_r;
        child.label = BallLabel::Leaf;
        child.depth = depth;
        child.pinch_value = cert_values[i];
        child.pinch_certified = child.pinch_value >= cert_floor - 1e-12;
        // attribute the child to the first good ball containing its center
        child.parent = -1;
        for (size_t b = 0; b < current.size(); ++b) {
            if (out.labels[b] != BallLabel::Good) continue;
            if (dist(child.center, current[b].center) <= current[b].radius) {
                child.parent = static_cast<int>(b);
                break;
            }
        }
        out.children.push_back(child);
    }
    return out;
}

}  // namespace

std::vector<Ball> refine(const std::vector<Ball>& balls, const std::vector<Vec4>& carrier,
                         const std::vector<int>& active_idx, const TamingOracle& oracle,
                         const CoveringParams& params) {
    CoveringParams p = params;
    if (p.lambda < 0.0) p.lambda = oracle.lambda();
    p.validate();
    if (!balls.empty()) {
        double r0 = balls.front().radius;
        for (const auto& b : balls)
            if (std::abs(b.radius - r0) > 1e-12 * r0)
                throw std::invalid_argument("refine: balls must share one radius per sweep");
    }
    std::vector<char> active(carrier.size(), 0);
    for (int i : active_idx) active[i] = 1;
    auto out = sweep_generation(balls, carrier, active, oracle, p, p.lambda,
                                balls.empty() ? 0 : balls.front().depth + 1);
    std::vector<Ball> family;
    for (size_t b = 0; b < balls.size(); ++b)
        if (out.labels[b] == BallLabel::Bad) {
            Ball frozen = balls[b];
            frozen.label = BallLabel::Bad;
            family.push_back(frozen);
        }
    for (auto child : out.children) {
        child.parent = -1;  // slot indices are meaningless outside the iteration
        family.push_back(child);
    }
    return family;
}

CoveringState iterate_covering(const Ball& root, const std::vector<Vec4>& carrier,
                               const TamingOracle& oracle, const CoveringParams& params, int n) {
    if (n < 1) throw std::invalid_argument("iterate_covering: N >= 1 required");
    CoveringState st;
    st.params = params;
    if (st.params.lambda < 0.0) st.params.lambda = oracle.lambda();
    st.params.validate();
    st.lambda = st.params.lambda;
    st.carrier = carrier;
    st.generations = n;
    st.captured_by.assign(carrier.size(), -1);

    Ball r0 = root;
    r0.label = BallLabel::Root;
    r0.depth = 0;
    st.tree.push_back(r0);

    std::vector<char> active(carrier.size(), 0);
    for (size_t i = 0; i < carrier.size(); ++i)
        if (dist(carrier[i], root.center) <= root.radius) {
            active[i] = 1;
            st.root_points.push_back(static_cast<int>(i));
        }

    std::vector<int> current{0};  // indices into tree
    std::vector<int> final_family;
    for (int gen = 1; gen <= n; ++gen) {
        std::vector<Ball> cur_balls;
        for (int i : current) cur_balls.push_back(st.tree[i]);
        auto out = sweep_generation(cur_balls, carrier, active, oracle, st.params,
                                    st.params.lambda, gen);
        if (st.tree.size() + out.children.size() > st.params.ball_budget)
            throw BudgetExceededError("iterate_covering: ball budget exceeded");

        // bad balls freeze in place and join the final family; good balls
        // become interior nodes
        for (size_t b = 0; b < current.size(); ++b) {
            if (out.labels[b] == BallLabel::Bad) {
                st.tree[current[b]].label = BallLabel::Bad;
                final_family.push_back(current[b]);
                for (int p : out.frozen_points[b]) st.captured_by[p] = current[b];
            } else if (st.tree[current[b]].label != BallLabel::Root) {
                st.tree[current[b]].label = BallLabel::Good;
            }
        }
        std::vector<int> next;
        for (auto child : out.children) {
            child.parent = child.parent >= 0 ? current[child.parent] : 0;
            int tree_idx = static_cast<int>(st.tree.size());
            st.tree.push_back(child);
            next.push_back(tree_idx);
        }
        current = next;

        GenerationRow row;
        row.generation = gen;
        row.ball_count = current.size();
        row.frozen_bad = final_family.size();
        for (int i : final_family) row.content += st.tree[i].radius * st.tree[i].radius;
        for (int i : current) row.content += st.tree[i].radius * st.tree[i].radius;
        st.ledger.push_back(row);
        if (current.empty()) break;
    }
    // surviving leaves join the final family; capture their active points
    if (!current.empty()) {
        double leaf_r = st.tree[current.front()].radius;
        PointGrid grid(st.carrier, std::max(leaf_r, 1e-12));
        for (size_t i = 0; i < st.carrier.size(); ++i)
            if (active[i]) grid.insert(static_cast<int>(i));
        for (int i : current) {
            final_family.push_back(i);
            auto pts = points_in_ball(grid, st.carrier, st.tree[i].center, st.tree[i].radius);
            for (int p : pts)
                if (active[p] && st.captured_by[p] < 0) st.captured_by[p] = i;
        }
    }
    if (final_family.empty()) {
        // nothing was produced (root itself bad): keep the root
        st.tree[0].label = BallLabel::Bad;
        final_family.push_back(0);
        for (int p : st.root_points) st.captured_by[p] = 0;
    }
    st.final_balls = final_family;
    return st;
}

double CoveringState::content() const {
    double c = 0.0;
    for (int i : final_balls) c += tree[i].radius * tree[i].radius;
    return c;
}

WeightedPointCloud CoveringState::ball_cloud() const {
    WeightedPointCloud cloud;
    for (int i : final_balls)
        cloud.atoms.push_back({tree[i].center, tree[i].radius * tree[i].radius});
    return cloud;
}

WeightedPointCloud CoveringState::mu_truncation(int j) const {
    double r_j = tree.empty() ? 0.0
                              : std::pow(params.beta, static_cast<double>(generations - j)) *
                                    tree[0].radius;
    WeightedPointCloud cloud;
    for (int i : final_balls)
        if (tree[i].radius <= r_j * (1.0 + 1e-12))
            cloud.atoms.push_back({tree[i].center, tree[i].radius * tree[i].radius});
    return cloud;
}

bool verify_packing(const std::vector<Ball>& balls) {
    if (balls.size() <= 4000) {
        for (size_t a = 0; a < balls.size(); ++a)
            for (size_t b = a + 1; b < balls.size(); ++b) {
                double lhs = dist(balls[a].center, balls[b].center);
                double rhs = 0.25 * (balls[a].radius + balls[b].radius);
                if (lhs < rhs) return false;
            }
        return true;
    }
    // grid-accelerated exact check for large families
    double rmax = 0.0;
    for (const auto& b : balls) rmax = std::max(rmax, b.radius);
    std::vector<Vec4> centers(balls.size());
    for (size_t i = 0; i < balls.size(); ++i) centers[i] = balls[i].center;
    PointGrid grid(centers, std::max(rmax, 1e-12));
    for (size_t i = 0; i < balls.size(); ++i) grid.insert(static_cast<int>(i));
    for (size_t i = 0; i < balls.size(); ++i) {
        bool ok = true;
        grid.for_each_near(balls[i].center, 0.25 * (balls[i].radius + rmax), [&](int j) {
            if (static_cast<size_t>(j) <= i) return;
            double lhs = dist(balls[i].center, balls[j].center);
            double rhs = 0.25 * (balls[i].radius + balls[j].radius);
            if (lhs < rhs) ok = false;
        });
        if (!ok) return false;
    }
    return true;
}

bool verify_coverage(const std::vector<Ball>& balls, const std::vector<Vec4>& pts) {
    if (pts.empty()) return true;
    if (balls.empty()) return false;
    double rmax = 0.0;
    for (const auto& b : balls) rmax = std::max(rmax, b.radius);
    std::vector<Vec4> centers(balls.size());
    for (size_t i = 0; i < balls.size(); ++i) centers[i] = balls[i].center;
    PointGrid grid(centers, std::max(rmax, 1e-12));
    for (size_t i = 0; i < balls.size(); ++i) grid.insert(static_cast<int>(i));
    for (const auto& p : pts) {
        bool covered = false;
        grid.for_each_near(p, rmax, [&](int j) {
            if (!covered && dist(p, balls[j].center) <= balls[j].radius) covered = true;
        });
        if (!covered) return false;
    }
    return true;
}

ReifenbergReport reifenberg_functional(const WeightedPointCloud& cloud, const Vec4& x, double r,
                                       int n_scales) {
    ReifenbergReport rep;
    auto idx = cloud.in_ball(x, r);
    double mass = 0.0;
    for (size_t i : idx) mass += cloud.atoms[i].weight;
    rep.mass_ratio = mass / (r * r);
    const double ln2 = std::log(2.0);
    for (size_t i : idx) {
        const auto& a = cloud.atoms[i];
        double acc = 0.0;
        double s = r;
        for (int j = 0; j < n_scales; ++j) {
            acc += beta2(cloud, a.position, s) * ln2;
            s *= 0.5;
        }
        rep.functional += a.weight * acc;
    }
    return rep;
}

// ---------- scale-s covering pipeline ----------

namespace {

struct PendingElement {
    Ball ball;
    std::vector<int> pts;  // carrier indices
    double lambda;
    bool type2 = false;
};

std::vector<Vec4> carrier_subset(const std::vector<Vec4>& carrier, const std::vector<int>& idx) {
    std::vector<Vec4> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(carrier[i]);
    return out;
}

std::vector<Ball> state_balls(const CoveringState& st) {
    std::vector<Ball> out;
    out.reserve(st.final_balls.size());
    for (int i : st.final_balls) out.push_back(st.tree[i]);
    return out;
}

}  // namespace

MinkowskiResult minkowski_estimate(const std::vector<Vec4>& carrier, const Ball& root,
                                   const TamingOracle& oracle, double s,
                                   const CoveringParams& params) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("minkowski_estimate: s in (0,1)");
    CoveringParams p = params;
    if (p.lambda < 0.0) p.lambda = oracle.lambda();
    p.validate();
    auto t0 = std::chrono::steady_clock::now();

    MinkowskiResult res;
    const double beta = p.beta;
    const double floor_r = 4.0 * p.beta_bar * s;
    const double delta = p.delta_or_default();

    // strongly admissible split-covering of one element
    std::function<void(const PendingElement&, std::vector<PendingElement>&)> strong_cover =
        [&](const PendingElement& el, std::vector<PendingElement>& out) {
            if (el.ball.radius <= s) {
                PendingElement leaf = el;
                leaf.ball.radius = std::max(el.ball.radius, floor_r);
                leaf.type2 = false;
                out.push_back(std::move(leaf));
                return;
            }
            int n = std::max(1, static_cast<int>(std::ceil(std::log(s / el.ball.radius) /
                                                               std::log(beta) -
                                                           1e-9)));
            CoveringParams sub = p;
            sub.lambda = el.lambda;
            CoveringState st;
            try {
                st = iterate_covering(el.ball, carrier_subset(carrier, el.pts), oracle, sub, n);
            } catch (const BudgetExceededError&) {
                res.budget_exceeded = true;
                PendingElement keep = el;
                keep.type2 = false;
                out.push_back(std::move(keep));
                return;
            }
            if (!verify_packing(state_balls(st))) res.all_internal_packings_ok = false;
            // map sub-carrier indices back to global ones
            for (int bi : st.final_balls) {
                const Ball& b = st.tree[bi];
                std::vector<int> pts;
                for (size_t local = 0; local < st.captured_by.size(); ++local)
                    if (st.captured_by[local] == bi) pts.push_back(el.pts[local]);
                if (b.label != BallLabel::Bad || b.radius <= s) {
                    PendingElement leaf;
                    leaf.ball = b;
                    leaf.ball.radius = std::max(std::min(b.radius, s), floor_r);
                    leaf.pts = std::move(pts);
                    leaf.lambda = el.lambda;
                    out.push_back(std::move(leaf));
                    continue;
                }
                // oversized bad ball: split the pinched part along its spine,
                // keep the remainder as a type-II element
                auto pinched = pinched_set(oracle, carrier, pts, b.radius, delta, beta, el.lambda);
                std::vector<int> rest;
                {
                    std::vector<char> isp(carrier.size(), 0);
                    for (int i : pinched) isp[i] = 1;
                    for (int i : pts)
                        if (!isp[i]) rest.push_back(i);
                }
                if (!pinched.empty()) {
                    double split_r = 4.0 * p.beta_bar * b.radius;
                    auto net = greedy_net(carrier, pinched, split_r);
                    res.realized_split_count = std::max(res.realized_split_count, net.size());
                    for (int c : net) {
                        PendingElement piece;
                        piece.ball.center = carrier[c];
                        piece.ball.radius = split_r;
                        piece.ball.label = BallLabel::Leaf;
                        piece.lambda = el.lambda;
                        for (int i : pinched)
                            if (dist(carrier[i], piece.ball.center) <= split_r)
                                piece.pts.push_back(i);
                        if (split_r > s) {
                            strong_cover(piece, out);
                        } else {
                            piece.ball.radius = std::max(split_r, floor_r);
                            out.push_back(std::move(piece));
                        }
                    }
                }
                if (!rest.empty()) {
                    PendingElement t2;
                    t2.ball = b;
                    t2.pts = std::move(rest);
                    t2.lambda = el.lambda;
                    t2.type2 = true;
                    out.push_back(std::move(t2));
                }
            }
        };

    PendingElement seed;
    seed.ball = root;
    seed.lambda = p.lambda;
    for (size_t i = 0; i < carrier.size(); ++i)
        if (dist(carrier[i], root.center) <= root.radius) seed.pts.push_back(static_cast<int>(i));

    std::vector<PendingElement> family;
    strong_cover(seed, family);

    const int max_rounds = static_cast<int>(std::ceil(p.lambda / delta)) + 1;
    for (int round = 0; round < max_rounds; ++round) {
        bool has_type2 = false;
        for (const auto& el : family)
            if (el.type2) has_type2 = true;
        if (!has_type2) break;
        res.type2_rounds = round + 1;
        std::vector<PendingElement> next;
        for (auto& el : family) {
            if (!el.type2) {
                next.push_back(std::move(el));
                continue;
            }
            double sub_r = beta * el.ball.radius / 512.0;
            auto net = greedy_net(carrier, el.pts, sub_r);
            res.realized_split_count = std::max(res.realized_split_count, net.size());
            for (int c : net) {
                PendingElement piece;
                piece.ball.center = carrier[c];
                piece.ball.radius = sub_r;
                piece.lambda = el.lambda - delta;
                for (int i : el.pts)
                    if (dist(carrier[i], piece.ball.center) <= sub_r) piece.pts.push_back(i);
                strong_cover(piece, next);
            }
        }
        family = std::move(next);
        if (family.size() > p.ball_budget) {
            res.budget_exceeded = true;
            break;
        }
    }
    for (const auto& el : family)
        if (el.type2) res.budget_exceeded = true;

    for (const auto& el : family) {
        res.cover.push_back(el.ball);
        res.content += el.ball.radius * el.ball.radius;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.ledger.push_back({s, res.cover.size(), res.content, secs});
    return res;
}

// ---------- exports ----------

namespace {
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
const char* label_name(BallLabel l) {
    switch (l) {
        case BallLabel::Root: return "root";
        case BallLabel::Good: return "good";
        case BallLabel::Bad: return "bad";
        case BallLabel::Leaf: return "leaf";
    }
    return "?";
}
}  // namespace

namespace {

void emit_ball(std::ostringstream& out, const CoveringState& state,
               const std::vector<std::vector<int>>& children, int node, int indent) {
    const Ball& b = state.tree[node];
    std::string pad(indent, ' ');
    out << pad << "{\"center\": [" << fmt(b.center[0]) << ", " << fmt(b.center[1]) << ", "
        << fmt(b.center[2]) << ", " << fmt(b.center[3]) << "], \"radius\": " << fmt(b.radius)
        << ", \"label\": \"" << label_name(b.label) << "\", \"depth\": " << b.depth
        << ", \"pinch_value\": " << fmt(b.pinch_value)
        << ", \"pinch_certified\": " << (b.pinch_certified ? "true" : "false")
        << ", \"children\": [";
    if (children[node].empty()) {
        out << "]}";
        return;
    }
    out << "\n";
    for (size_t i = 0; i < children[node].size(); ++i) {
        emit_ball(out, state, children, children[node][i], indent + 2);
        out << (i + 1 < children[node].size() ? ",\n" : "\n");
    }
    out << pad << "]}";
}

}  // namespace

std::string covering_tree_json(const CoveringState& state) {
    std::ostringstream out;
    out << "{\n  \"parameters\": {\"beta\": " << fmt(state.params.beta)
        << ", \"beta_bar\": " << fmt(state.params.beta_bar)
        << ", \"delta\": " << fmt(state.params.delta_or_default())
        << ", \"tau\": " << fmt(state.params.tau_or_default())
        << ", \"lambda\": " << fmt(state.lambda) << ", \"generations\": " << state.generations
        << "},\n";
    out << "  \"content_ledger\": [";
    for (size_t i = 0; i < state.ledger.size(); ++i) {
        const auto& row = state.ledger[i];
        out << (i ? ", " : "") << "{\"generation\": " << row.generation
            << ", \"balls\": " << row.ball_count << ", \"frozen_bad\": " << row.frozen_bad
            << ", \"content\": " << fmt(row.content) << "}";
    }
    out << "],\n  \"tree\":\n";
    std::vector<std::vector<int>> children(state.tree.size());
    for (size_t i = 1; i < state.tree.size(); ++i)
        if (state.tree[i].parent >= 0) children[state.tree[i].parent].push_back(static_cast<int>(i));
    if (!state.tree.empty()) emit_ball(out, state, children, 0, 2);
    out << "\n}\n";
    return out.str();
}

void write_content_csv(std::ostream& out, const std::vector<ContentRow>& rows) {
    out << "scale,ball_count,content,wall_seconds\n";
    for (const auto& r : rows)
        out << fmt(r.scale) << ',' << r.ball_count << ',' << fmt(r.content) << ','
            << fmt(r.wall_seconds) << '\n';
}

}  // namespace zlocus
