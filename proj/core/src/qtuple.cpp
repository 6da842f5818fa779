#include "zlocus/qtuple.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace zlocus {

QTuple::QTuple(std::initializer_list<std::initializer_list<double>> pts) {
    q_ = static_cast<int>(pts.size());
    dim_ = q_ > 0 ? static_cast<int>(pts.begin()->size()) : 0;
    data_.reserve(static_cast<size_t>(q_) * dim_);
    for (const auto& p : pts) {
        if (static_cast<int>(p.size()) != dim_)
            throw std::invalid_argument("QTuple: points must share one dimension");
        data_.insert(data_.end(), p.begin(), p.end());
    }
    validate();
}

void QTuple::validate() const {
    if (q_ < 1) throw std::invalid_argument("QTuple: Q must be >= 1");
    if (dim_ < 1) throw std::invalid_argument("QTuple: value dimension must be >= 1");
    if (q_ > 6) throw std::invalid_argument("QTuple: Q > 6 not supported");
}

QTuple QTuple::negated() const {
    QTuple n(q_, dim_);
    for (size_t i = 0; i < data_.size(); ++i) n.data_[i] = -data_[i];
    return n;
}

namespace {

double pair_cost_sq(const QTuple& t, const QTuple& s, const std::vector<int>& perm) {
    double acc = 0.0;
    for (int i = 0; i < t.q(); ++i) {
        const double* a = t.point(i);
        const double* b = s.point(perm[i]);
        for (int d = 0; d < t.dim(); ++d) {
            double diff = a[d] - b[d];
            acc += diff * diff;
        }
    }
    return acc;
}

}  // namespace

double dist(const QTuple& t, const QTuple& s) {
    if (t.q() != s.q() || t.dim() != s.dim())
        throw std::invalid_argument("QTuple dist: mismatched Q or dimension");
    std::vector<int> perm(t.q());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        best = std::min(best, pair_cost_sq(t, s, perm));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best);
}

double norm(const QTuple& t) {
    double acc = 0.0;
    for (int i = 0; i < t.q(); ++i) {
        const double* p = t.point(i);
        for (int d = 0; d < t.dim(); ++d) acc += p[d] * p[d];
    }
    return std::sqrt(acc);
}

}  // namespace zlocus
