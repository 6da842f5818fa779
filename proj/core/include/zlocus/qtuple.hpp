#pragma once

#include <vector>

namespace zlocus {

// Unordered Q-tuple of points in a Euclidean value space. The order of the
// stored points carries no meaning; the metric minimizes over pairings.
class QTuple {
  public:
    QTuple() = default;
    QTuple(int q, int dim) : q_(q), dim_(dim), data_(static_cast<size_t>(q) * dim, 0.0) { validate(); }
    QTuple(std::initializer_list<std::initializer_list<double>> pts);

    int q() const { return q_; }
    int dim() const { return dim_; }

    double* point(int i) { return data_.data() + static_cast<size_t>(i) * dim_; }
    const double* point(int i) const { return data_.data() + static_cast<size_t>(i) * dim_; }

    QTuple negated() const;

  private:
    void validate() const;
    int q_ = 0;
    int dim_ = 0;
    std::vector<double> data_;
};

// Metric on unordered tuples: min over permutations sigma of
// sqrt(sum_i |T_i - S_{sigma(i)}|^2). Exhaustive enumeration, Q <= 6.
double dist(const QTuple& t, const QTuple& s);

// dist(T, Q copies of 0) = sqrt(sum_i |T_i|^2).
double norm(const QTuple& t);

}  // namespace zlocus
