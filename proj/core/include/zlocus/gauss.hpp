#pragma once

#include <vector>

namespace zlocus {

struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1]; results are cached per n.
const GaussRule& gauss_legendre(int n);

// Nodes/weights mapped to [a, b].
GaussRule gauss_legendre(int n, double a, double b);

}  // namespace zlocus
