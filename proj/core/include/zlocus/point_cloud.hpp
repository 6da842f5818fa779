#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "zlocus/vec4.hpp"

namespace zlocus {

struct WeightedAtom {
    Vec4 position{};
    double weight = 0.0;
};

// Finite atomic measure sum_i w_i delta_{x_i} on R^4.
struct WeightedPointCloud {
    std::vector<WeightedAtom> atoms;

    double total_mass() const;
    // Indices of atoms in the closed ball around x of radius r.
    std::vector<size_t> in_ball(const Vec4& x, double r) const;
};

// CSV with header x1,x2,x3,x4,weight.
void write_cloud_csv(std::ostream& out, const WeightedPointCloud& cloud);
WeightedPointCloud read_cloud_csv(std::istream& in);
void write_cloud_csv_file(const std::string& path, const WeightedPointCloud& cloud);
WeightedPointCloud read_cloud_csv_file(const std::string& path);

}  // namespace zlocus
