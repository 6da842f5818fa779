#include "zlocus/point_cloud.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace zlocus {

double WeightedPointCloud::total_mass() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.weight;
    return m;
}

std::vector<size_t> WeightedPointCloud::in_ball(const Vec4& x, double r) const {
    std::vector<size_t> idx;
    double r2 = r * r;
    for (size_t i = 0; i < atoms.size(); ++i)
        if (norm_sq(atoms[i].position - x) <= r2) idx.push_back(i);
    return idx;
}

namespace {
std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

void write_cloud_csv(std::ostream& out, const WeightedPointCloud& cloud) {
    out << "x1,x2,x3,x4,weight\n";
    for (const auto& a : cloud.atoms) {
        out << fmt_double(a.position[0]) << ',' << fmt_double(a.position[1]) << ','
            << fmt_double(a.position[2]) << ',' << fmt_double(a.position[3]) << ','
            << fmt_double(a.weight) << '\n';
    }
}

WeightedPointCloud read_cloud_csv(std::istream& in) {
    WeightedPointCloud cloud;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("x1,", 0) == 0) continue;  // header
        }
        std::istringstream ss(line);
        WeightedAtom a;
        char comma;
        if (!(ss >> a.position[0] >> comma >> a.position[1] >> comma >> a.position[2] >> comma >>
              a.position[3] >> comma >> a.weight))
            throw std::runtime_error("cloud CSV: malformed row: " + line);
        cloud.atoms.push_back(a);
    }
    return cloud;
}

void write_cloud_csv_file(const std::string& path, const WeightedPointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    write_cloud_csv(out, cloud);
}

WeightedPointCloud read_cloud_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    return read_cloud_csv(in);
}

}  // namespace zlocus
