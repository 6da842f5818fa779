#include "zlocus/cutoff.hpp"

namespace zlocus {
namespace cutoff {

double phi(double t) {
    if (t <= 0.75) return 1.0;
    if (t >= 1.0) return 0.0;
    double s = 4.0 * t - 3.0;
    return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double dphi(double t) {
    if (t <= 0.75 || t >= 1.0) return 0.0;
    double a = t - 1.0;
    double b = 4.0 * t - 3.0;
    return -1920.0 * a * a * b * b;
}

double phi_t_integral(double a) {
    if (a >= 1.0) return 0.0;
    if (a <= 0.75) {
        // int_a^{3/4} t dt + int_{3/4}^1 phi t dt
        return (0.28125 - 0.5 * a * a) + 23.0 / 224.0;
    }
    double a2 = a * a;
    double a3 = a2 * a;
    double a4 = a2 * a2;
    double a5 = a4 * a;
    double a6 = a4 * a2;
    double a7 = a6 * a;
    return 6144.0 / 7.0 * a7 - 4480.0 * a6 + 9344.0 * a5 - 10080.0 * a4 + 5760.0 * a3 -
           1472.0 * a2 + 352.0 / 7.0;
}

}  // namespace cutoff
}  // namespace zlocus
