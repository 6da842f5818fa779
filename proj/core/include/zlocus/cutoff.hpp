#pragma once

namespace zlocus {
namespace cutoff {

// Radial cutoff profile: 1 on [0, 3/4], 0 on [1, inf), quintic in between
// with C^2 joins at both ends. Non-increasing everywhere.

double phi(double t);
double dphi(double t);

// Q(a) = integral_a^1 phi(t) * t dt, closed form.
double phi_t_integral(double a);

constexpr double kPlateauEnd = 0.75;

}  // namespace cutoff
}  // namespace zlocus
