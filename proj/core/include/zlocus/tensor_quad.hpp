#pragma once

#include "zlocus/field_model.hpp"

namespace zlocus {

// Full 4D tensor rule: Gauss-Legendre in radius crossed with a product grid
// on S^3 in Hopf angles. This is the generic (model-agnostic) route; the
// planar engine is preferred wherever the w-invariant reduction applies, and
// this engine serves as the independent cross-check.
struct TensorQuadOptions {
    int radial_ball = 96;
    int radial_annulus = 64;
    int sphere_xi = 24;
    int sphere_phi1 = 24;
    int sphere_phi2 = 24;
    bool radial_split_at_planes = false;  // subdivide radius at sphere/zero-plane contact

    TensorQuadOptions doubled() const {
        TensorQuadOptions o = *this;
        o.radial_ball *= 2;
        o.radial_annulus *= 2;
        o.sphere_xi *= 2;
        o.sphere_phi1 *= 2;
        o.sphere_phi2 *= 2;
        return o;
    }
};

struct TensorQuartet {
    double h_phi;
    double d_phi;
    double e_phi;
    double n_phi;
};

double tensor_height(const FieldModel& model, const Vec4& x, double r,
                     const TensorQuadOptions& opts = {});
double tensor_dirichlet(const FieldModel& model, const Vec4& x, double r,
                        const TensorQuadOptions& opts = {});
TensorQuartet tensor_smoothed_quartet(const FieldModel& model, const Vec4& x, double r,
                                      const TensorQuadOptions& opts = {});

}  // namespace zlocus
