#include "mdseq/potential.hpp"

#include <cmath>

#include "mdseq/common.hpp"

namespace mdseq {

namespace {

constexpr double kTiltA = 0.15;
constexpr double kHarmonicB = 2.0;

// Newton iteration on U_x(x) = 4x^3 - 4x + a = 0.
double stationary_x(double x0) {
    double x = x0;
    for (int it = 0; it < 100; ++it) {
        const double f = 4.0 * x * x * x - 4.0 * x + kTiltA;
        const double df = 12.0 * x * x - 4.0;
        const double step = f / df;
        x -= step;
        if (std::abs(step) < 1e-15) break;
    }
    return x;
}

}  // namespace

PotentialSpec builtin_double_well() {
    PotentialSpec spec;
    spec.dimension = 2;
    spec.label = "double_well_2d";
    spec.energy = [](const std::vector<double>& p) {
        const double t = p[0] * p[0] - 1.0;
        return t * t + kTiltA * p[0] + kHarmonicB * p[1] * p[1];
    };
    spec.gradient = [](const std::vector<double>& p) {
        return std::vector<double>{4.0 * p[0] * (p[0] * p[0] - 1.0) + kTiltA,
                                   2.0 * kHarmonicB * p[1]};
    };

    const double x_left = stationary_x(-1.0);
    const double x_right = stationary_x(1.0);
    const double x_saddle = stationary_x(0.0);
    const double u_left = spec.energy({x_left, 0.0});
    const double u_right = spec.energy({x_right, 0.0});
    const double u_saddle = spec.energy({x_saddle, 0.0});
    require(u_left < u_right, "builtin_double_well: expected the tilted left basin to be deeper");

    spec.minima = {{x_left, 0.0}, {x_right, 0.0}};
    spec.saddle = {x_saddle, 0.0};
    spec.barrier_from_deep = u_saddle - u_left;
    spec.barrier_from_shallow = u_saddle - u_right;
    return spec;
}

}  // namespace mdseq
