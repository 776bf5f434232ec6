#pragma once

#include <functional>
#include <string>
#include <vector>

namespace mdseq {

/// Closed-form potential energy surface with analytic gradient.
struct PotentialSpec {
    int dimension = 2;
    std::function<double(const std::vector<double>&)> energy;
    std::function<std::vector<double>(const std::vector<double>&)> gradient;
    std::string label;

    // Stationary points of the built-in surface, filled in by the factory.
    // minima.front() is the deeper basin.
    std::vector<std::vector<double>> minima;
    std::vector<double> saddle;
    double barrier_from_deep = 0.0;     // U(saddle) - U(deep minimum)
    double barrier_from_shallow = 0.0;  // U(saddle) - U(shallow minimum)
};

/// Asymmetric two-basin surface: U(x,y) = (x^2-1)^2 + a*x + b*y^2 with
/// a = 0.15, b = 2.0. One slow coordinate (x, basin hopping) and one fast
/// coordinate (y, harmonic jitter). The tilt makes the basin populations
/// unequal.
PotentialSpec builtin_double_well();

/// Default temperature used with the built-in double well; keeps the
/// barrier above 4 kT so basin crossings are rare events.
inline double double_well_default_kT() { return 0.15; }

}  // namespace mdseq
