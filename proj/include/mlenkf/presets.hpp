#pragma once
// The two benchmark filtering problems, truncated at n_ref modes.

#include <Eigen/Core>
#include <cstddef>

#include "mlenkf/model.hpp"
#include "mlenkf/observation.hpp"

namespace mlenkf {

struct ProblemSetup {
    int example = 1;
    ModelConfig model;
    ObservationModel obs;
    Eigen::VectorXd u0;  // n_ref initial coefficients
};

inline constexpr double kUpsilon = 1e-3;

/// example 1: b = 1/4 + u, r = (0, 1/2), H on odd modes, rough QoI.
/// example 2: b = 1/2 + u, r = (1/4 + u/2, 3/4 + u/2), H = delta_{1/2},
/// QoI = sum of all coefficients.
ProblemSetup make_example(int example, std::size_t n_ref, double horizon = 0.25);

}  // namespace mlenkf
