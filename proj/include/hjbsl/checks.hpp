#pragma once

#include "hjbsl/analysis.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hjbsl {

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
    /// Residual sequences and similar numeric traces.
    std::vector<double> series;
};

struct CheckOptions {
    /// Mesh resolution; 0 picks a per-problem default.
    double dx = 0.0;
    double cfl = 1.0;
    /// Random field pairs for monotonicity and constant addition.
    int samples = 1000;
    /// Random configurations for the weight identities.
    int weight_samples = 10000;
    std::uint64_t seed = 7;
    /// Consistency study: coarsest dx (0 picks a default) and level count.
    double consistency_dx0 = 0.0;
    int consistency_levels = 4;
    int workers = 0;
    SchemeOptions scheme;
};

template <int Dim>
PropertyResult check_weight_identities(const ProblemSpec<Dim>& spec, const CheckOptions& options);
template <int Dim>
PropertyResult check_monotonicity(const ProblemSpec<Dim>& spec, const CheckOptions& options);
template <int Dim>
PropertyResult check_constant_addition(const ProblemSpec<Dim>& spec, const CheckOptions& options);
/// ||V_k|| <= ||Psi|| + T ||f|| and V_k = Psi(t_k) on boundary nodes, at dx
/// and dx/2.
template <int Dim>
PropertyResult check_stability(const ProblemSpec<Dim>& spec, const CheckOptions& options);
/// On a box enlarged so that no characteristic leaves it, S^fd must equal
/// (1/2p) sum_l (I(y+) + I(y-)) + dt f.
template <int Dim>
PropertyResult check_unconstrained_reduction(const ProblemSpec<Dim>& spec, const CheckOptions& options);
/// Residual of the smooth probe with dt = dx over successive halvings
/// (strictly decreasing), and with dx fixed while dt shrinks by 4 per step
/// (the last two values must not decrease).
template <int Dim>
std::vector<PropertyResult> check_consistency(const ProblemSpec<Dim>& spec, const CheckOptions& options);

/// Everything above that applies to the problem.
std::vector<PropertyResult> run_property_suite(const AnyProblemSpec& spec, const CheckOptions& options);

/// Default resolution used by the checks.
double default_check_dx(const std::string& problem);

/// A few controls spanning the control set, for the costlier checks.
ControlSet coarse_controls(const ControlSet& controls);

}  // namespace hjbsl
