#pragma once

#include "hjbsl/geometry.hpp"

#include <span>
#include <vector>

namespace hjbsl {

/// Lower clamp applied to exit fractions before square roots are taken.
inline constexpr double kMinExitFraction = 1e-14;

/// Truncated characteristic pair for one Brownian column.
template <int Dim>
struct ColumnFoot {
    double lambda_plus = 1.0;
    double lambda_minus = 1.0;
    Point<Dim> foot_plus;
    Point<Dim> foot_minus;
    double exit_time_plus = 0.0;
    double exit_time_minus = 0.0;
    double gamma_plus = 0.5;
    double gamma_minus = 0.5;
    double tau = 0.0;

    bool plus_exits() const { return lambda_plus < 1.0; }
    bool minus_exits() const { return lambda_minus < 1.0; }
};

/// Feet of all columns plus the combined weights pi and rescaled step tau.
template <int Dim>
struct TruncatedFoot {
    std::vector<ColumnFoot<Dim>> columns;
    std::vector<double> pi;
    double tau = 0.0;

    bool any_exit() const
    {
        for (const auto& c : columns)
            if (c.plus_exits() || c.minus_exits()) return true;
        return false;
    }
};

/// Weights of a column from its exit fractions:
/// gamma(+-) = sqrt(lambda(-+)) / (sqrt(lambda+) + sqrt(lambda-)),
/// tau = dt * sqrt(lambda+ * lambda-).
template <int Dim>
void set_column_weights(ColumnFoot<Dim>& foot, double dt);

/// Follows x + lambda*dt*b +- sqrt(p*lambda*dt)*sigma until it leaves the
/// domain (lambda < 1) or the step ends (lambda = 1).
template <int Dim>
ColumnFoot<Dim> column_foot(const Domain<Dim>& domain, const Point<Dim>& x, double t_k, double dt,
                            const Point<Dim>& drift, const Point<Dim>& sigma_column, int brownian_dim);

/// Combined column weights. For p >= 2 uses the reciprocal form
/// pi_l = (1/tau_l) / sum(1/tau_j), tau = p / sum(1/tau_j).
struct ColumnCombination {
    std::vector<double> pi;
    double tau = 0.0;
};

ColumnCombination combine_columns(std::span<const double> column_taus);

/// Allocation-free variant writing into `pi`; returns tau.
double combine_columns(std::span<const double> column_taus, std::span<double> pi);

/// Fills `out` for all columns, reusing its storage.
template <int Dim>
void truncated_foot(const Domain<Dim>& domain, const Point<Dim>& x, double t_k, double dt,
                    const Point<Dim>& drift, std::span<const Point<Dim>> sigma_columns,
                    TruncatedFoot<Dim>& out);

}  // namespace hjbsl
