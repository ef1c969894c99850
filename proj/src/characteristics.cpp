#include "hjbsl/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hjbsl {

template <int Dim>
void set_column_weights(ColumnFoot<Dim>& foot, double dt)
{
    const double rp = std::sqrt(foot.lambda_plus);
    const double rm = std::sqrt(foot.lambda_minus);
    foot.gamma_plus = rm / (rp + rm);
    foot.gamma_minus = rp / (rp + rm);
    foot.tau = dt * std::sqrt(foot.lambda_plus * foot.lambda_minus);
}

template <int Dim>
ColumnFoot<Dim> column_foot(const Domain<Dim>& domain, const Point<Dim>& x, double t_k, double dt,
                            const Point<Dim>& drift, const Point<Dim>& sigma_column, int brownian_dim)
{
    const Point<Dim> drift_step = dt * drift;
    const Point<Dim> diffusion_step = std::sqrt(brownian_dim * dt) * sigma_column;

    ColumnFoot<Dim> foot;
    auto resolve = [&](const Point<Dim>& diff, double& lambda, Point<Dim>& y) {
        const auto exit = first_exit(domain, x, drift_step, diff);
        if (exit && exit->s < 1.0) {
            lambda = std::clamp(exit->s * exit->s, kMinExitFraction, 1.0);
            y = exit->point;
        } else {
            lambda = 1.0;
            y = x + drift_step + diff;
        }
    };
    resolve(diffusion_step, foot.lambda_plus, foot.foot_plus);
    if (sigma_column.isZero(0.0)) {
        foot.lambda_minus = foot.lambda_plus;
        foot.foot_minus = foot.foot_plus;
    } else {
        resolve(-diffusion_step, foot.lambda_minus, foot.foot_minus);
    }
    foot.exit_time_plus = t_k + foot.lambda_plus * dt;
    foot.exit_time_minus = t_k + foot.lambda_minus * dt;
    set_column_weights(foot, dt);
    return foot;
}

double combine_columns(std::span<const double> column_taus, std::span<double> pi)
{
    if (column_taus.empty()) throw std::invalid_argument("combine_columns: no columns");
    if (pi.size() != column_taus.size()) throw std::invalid_argument("combine_columns: size mismatch");
    for (double t : column_taus)
        if (!(t > 0.0)) throw std::invalid_argument("combine_columns: column tau must be positive");

    const std::size_t p = column_taus.size();
    if (p == 1) {
        pi[0] = 1.0;
        return column_taus[0];
    }
    double inv_sum = 0.0;
    for (double t : column_taus) inv_sum += 1.0 / t;
    for (std::size_t l = 0; l < p; ++l) pi[l] = (1.0 / column_taus[l]) / inv_sum;
    return double(p) / inv_sum;
}

ColumnCombination combine_columns(std::span<const double> column_taus)
{
    ColumnCombination out;
    out.pi.resize(column_taus.size());
    out.tau = combine_columns(column_taus, out.pi);
    return out;
}

template <int Dim>
void truncated_foot(const Domain<Dim>& domain, const Point<Dim>& x, double t_k, double dt,
                    const Point<Dim>& drift, std::span<const Point<Dim>> sigma_columns,
                    TruncatedFoot<Dim>& out)
{
    const int p = static_cast<int>(sigma_columns.size());
    out.columns.resize(p);
    out.pi.resize(p);
    double taus[16];
    std::vector<double> taus_heap;
    std::span<double> tau_span;
    if (p <= 16) {
        tau_span = std::span<double>(taus, p);
    } else {
        taus_heap.resize(p);
        tau_span = taus_heap;
    }
    for (int l = 0; l < p; ++l) {
        out.columns[l] = column_foot(domain, x, t_k, dt, drift, sigma_columns[l], p);
        tau_span[l] = out.columns[l].tau;
    }
    out.tau = combine_columns(tau_span, out.pi);
}

template void set_column_weights<1>(ColumnFoot<1>&, double);
template void set_column_weights<2>(ColumnFoot<2>&, double);
template ColumnFoot<1> column_foot<1>(const Domain<1>&, const Point<1>&, double, double, const Point<1>&,
                                      const Point<1>&, int);
template ColumnFoot<2> column_foot<2>(const Domain<2>&, const Point<2>&, double, double, const Point<2>&,
                                      const Point<2>&, int);
template void truncated_foot<1>(const Domain<1>&, const Point<1>&, double, double, const Point<1>&,
                                std::span<const Point<1>>, TruncatedFoot<1>&);
template void truncated_foot<2>(const Domain<2>&, const Point<2>&, double, double, const Point<2>&,
                                std::span<const Point<2>>, TruncatedFoot<2>&);

}  // namespace hjbsl
