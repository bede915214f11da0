// Log-log power-law regression and finite-size data collapse

#pragma once

#include <limits>
#include <vector>

namespace dqpt {

struct PowerLawFit {
    double exponent{0.0};
    double exponent_stderr{0.0};
    double prefactor{0.0};
    double prefactor_stderr{0.0};
    double r_squared{0.0};
    double window_lo{0.0};
    double window_hi{0.0};
    int n_points{0};
};

constexpr double kNoBound = std::numeric_limits<double>::infinity();

// Least squares of log y on log x over points with lo <= x <= hi. Standard
// errors come from the regression covariance; the prefactor error is
// propagated from the intercept (delta prefactor = prefactor * delta intercept).
// InsufficientPoints below 8 points; NonPositiveData for x or y <= 0 in the window.
PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double lo = 0.0,
                          double hi = kNoBound);

// Log-spaced grid from lo to hi inclusive with `count` points.
std::vector<double> log_space(double lo, double hi, int count);
// Log-spaced grid from lo upward with constant ratio, stopping at hi (inclusive within 1e-12).
std::vector<double> log_ratio_grid(double lo, double hi, double ratio);

struct CollapseCurve {
    double size{0.0};                // N
    std::vector<double> distance;    // |g - g_c|, increasing
    std::vector<double> value;       // A_N at each distance
    double critical_value{0.0};      // A_N(g_c); <= 0 when absent
};

struct RescaledCurve {
    double size{0.0};
    std::vector<double> x;  // N |g - g_c|^nu
    std::vector<double> y;  // A_N |g - g_c|^alpha
};

struct CollapseResult {
    double alpha_A{0.0};
    double nu_star{0.0};
    double collapse_quality{0.0};
    std::vector<RescaledCurve> curves;
    PowerLawFit critical_fit;  // A_N(g_c) ~ N^(alpha/nu); exponent 0 when not fitted
    bool critical_fitted{false};
    // quality at the grid neighbours of the optimum (for the sanity check)
    std::vector<double> neighbour_quality;
};

// Mean squared deviation of log(A_N d^alpha) from the pointwise median over a
// common 40-point grid in log(N d^nu), restricted to the range covered by all
// curves. NoOverlap if that range is empty.
double collapse_quality(const std::vector<CollapseCurve>& curves, double alpha, double nu, int grid_points = 40);

// Grid search over alpha_grid x nu_grid, then coordinate refinement around the
// best cell down to 1e-4. Needs at least 3 curves.
CollapseResult finite_size_collapse(const std::vector<CollapseCurve>& curves, const std::vector<double>& alpha_grid,
                                    const std::vector<double>& nu_grid);

// Inclusive arithmetic grid lo, lo+step, ..., hi
std::vector<double> linear_grid(double lo, double hi, double step);

} // namespace dqpt
