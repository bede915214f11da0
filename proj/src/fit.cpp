#include "dqpt/fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dqpt/errors.hpp"

namespace dqpt {

namespace {

// Ordinary least squares of ly on lx
PowerLawFit regress_logs(const std::vector<double>& lx, const std::vector<double>& ly)
{
    const std::size_t n = lx.size();
    const double dn = static_cast<double>(n);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= dn;
    my /= dn;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0)) throw InsufficientPoints("all abscissae coincide");
    const double slope = sxy / sxx;
    const double icpt = my - slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (icpt + slope * lx[i]);
        ssr += r * r;
    }
    const double s2 = n > 2 ? ssr / (dn - 2.0) : 0.0;
    PowerLawFit f;
    f.exponent = slope;
    f.exponent_stderr = std::sqrt(s2 / sxx);
    f.prefactor = std::exp(icpt);
    f.prefactor_stderr = f.prefactor * std::sqrt(s2 * (1.0 / dn + mx * mx / sxx));
    f.r_squared = syy > 0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
    f.window_lo = std::exp(*std::min_element(lx.begin(), lx.end()));
    f.window_hi = std::exp(*std::max_element(lx.begin(), lx.end()));
    f.n_points = static_cast<int>(n);
    return f;
}

} // namespace

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi)
{
    if (x.size() != y.size()) throw std::invalid_argument("fit_power_law: x and y differ in length");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= lo && x[i] <= hi)) continue;
        if (!(x[i] > 0) || !(y[i] > 0)) {
            std::ostringstream os;
            os << "non-positive data at x = " << x[i] << ", y = " << y[i];
            throw NonPositiveData(os.str());
        }
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    if (lx.size() < 8) throw InsufficientPoints(std::to_string(lx.size()) + " points in the fit window (need 8)");
    PowerLawFit f = regress_logs(lx, ly);
    f.window_lo = lo;
    f.window_hi = hi;
    return f;
}

std::vector<double> log_space(double lo, double hi, int count)
{
    if (!(lo > 0) || !(hi >= lo) || count < 1) throw std::invalid_argument("log_space: need 0 < lo <= hi, count >= 1");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < count; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<double> log_ratio_grid(double lo, double hi, double ratio)
{
    if (!(lo > 0) || !(hi >= lo) || !(ratio > 1)) throw std::invalid_argument("log_ratio_grid: need 0 < lo <= hi, ratio > 1");
    std::vector<double> out;
    const double steps = std::log(hi / lo) / std::log(ratio);
    const int n = static_cast<int>(std::floor(steps + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(lo * std::pow(ratio, i));
    return out;
}

std::vector<double> linear_grid(double lo, double hi, double step)
{
    if (!(step > 0) || !(hi >= lo)) throw std::invalid_argument("linear_grid: need step > 0, hi >= lo");
    std::vector<double> out;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(lo + step * i);
    return out;
}

namespace {

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x)
{
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return ys.front();
    if (it == xs.end()) return ys.back();
    const std::size_t j = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return ys[j - 1] + t * (ys[j] - ys[j - 1]);
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

RescaledCurve rescale(const CollapseCurve& c, double alpha, double nu)
{
    RescaledCurve r;
    r.size = c.size;
    for (std::size_t i = 0; i < c.distance.size(); ++i) {
        r.x.push_back(c.size * std::pow(c.distance[i], nu));
        r.y.push_back(c.value[i] * std::pow(c.distance[i], alpha));
    }
    return r;
}

void validate_curves(const std::vector<CollapseCurve>& curves)
{
    for (const auto& c : curves) {
        if (c.distance.size() != c.value.size() || c.distance.size() < 2)
            throw std::invalid_argument("collapse curve needs >= 2 matching (distance, value) points");
        if (!(c.size > 0)) throw NonPositiveData("collapse curve size must be positive");
        for (std::size_t i = 0; i < c.distance.size(); ++i) {
            if (!(c.distance[i] > 0) || !(c.value[i] > 0)) throw NonPositiveData("collapse data must be positive");
            if (i > 0 && !(c.distance[i] > c.distance[i - 1]))
                throw std::invalid_argument("collapse distances must be strictly increasing");
        }
    }
}

} // namespace

double collapse_quality(const std::vector<CollapseCurve>& curves, double alpha, double nu, int grid_points)
{
    validate_curves(curves);
    std::vector<std::vector<double>> lx, ly;
    double lo = -1e300, hi = 1e300;
    for (const auto& c : curves) {
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < c.distance.size(); ++i) {
            const double ld = std::log(c.distance[i]);
            xs.push_back(std::log(c.size) + nu * ld);
            ys.push_back(std::log(c.value[i]) + alpha * ld);
        }
        lo = std::max(lo, xs.front());
        hi = std::min(hi, xs.back());
        lx.push_back(std::move(xs));
        ly.push_back(std::move(ys));
    }
    if (!(hi > lo)) {
        std::ostringstream os;
        os << "rescaled curves do not overlap at (alpha, nu) = (" << alpha << ", " << nu << ")";
        throw NoOverlap(os.str());
    }
    double acc = 0.0;
    std::vector<double> col(curves.size());
    for (int k = 0; k < grid_points; ++k) {
        const double x = lo + (hi - lo) * k / (grid_points - 1);
        for (std::size_t c = 0; c < curves.size(); ++c) col[c] = interp(lx[c], ly[c], x);
        const double med = median(col);
        for (double v : col) acc += (v - med) * (v - med);
    }
    return acc / (static_cast<double>(grid_points) * static_cast<double>(curves.size()));
}

CollapseResult finite_size_collapse(const std::vector<CollapseCurve>& curves, const std::vector<double>& alpha_grid,
                                    const std::vector<double>& nu_grid)
{
    if (curves.size() < 3) throw InsufficientPoints("finite-size collapse needs at least 3 sizes");
    if (alpha_grid.empty() || nu_grid.empty()) throw std::invalid_argument("empty collapse grid");
    validate_curves(curves);
    auto q_or_inf = [&](double a, double nu) {
        try {
            return collapse_quality(curves, a, nu);
        } catch (const NoOverlap&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    const std::size_t na = alpha_grid.size(), nn = nu_grid.size();
    std::vector<double> Q(na * nn);
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nn; ++j) {
            const double q = q_or_inf(alpha_grid[i], nu_grid[j]);
            Q[i * nn + j] = q;
            if (q < best) {
                best = q;
                bi = i;
                bj = j;
            }
        }
    if (!std::isfinite(best)) throw NoOverlap("no (alpha, nu) on the grid gives overlapping curves");

    CollapseResult out;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const long ii = static_cast<long>(bi) + di, jj = static_cast<long>(bj) + dj;
            if (ii < 0 || jj < 0 || ii >= static_cast<long>(na) || jj >= static_cast<long>(nn)) continue;
            out.neighbour_quality.push_back(Q[static_cast<std::size_t>(ii) * nn + static_cast<std::size_t>(jj)]);
        }

    // compass search from the best grid cell
    double a = alpha_grid[bi], nu = nu_grid[bj];
    double step = 0.5 * std::max(na > 1 ? std::abs(alpha_grid[1] - alpha_grid[0]) : 0.1,
                                 nn > 1 ? std::abs(nu_grid[1] - nu_grid[0]) : 0.1);
    while (step >= 1e-4) {
        bool moved = false;
        const double cand[4][2] = {{a + step, nu}, {a - step, nu}, {a, nu + step}, {a, nu - step}};
        for (const auto& c : cand) {
            const double q = q_or_inf(c[0], c[1]);
            if (q < best) {
                best = q;
                a = c[0];
                nu = c[1];
                moved = true;
            }
        }
        if (!moved) step /= 2.0;
    }
    out.alpha_A = a;
    out.nu_star = nu;
    out.collapse_quality = best;
    for (const auto& c : curves) out.curves.push_back(rescale(c, a, nu));

    std::vector<double> ls, lc;
    for (const auto& c : curves)
        if (c.critical_value > 0) {
            ls.push_back(std::log(c.size));
            lc.push_back(std::log(c.critical_value));
        }
    // few sizes: regressed directly, the 8-point rule is for sweeps
    if (ls.size() >= 2) {
        out.critical_fit = regress_logs(ls, lc);
        out.critical_fitted = true;
    }
    return out;
}

} // namespace dqpt
