// Independent reference implementations used only by the tests. These stay
// deliberately naive (quadrature, bisection, exhaustive enumeration, dense
// linear algebra) so they cannot share a failure mode with the library code.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "netquant/network.hpp"
#include "netquant/qr_solver.hpp"

namespace oracles {

// Recursive adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 40) {
    double c = 0.5 * (a + b);
    double fa = f(a), fb = f(b), fc = f(c);
    double s = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double x0, double x2, double f0, double f1, double f2, double whole, double eps,
            int level) -> double {
        double x1l = 0.5 * (x0 + 0.5 * (x0 + x2));
        double x1r = 0.5 * (0.5 * (x0 + x2) + x2);
        double xm = 0.5 * (x0 + x2);
        double fl = f(x1l), fr = f(x1r);
        double left = (xm - x0) / 6.0 * (f0 + 4.0 * fl + f1);
        double right = (x2 - xm) / 6.0 * (f1 + 4.0 * fr + f2);
        if (level <= 0 || std::abs(left + right - whole) < 15.0 * eps) {
            return left + right + (left + right - whole) / 15.0;
        }
        return rec(x0, xm, f0, fl, f1, left, 0.5 * eps, level - 1) +
               rec(xm, x2, f1, fr, f2, right, 0.5 * eps, level - 1);
    };
    return rec(a, b, fa, fc, fb, s, tol, depth);
}

// Functional inverse of a monotone CDF by plain bisection.
inline double bisect_inverse(const std::function<double(double)>& cdf, double p, double lo,
                             double hi, double tol = 1e-12) {
    for (int i = 0; i < 200 && hi - lo > tol; ++i) {
        double mid = 0.5 * (lo + hi);
        if (cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline double check_loss_sum(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tau,
                             const Eigen::VectorXd& beta) {
    double total = 0.0;
    Eigen::VectorXd r = y - x * beta;
    for (long i = 0; i < r.size(); ++i) {
        total += r[i] < 0.0 ? r[i] * (tau - 1.0) : r[i] * tau;
    }
    return total;
}

// Exhaustive basic-solution oracle: some optimal quantile regression
// interpolates k observations, so enumerating all k-subsets and scoring the
// interpolating coefficients finds the exact optimum. Usable for k <= 3.
inline double qr_objective_oracle(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tau) {
    const long n = x.rows();
    const long k = x.cols();
    double best = std::numeric_limits<double>::infinity();
    std::vector<long> idx(static_cast<std::size_t>(k));
    std::function<void(long, long)> visit = [&](long start, long chosen) {
        if (chosen == k) {
            Eigen::MatrixXd sub(k, k);
            Eigen::VectorXd rhs(k);
            for (long r = 0; r < k; ++r) {
                sub.row(r) = x.row(idx[static_cast<std::size_t>(r)]);
                rhs[r] = y[idx[static_cast<std::size_t>(r)]];
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
            if (!lu.isInvertible()) return;
            Eigen::VectorXd beta = lu.solve(rhs);
            best = std::min(best, check_loss_sum(x, y, tau, beta));
            return;
        }
        for (long i = start; i <= n - (k - chosen); ++i) {
            idx[static_cast<std::size_t>(chosen)] = i;
            visit(i + 1, chosen + 1);
        }
    };
    visit(0, 0);
    return best;
}

inline Eigen::MatrixXd dense_weights(const netquant::NetworkWeights& w) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(w.n, w.n);
    for (int i = 0; i < w.n; ++i) {
        for (const auto& [j, weight] : w.rows[static_cast<std::size_t>(i)]) m(i, j) = weight;
    }
    return m;
}

// Kolmogorov distance between a sample and an analytic CDF.
inline double kolmogorov_distance(std::vector<double> sample,
                                  const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    double worst = 0.0;
    const double n = static_cast<double>(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = cdf(sample[i]);
        worst = std::max(worst, std::abs(f - static_cast<double>(i) / n));
        worst = std::max(worst, std::abs(f - static_cast<double>(i + 1) / n));
    }
    return worst;
}

inline double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        for (std::size_t pos = 0; pos < order.size(); ++pos) r[order[pos]] = static_cast<double>(pos);
        return r;
    };
    std::vector<double> ra = ranks(a), rb = ranks(b);
    double n = static_cast<double>(a.size());
    double mean = (n - 1.0) / 2.0;
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (ra[i] - mean) * (rb[i] - mean);
        da += (ra[i] - mean) * (ra[i] - mean);
        db += (rb[i] - mean) * (rb[i] - mean);
    }
    return num / std::sqrt(da * db);
}

// The optimality bound on the share of strictly negative residuals.
inline bool fraction_invariant_holds(const netquant::QuantileFit& fit, long k, long n) {
    double frac = fit.negative_fraction();
    double slack = static_cast<double>(k) / static_cast<double>(n) + 1e-12;
    return frac >= fit.tau - slack && frac <= fit.tau + slack;
}

}  // namespace oracles
