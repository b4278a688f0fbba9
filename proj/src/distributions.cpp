#include "netquant/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace netquant {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;  // 1/sqrt(2*pi)
constexpr double kInvSqrt2 = 0.7071067811865475244;    // 1/sqrt(2)

// Acklam's rational approximation for the inverse normal CDF (|err| < 1.2e-9
// before refinement).
double norm_quantile_approx(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

// Regularized lower incomplete gamma by its power series (x < shape + 1).
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma by Lentz's continued fraction (x >= shape + 1).
double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Continued fraction for the regularized incomplete beta function.
double beta_contfrac(double a, double b, double x) {
    const double tiny = 1e-300;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h;
}

double beta_inc(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_contfrac(a, b, x) / a;
    }
    return 1.0 - front * beta_contfrac(b, a, 1.0 - x) / b;
}

void check_prob_open(double p, const char* name) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error(std::string(name) + " requires a probability in (0,1), got " +
                                std::to_string(p));
    }
}

}  // namespace

double norm_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * kInvSqrt2);
}

double norm_quantile(double p) {
    check_prob_open(p, "norm_quantile");
    double x = norm_quantile_approx(p);
    // One Halley step against the CDF itself.
    double err = norm_cdf(x) - p;
    double pdf = norm_pdf(x);
    if (pdf > 0.0) {
        double u = err / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double gamma_cdf(double x, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
        throw std::domain_error("gamma_cdf requires positive shape and scale");
    }
    if (x < 0.0) throw std::domain_error("gamma_cdf requires x >= 0");
    if (x == 0.0) return 0.0;
    double t = x / scale;
    if (t < shape + 1.0) return gamma_p_series(shape, t);
    return 1.0 - gamma_q_contfrac(shape, t);
}

double t_cdf(double x, int df) {
    if (df < 1) throw std::domain_error("t_cdf requires df >= 1");
    if (x == 0.0) return 0.5;
    double nu = static_cast<double>(df);
    double tail = 0.5 * beta_inc(0.5 * nu, 0.5, nu / (nu + x * x));
    return x > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, int df) {
    check_prob_open(p, "t_quantile");
    if (df < 1) throw std::domain_error("t_quantile requires df >= 1");
    if (p == 0.5) return 0.0;
    // Bisection on a symmetric bracket; the CDF is strictly increasing.
    double hi = 1.0;
    while (t_cdf(hi, df) < std::max(p, 1.0 - p)) hi *= 2.0;
    double lo = -hi;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (t_cdf(mid, df) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-14 * std::max(1.0, std::abs(mid))) break;
    }
    return 0.5 * (lo + hi);
}

InnovationDist InnovationDist::student_t(int df) {
    if (df < 3) throw std::domain_error("StudentT innovations require df >= 3");
    return {Kind::StudentT, df};
}

double InnovationDist::cdf(double x) const {
    return kind == Kind::StdNormal ? norm_cdf(x) : t_cdf(x, df);
}

double InnovationDist::quantile(double p) const {
    return kind == Kind::StdNormal ? norm_quantile(p) : t_quantile(p, df);
}

double sample_std_normal(Rng& rng) {
    return norm_quantile(rng.uniform01());
}

double sample(const InnovationDist& dist, Rng& rng) {
    if (dist.kind == InnovationDist::Kind::StdNormal) return sample_std_normal(rng);
    if (dist.df < 3) throw std::domain_error("StudentT innovations require df >= 3");
    // t = Z / sqrt(chi2_df / df) with chi2 as a sum of squared normals.
    double z = sample_std_normal(rng);
    double chi2 = 0.0;
    for (int i = 0; i < dist.df; ++i) {
        double g = sample_std_normal(rng);
        chi2 += g * g;
    }
    return z / std::sqrt(chi2 / static_cast<double>(dist.df));
}

std::vector<double> sample_node_covariates(int q, double correlation_base, Rng& rng) {
    if (q < 1) throw std::domain_error("sample_node_covariates requires q >= 1");
    if (!(std::abs(correlation_base) < 1.0)) {
        throw std::domain_error("covariate correlation base must satisfy |base| < 1");
    }
    // Cholesky of the Toeplitz matrix Sigma[i][j] = base^|i-j|.
    std::vector<double> chol(static_cast<std::size_t>(q) * q, 0.0);
    auto at = [&](int i, int j) -> double& { return chol[static_cast<std::size_t>(i) * q + j]; };
    for (int i = 0; i < q; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = std::pow(correlation_base, std::abs(i - j));
            for (int k = 0; k < j; ++k) sum -= at(i, k) * at(j, k);
            if (i == j) {
                if (sum <= 0.0) throw std::domain_error("covariate covariance is not positive definite");
                at(i, j) = std::sqrt(sum);
            } else {
                at(i, j) = sum / at(j, j);
            }
        }
    }
    std::vector<double> eps(q);
    for (int i = 0; i < q; ++i) eps[i] = sample_std_normal(rng);
    std::vector<double> out(q, 0.0);
    for (int i = 0; i < q; ++i) {
        double acc = 0.0;
        for (int j = 0; j <= i; ++j) acc += at(i, j) * eps[j];
        out[i] = acc;
    }
    return out;
}

}  // namespace netquant
