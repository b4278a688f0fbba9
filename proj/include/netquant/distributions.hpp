#pragma once

#include <vector>

#include "netquant/rng.hpp"

namespace netquant {

double norm_pdf(double x);
double norm_cdf(double x);

/// Inverse standard normal CDF. Rational initial guess refined by one Halley
/// step, accurate to a few ulp; throws std::domain_error unless 0 < p < 1.
double norm_quantile(double p);

/// Regularized lower incomplete gamma P(shape, x/scale); 0 for x <= 0.
/// Series branch below shape+1, continued fraction above.
double gamma_cdf(double x, double shape, double scale);

double t_cdf(double x, int df);
double t_quantile(double p, int df);

/// Innovation law of the random-coefficient argument u_it.
struct InnovationDist {
    enum class Kind { StdNormal, StudentT };

    Kind kind = Kind::StdNormal;
    int df = 5;  // StudentT only; df >= 3 keeps the variance finite

    static InnovationDist std_normal() { return {Kind::StdNormal, 0}; }
    static InnovationDist student_t(int df);

    double cdf(double x) const;
    double quantile(double p) const;
};

double sample_std_normal(Rng& rng);

/// One draw from dist. Student-t variates keep the raw t(df) scale
/// (variance df/(df-2)); they are not standardized.
double sample(const InnovationDist& dist, Rng& rng);

/// Zero-mean Gaussian vector with covariance Sigma[j1,j2] = base^|j1-j2|,
/// realized through the Cholesky factor of Sigma. Requires |base| < 1.
std::vector<double> sample_node_covariates(int q, double correlation_base, Rng& rng);

}  // namespace netquant
