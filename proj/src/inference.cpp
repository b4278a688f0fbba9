#include "netquant/inference.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

#include "netquant/common.hpp"
#include "netquant/distributions.hpp"

namespace netquant {

double bandwidth_hs(long long n_total, double tau, double alpha) {
    if (n_total < 2) throw std::domain_error("bandwidth_hs requires n_total >= 2");
    if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("bandwidth_hs requires tau in (0,1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("bandwidth_hs requires alpha in (0,1)");
    double rho = norm_quantile(1.0 - alpha / 2.0);
    double z = norm_quantile(tau);
    double pdf = norm_pdf(z);
    double bracket = 1.5 * pdf * pdf / (2.0 * z * z + 1.0);
    return std::pow(static_cast<double>(n_total), -1.0 / 3.0) * std::pow(rho, 2.0 / 3.0) *
           std::cbrt(bracket);
}

Eigen::MatrixXd estimate_omega(const Eigen::MatrixXd& psi, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("estimate_omega requires tau in (0,1)");
    if (!psi.allFinite()) throw std::invalid_argument("estimate_omega: non-finite entries");
    double scale = tau * (1.0 - tau) / static_cast<double>(psi.rows());
    Eigen::MatrixXd omega = scale * (psi.transpose() * psi);
    return 0.5 * (omega + omega.transpose());  // exact symmetry
}

Eigen::MatrixXd estimate_jacobian(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& ybar_x,
                                  const Eigen::VectorXd& residuals, double h_b, bool one_sided,
                                  bool* near_singular) {
    if (!(h_b > 0.0)) throw std::domain_error("estimate_jacobian requires h_b > 0");
    if (psi.rows() != ybar_x.rows() || psi.rows() != residuals.size()) {
        throw std::invalid_argument("estimate_jacobian: dimension mismatch");
    }
    const long n = psi.rows();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(psi.cols(), ybar_x.cols());
    long selected = 0;
    for (long i = 0; i < n; ++i) {
        bool in = one_sided ? residuals[i] <= h_b : std::abs(residuals[i]) <= h_b;
        if (!in) continue;
        ++selected;
        jac.noalias() += psi.row(i).transpose() * ybar_x.row(i);
    }
    jac /= 2.0 * static_cast<double>(n) * h_b;
    if (near_singular != nullptr) *near_singular = selected == 0;
    return jac;
}

SandwichResult sandwich(const Eigen::MatrixXd& jacobian_hat, const Eigen::MatrixXd& omega_hat,
                        long long n_total) {
    if (jacobian_hat.rows() != omega_hat.rows() || omega_hat.rows() != omega_hat.cols()) {
        throw std::invalid_argument("sandwich: dimension mismatch");
    }
    const long p = jacobian_hat.cols();

    Eigen::MatrixXd reduced = jacobian_hat.rows() == p
                                  ? jacobian_hat
                                  : Eigen::MatrixXd(jacobian_hat.transpose() * jacobian_hat);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(reduced);
    double cond = svd.singularValues()(0) /
                  std::max(svd.singularValues()(svd.singularValues().size() - 1), 0.0);
    if (!std::isfinite(cond) || cond >= 1e12) {
        throw EstimationError("sandwich: near-singular Jacobian (condition " +
                              std::to_string(cond) + ")");
    }

    SandwichResult out;
    if (jacobian_hat.rows() == p) {
        Eigen::MatrixXd jinv = jacobian_hat.inverse();
        out.sigma_theta = jinv * omega_hat * jinv.transpose();
    } else {
        // Least-squares reduction for the over-identified case.
        Eigen::MatrixXd jtj_inv = reduced.inverse();
        Eigen::MatrixXd bread = jtj_inv * jacobian_hat.transpose();
        out.sigma_theta = bread * omega_hat * bread.transpose();
    }
    out.sigma_theta = 0.5 * (out.sigma_theta + out.sigma_theta.transpose());
    out.std_errors =
        (out.sigma_theta.diagonal().cwiseMax(0.0) / static_cast<double>(n_total)).cwiseSqrt();
    return out;
}

std::vector<Interval> confidence_interval(const Eigen::VectorXd& theta,
                                          const Eigen::VectorXd& std_errors, double alpha) {
    if (theta.size() != std_errors.size()) {
        throw std::invalid_argument("confidence_interval: dimension mismatch");
    }
    if (!std_errors.allFinite()) {
        throw std::invalid_argument("confidence_interval: non-finite standard errors");
    }
    double zq = norm_quantile(1.0 - alpha / 2.0);
    std::vector<Interval> out(static_cast<std::size_t>(theta.size()));
    for (long j = 0; j < theta.size(); ++j) {
        double half = zq * std_errors[j];
        out[static_cast<std::size_t>(j)] = {theta[j] - half, theta[j] + half};
    }
    return out;
}

namespace {

CovarianceEstimate covariance_impl(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& ybar_x,
                                   const Eigen::VectorXd& residuals, double tau, double alpha,
                                   bool one_sided) {
    CovarianceEstimate cov;
    cov.bandwidth = bandwidth_hs(psi.rows(), tau, alpha);
    cov.omega_hat = estimate_omega(psi, tau);
    cov.jacobian_hat =
        estimate_jacobian(psi, ybar_x, residuals, cov.bandwidth, one_sided, &cov.near_singular);
    SandwichResult sw = sandwich(cov.jacobian_hat, cov.omega_hat, psi.rows());
    cov.sigma_theta = std::move(sw.sigma_theta);
    cov.std_errors = std::move(sw.std_errors);
    return cov;
}

}  // namespace

CovarianceEstimate ivqr_covariance(const StackedRegression& s, const IvqrEstimate& estimate,
                                   double alpha, bool one_sided_kernel) {
    const long rows = s.rows();
    Eigen::MatrixXd psi(rows, s.r.data.cols() + s.x.data.cols());
    psi << s.r.data, s.x.data;
    Eigen::MatrixXd ybar_x(rows, 1 + s.x.data.cols());
    ybar_x.col(0) = s.ybar;
    ybar_x.rightCols(s.x.data.cols()) = s.x.data;
    Eigen::VectorXd residuals =
        s.y - estimate.gamma1_hat * s.ybar - s.x.data * estimate.phi_hat;
    return covariance_impl(psi, ybar_x, residuals, estimate.tau, alpha, one_sided_kernel);
}

CovarianceEstimate olsqr_covariance(const StackedRegression& s, const QuantileFit& fit,
                                    double alpha, bool one_sided_kernel) {
    const long rows = s.rows();
    Eigen::MatrixXd design(rows, 1 + s.x.data.cols());
    design.col(0) = s.ybar;
    design.rightCols(s.x.data.cols()) = s.x.data;
    if (fit.coefficients.size() != design.cols()) {
        throw std::invalid_argument("olsqr_covariance expects a DnqrOlsQr fit");
    }
    Eigen::VectorXd residuals = s.y - design * fit.coefficients;
    return covariance_impl(design, design, residuals, fit.tau, alpha, one_sided_kernel);
}

}  // namespace netquant
