#pragma once

#include <Eigen/Dense>
#include <vector>

#include "netquant/ivqr.hpp"

namespace netquant {

/// Hall-Sheather bandwidth for the kernel Jacobian:
/// h = (NT)^{-1/3} rho_alpha^{2/3} [1.5 phi^2(z_tau) / (2 z_tau^2 + 1)]^{1/3}
/// with Phi(rho_alpha) = 1 - alpha/2 and z_tau = Phi^{-1}(tau).
double bandwidth_hs(long long n_total, double tau, double alpha);

/// Omega = tau(1-tau)/(NT) * Psi'Psi.
Eigen::MatrixXd estimate_omega(const Eigen::MatrixXd& psi, double tau);

/// J = (2 NT h)^{-1} sum over |u_it| <= h of Psi_it (Ybar_it, X_it'). The
/// strict one-sided indicator u_it <= h is available for comparison.
Eigen::MatrixXd estimate_jacobian(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& ybar_x,
                                  const Eigen::VectorXd& residuals, double h_b,
                                  bool one_sided = false, bool* near_singular = nullptr);

struct SandwichResult {
    Eigen::MatrixXd sigma_theta;
    Eigen::VectorXd std_errors;  // sqrt(diag(sigma)/NT)
};

/// Sigma = J^{-1} Omega J^{-T} when J is square; the least-squares reduction
/// (J'J)^{-1} J' Omega J (J'J)^{-1} when over-identified instruments make J
/// rectangular.
SandwichResult sandwich(const Eigen::MatrixXd& jacobian_hat, const Eigen::MatrixXd& omega_hat,
                        long long n_total);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
};

std::vector<Interval> confidence_interval(const Eigen::VectorXd& theta,
                                          const Eigen::VectorXd& std_errors, double alpha);

struct CovarianceEstimate {
    Eigen::MatrixXd omega_hat;
    Eigen::MatrixXd jacobian_hat;
    Eigen::MatrixXd sigma_theta;
    Eigen::VectorXd std_errors;
    double bandwidth = 0.0;
    bool near_singular = false;
};

/// Covariance of the IVQR theta = (gamma1, phi) with Psi = [R | X] and
/// step-3 residuals.
CovarianceEstimate ivqr_covariance(const StackedRegression& s, const IvqrEstimate& estimate,
                                   double alpha = 0.05, bool one_sided_kernel = false);

/// Same sandwich for the ordinary-QR fit of y on (Ybar_t, X); Psi equals the
/// regressors, so the Jacobian is square.
CovarianceEstimate olsqr_covariance(const StackedRegression& s, const QuantileFit& fit,
                                    double alpha = 0.05, bool one_sided_kernel = false);

}  // namespace netquant
