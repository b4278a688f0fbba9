#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "netquant/distributions.hpp"
#include "netquant/network.hpp"
#include "netquant/rng.hpp"

namespace netquant {

/// One evaluation of the thirteen random-coefficient functions at u.
struct CoefficientDraw {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double gamma3 = 0.0;
    std::array<double, 5> alpha{};
    std::array<double, 4> beta{};  // (beta10, beta11, beta20, beta21)
};

/// Coefficient functions evaluated at u: gamma0 = u, gamma1 = 0.1 Phi(u),
/// gamma2 = 0.4 logistic(u), gamma3 = 0.4 Phi(u), alphas and betas scaled
/// normal/gamma CDFs. Gamma CDFs are 0 for u < 0.
CoefficientDraw coef_draw(double u);

/// Coefficient functions plus the suprema needed by the stationarity check.
/// Overrides replace individual gamma functions with constants (tests and
/// demonstration fixtures).
struct CoefficientModel {
    std::function<CoefficientDraw(double)> draw;
    double c1_bound = 0.1;   // sup |gamma1|
    double c23_bound = 0.8;  // sup |gamma2| + sup |gamma3|

    static CoefficientModel paper();
    static CoefficientModel paper_with_overrides(const double* gamma1, const double* gamma2,
                                                 const double* gamma3);
    static CoefficientModel custom_gamma1(std::function<double(double)> gamma1_fn,
                                          double gamma1_sup);
};

struct StationarityReport {
    double c1 = 0.0;
    double c23 = 0.0;
    bool c1_ok = false;
    bool c23_ok = false;
    bool sum_ok = false;

    double sum() const { return c1 + c23; }
    bool passed() const { return c1_ok && c23_ok && sum_ok; }
};

StationarityReport check_stationarity(double c1, double c23);

struct SimConfig {
    int n = 100;
    int t = 100;
    NetworkWeights network;
    InnovationDist dist;
    int q = 5;
    int m = 2;
    int p = 1;
    int burn_in = 100;
    std::uint64_t seed = 1;
    double z_correlation = 0.5;
    CoefficientModel coefs = CoefficientModel::paper();
};

struct PanelData {
    Eigen::MatrixXd y;  // N x T
    Eigen::MatrixXd z;  // N x q
    Eigen::MatrixXd f;  // T x m
    NetworkWeights network;
    int p = 1;
};

struct SimDiagnostics {
    double max_structural_residual = 0.0;  // max-norm of S_t Y_t - rhs_t over kept periods
};

/// Solves (I - diag(a1) W) y = rhs by the Neumann series; requires the
/// contraction max|a1| * ||W||_inf < 1.
Eigen::VectorXd solve_contemporaneous(const Eigen::VectorXd& a1_diag, const NetworkWeights& w,
                                      const Eigen::VectorXd& rhs);

/// Forward-simulates the panel; burn-in periods are discarded and Y starts
/// from zero. Identical config and seed give bitwise-identical output.
PanelData simulate_panel(const SimConfig& config, Rng& rng, SimDiagnostics* diag = nullptr);
PanelData simulate_panel(const SimConfig& config, SimDiagnostics* diag = nullptr);

/// True parameter values in estimator layout.
struct ParamVector {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double gamma3 = 0.0;
    std::array<double, 5> alpha{};
    std::array<double, 4> beta{};  // (beta10, beta11, beta20, beta21)

    static constexpr int size() { return 13; }
    static const std::vector<std::string>& names();
    Eigen::VectorXd to_vector() const;
    static ParamVector from_vector(const Eigen::VectorXd& v);
};

/// Coefficient functions evaluated at F^{-1}(tau): the tau-th conditional
/// quantile coefficients of the generated process.
ParamVector true_quantile_coefs(double tau, const InnovationDist& dist);

/// Closed-form solution of the two-node simultaneous system
/// y1 = g0(u1) + g1(u1) a12 y2, y2 = g0(u2) + g1(u2) a21 y1.
std::pair<double, double> endogeneity_demo(const std::function<double(double)>& gamma0_fn,
                                           const std::function<double(double)>& gamma1_fn,
                                           double a12, double a21, double u1, double u2);

}  // namespace netquant
