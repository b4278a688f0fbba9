#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "netquant/qr_solver.hpp"
#include "netquant/sim.hpp"

namespace netquant {

/// One instrument column: W^power applied to Y_{t-lag}.
struct InstrumentTerm {
    int power = 2;
    int lag = 1;
};

using InstrumentSpec = std::vector<InstrumentTerm>;

InstrumentSpec default_instruments();  // W^2 Y_{t-1}, W^3 Y_{t-1}

/// Panel rows stacked node-major within period, period-ascending.
/// x columns: (1, Z_1..Z_q, Ybar_{t-1}, Y_{t-1}, F_t, F_{t-1}, ..., F_{t-p}).
struct StackedRegression {
    Eigen::VectorXd y;
    Eigen::VectorXd ybar;  // contemporaneous network term W Y_t per row
    DesignMatrix x;
    DesignMatrix r;
    std::vector<std::pair<int, int>> index;  // (node, period), periods 1-based
    int n_nodes = 0;
    int n_periods = 0;
    int first_period = 0;

    long rows() const { return y.size(); }
};

StackedRegression build_stacked(const PanelData& panel, int p,
                                const InstrumentSpec& instruments = default_instruments());

/// Step 1: ordinary QR of (y - gamma1 * ybar) on [x | r]. Returns the full
/// coefficient vector (phi, lambda) and the fit.
std::pair<Eigen::VectorXd, QuantileFit> step1_fit(const StackedRegression& s, double gamma1,
                                                  double tau, const SolverOptions& opts = {});

/// Coarse-to-fine search grid over the endogenous coefficient.
struct GridSpec {
    double lower = -0.98;
    double upper = 0.98;
    double coarse_step = 0.02;
    int refine_rounds = 3;
    double refine_factor = 10.0;
};

struct ProfilePoint {
    double gamma1 = 0.0;
    double lambda_norm = 0.0;  // lambda' A lambda
};

/// Evaluates the weighted instrument-coefficient norm on the coarse grid and
/// the refinement rounds; returns every evaluated point sorted by gamma1.
/// An empty weight matrix means A = I.
std::vector<ProfilePoint> profile_objective(const StackedRegression& s, double tau,
                                            const GridSpec& grid = {},
                                            const Eigen::MatrixXd& weight = {},
                                            const SolverOptions& opts = {});

struct IvqrDiagnostics {
    int profile_ties = 0;            // minimizers within 1e-12 of the minimum
    double lambda_norm_at_opt = 0.0;
    std::vector<std::string> warnings;
};

struct IvqrEstimate {
    double tau = 0.5;
    double gamma1_hat = 0.0;
    Eigen::VectorXd phi_hat;
    Eigen::VectorXd lambda_hat;
    std::vector<ProfilePoint> profile_trace;
    Eigen::VectorXd std_errors;  // (1 + k_x), NaN until inference fills them
    double objective = 0.0;
    std::vector<std::string> phi_names;
    IvqrDiagnostics diagnostics;

    /// theta = (gamma1, phi).
    Eigen::VectorXd theta() const;
};

IvqrEstimate ivqr_estimate(const StackedRegression& s, double tau, const GridSpec& grid = {},
                           const Eigen::MatrixXd& weight = {}, const SolverOptions& opts = {});

enum class RestrictedModel { Nqar, Nqarf, DnqrOlsQr };

/// NQAR: y on (1, Z, Ybar_{t-1}, Y_{t-1}); NQARF adds the factor columns;
/// DnqrOlsQr regresses y on (Ybar_t, full X) with no instruments.
QuantileFit fit_restricted(const StackedRegression& s, double tau, RestrictedModel model,
                           const SolverOptions& opts = {});

/// R^2(tau) = 1 - unrestricted / restricted check loss.
double goodness_of_fit(double unrestricted_objective, double restricted_objective);

/// Maps theta = (gamma1, phi) into the named parameter layout. Requires the
/// canonical shape q = 5, m = 2, p = 1.
ParamVector theta_to_params(const Eigen::VectorXd& theta);
ParamVector estimate_to_params(const IvqrEstimate& estimate);
ParamVector olsqr_to_params(const QuantileFit& fit);

}  // namespace netquant
