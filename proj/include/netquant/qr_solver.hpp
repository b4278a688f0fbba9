#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace netquant {

/// Dense design matrix with optional column names for error reporting.
struct DesignMatrix {
    Eigen::MatrixXd data;
    std::vector<std::string> names;

    long rows() const { return data.rows(); }
    long cols() const { return data.cols(); }
    std::string column_label(long j) const {
        if (j >= 0 && j < static_cast<long>(names.size())) return names[static_cast<std::size_t>(j)];
        return "column " + std::to_string(j);
    }
};

struct SolverOptions {
    double tolerance = 1e-8;  // relative duality gap
    int max_iter = 200;
    bool scaling = true;  // center/scale columns before solving
};

struct QuantileFit {
    double tau = 0.5;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd residuals;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;

    /// Share of strictly negative residuals; optimality keeps it in
    /// [tau - k/n, tau + k/n].
    double negative_fraction() const;
};

class SingularDesignError : public std::runtime_error {
public:
    SingularDesignError(long column, const std::string& label)
        : std::runtime_error("design matrix is rank deficient at " + label), column(column) {}

    long column = -1;
};

class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(QuantileFit best_iterate, int iterations)
        : std::runtime_error("quantile regression did not converge in " +
                             std::to_string(iterations) + " iterations"),
          best(std::move(best_iterate)) {}

    QuantileFit best;
};

/// rho_tau(u) = u * (tau - 1{u < 0}).
double check_loss(double u, double tau);

/// Check-loss objective at a fixed coefficient vector.
double qr_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tau,
                    const Eigen::VectorXd& beta);

/// One design, many responses. Scaling and the rank check run once in the
/// constructor; fit() runs the interior-point solve. An optional warm-start
/// residual vector (from a nearby response) cuts the iteration count roughly
/// in half on profile sweeps.
class QrProblem {
public:
    QrProblem(DesignMatrix x, SolverOptions opts = {});
    ~QrProblem();
    QrProblem(QrProblem&&) noexcept;
    QrProblem& operator=(QrProblem&&) noexcept;
    QrProblem(const QrProblem&) = delete;
    QrProblem& operator=(const QrProblem&) = delete;

    QuantileFit fit(const Eigen::VectorXd& y, double tau,
                    const Eigen::VectorXd* warm_residuals = nullptr) const;

    long rows() const;
    long cols() const;
    const DesignMatrix& design() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Single-shot quantile regression of y on x.
QuantileFit qr_fit(const DesignMatrix& x, const Eigen::VectorXd& y, double tau,
                   const SolverOptions& opts = {});

}  // namespace netquant
