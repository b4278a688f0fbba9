#include "netquant/qr_solver.hpp"

#include <Eigen/QR>
#include <cmath>
#include <limits>

namespace netquant {

namespace {

void check_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::domain_error("tau must lie in (0,1), got " + std::to_string(tau));
    }
}

constexpr double kStepDamping = 0.9995;

}  // namespace

double check_loss(double u, double tau) {
    check_tau(tau);
    return u < 0.0 ? u * (tau - 1.0) : u * tau;
}

double qr_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tau,
                    const Eigen::VectorXd& beta) {
    check_tau(tau);
    if (x.rows() != y.size() || x.cols() != beta.size()) {
        throw std::invalid_argument("qr_objective: dimension mismatch");
    }
    Eigen::VectorXd r = y - x * beta;
    double total = 0.0;
    for (long i = 0; i < r.size(); ++i) {
        double u = r[i];
        total += u < 0.0 ? u * (tau - 1.0) : u * tau;
    }
    return total;
}

double QuantileFit::negative_fraction() const {
    if (residuals.size() == 0) return 0.0;
    long neg = 0;
    for (long i = 0; i < residuals.size(); ++i) neg += residuals[i] < 0.0;
    return static_cast<double>(neg) / static_cast<double>(residuals.size());
}

struct QrProblem::Impl {
    DesignMatrix x;
    SolverOptions opts;

    Eigen::MatrixXd xs;            // scaled design used by the solver
    Eigen::VectorXd col_shift;     // subtracted means (0 where not centered)
    Eigen::VectorXd col_scale;     // divisors (1 where not scaled)
    std::vector<bool> is_constant;
    long intercept_col = -1;       // first constant column, if any
    double intercept_value = 1.0;
    Eigen::LDLT<Eigen::MatrixXd> gram_ldlt;  // of xs'xs, for starting values

    void presolve();
    void rank_check() const;
    Eigen::VectorXd unscale(const Eigen::VectorXd& beta_scaled) const;
    QuantileFit solve(const Eigen::VectorXd& y, double tau,
                      const Eigen::VectorXd* warm_residuals) const;
};

void QrProblem::Impl::presolve() {
    const long n = x.data.rows();
    const long k = x.data.cols();
    xs = x.data;
    col_shift = Eigen::VectorXd::Zero(k);
    col_scale = Eigen::VectorXd::Ones(k);
    is_constant.assign(static_cast<std::size_t>(k), false);

    Eigen::VectorXd mean = xs.colwise().mean();
    for (long j = 0; j < k; ++j) {
        double ss = (xs.col(j).array() - mean[j]).square().sum();
        double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd <= 1e-14 * std::max(1.0, std::abs(mean[j]))) {
            is_constant[static_cast<std::size_t>(j)] = true;
            if (intercept_col < 0 && mean[j] != 0.0) {
                intercept_col = j;
                intercept_value = mean[j];
            }
        }
    }
    if (!opts.scaling) return;

    // Center only when an intercept column can absorb the shift.
    bool center = intercept_col >= 0;
    for (long j = 0; j < k; ++j) {
        if (is_constant[static_cast<std::size_t>(j)]) continue;
        double shift = center ? mean[j] : 0.0;
        double ss = (xs.col(j).array() - shift).square().sum();
        double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd <= 0.0) continue;
        col_shift[j] = shift;
        col_scale[j] = sd;
        xs.col(j) = (xs.col(j).array() - shift) / sd;
    }
}

void QrProblem::Impl::rank_check() const {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    qr.setThreshold(1e-10);
    long rank = qr.rank();
    if (rank < xs.cols()) {
        long offending = qr.colsPermutation().indices()[rank];
        throw SingularDesignError(offending, x.column_label(offending));
    }
}

Eigen::VectorXd QrProblem::Impl::unscale(const Eigen::VectorXd& beta_scaled) const {
    const long k = beta_scaled.size();
    Eigen::VectorXd beta(k);
    double shift_total = 0.0;
    for (long j = 0; j < k; ++j) {
        beta[j] = beta_scaled[j] / col_scale[j];
        shift_total += beta_scaled[j] * col_shift[j] / col_scale[j];
    }
    if (intercept_col >= 0) beta[intercept_col] -= shift_total / intercept_value;
    return beta;
}

QuantileFit QrProblem::Impl::solve(const Eigen::VectorXd& y, double tau,
                                   const Eigen::VectorXd* warm_residuals) const {
    check_tau(tau);
    const long n = xs.rows();
    const long k = xs.cols();
    if (y.size() != n) throw std::invalid_argument("qr_fit: response length != design rows");

    // Interior point on the bounded-dual LP: max y'a s.t. Xs'a = (1-tau) Xs'1,
    // 0 <= a <= 1, with Mehrotra predictor-corrector steps. The multiplier of
    // the equality constraint is the (scaled) coefficient vector.
    Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 - tau);
    Eigen::VectorXd s = Eigen::VectorXd::Constant(n, tau);

    Eigen::VectorXd beta(k);
    Eigen::VectorXd r(n);
    if (warm_residuals != nullptr && warm_residuals->size() == n) {
        beta = gram_ldlt.solve(xs.transpose() * (y - *warm_residuals));
    } else {
        beta = gram_ldlt.solve(xs.transpose() * y);
    }
    r = y - xs * beta;

    // z is complementary to a (binds where r < 0), w to s = 1 - a (binds where
    // r > 0); the stationarity condition is w - z = r.
    double floor = 1e-6 * std::max(1.0, r.cwiseAbs().mean());
    Eigen::VectorXd z = (-r).cwiseMax(0.0).array() + floor;
    Eigen::VectorXd w = z + r;

    auto primal_objective = [&](const Eigen::VectorXd& zz, const Eigen::VectorXd& ww) {
        return tau * ww.sum() + (1.0 - tau) * zz.sum();
    };

    QuantileFit best;
    best.tau = tau;
    best.objective = std::numeric_limits<double>::infinity();

    Eigen::VectorXd q(n), xi(n), rhs(k);
    Eigen::VectorXd dbeta_aff(k), da_aff(n), dz_aff(n), dw_aff(n);
    Eigen::VectorXd dbeta(k), da(n), dz(n), dw(n);
    Eigen::MatrixXd xq(n, k), m(k, k);

    int iter = 0;
    bool converged = false;
    for (; iter < opts.max_iter; ++iter) {
        double gap = a.dot(z) + s.dot(w);
        double obj = primal_objective(z, w);
        if (gap <= opts.tolerance * (1.0 + std::abs(obj))) {
            converged = true;
            break;
        }

        q = (z.cwiseQuotient(a) + w.cwiseQuotient(s)).cwiseMax(1e-300).cwiseInverse();
        xq = q.asDiagonal() * xs;
        m.noalias() = xq.transpose() * xs;

        Eigen::LDLT<Eigen::MatrixXd> fact(m);
        double ridge = 1e-13 * (m.trace() / static_cast<double>(k) + 1.0);
        while (fact.info() != Eigen::Success && ridge < 1e-4) {
            fact.compute(m + ridge * Eigen::MatrixXd::Identity(k, k));
            ridge *= 10.0;
        }
        if (fact.info() != Eigen::Success) break;

        // Predictor: pure Newton step toward complementarity.
        rhs.noalias() = xq.transpose() * r;
        dbeta_aff = fact.solve(rhs);
        da_aff = q.cwiseProduct(r - xs * dbeta_aff);
        dz_aff = -z - z.cwiseQuotient(a).cwiseProduct(da_aff);
        dw_aff = -w + w.cwiseQuotient(s).cwiseProduct(da_aff);

        auto primal_step = [&](const Eigen::VectorXd& delta) {
            double alpha = 1.0;
            for (long i = 0; i < n; ++i) {
                if (delta[i] < 0.0) alpha = std::min(alpha, -kStepDamping * a[i] / delta[i]);
                if (delta[i] > 0.0) alpha = std::min(alpha, kStepDamping * s[i] / delta[i]);
            }
            return alpha;
        };
        auto dual_step = [&](const Eigen::VectorXd& delta_z, const Eigen::VectorXd& delta_w) {
            double alpha = 1.0;
            for (long i = 0; i < n; ++i) {
                if (delta_z[i] < 0.0) alpha = std::min(alpha, -kStepDamping * z[i] / delta_z[i]);
                if (delta_w[i] < 0.0) alpha = std::min(alpha, -kStepDamping * w[i] / delta_w[i]);
            }
            return alpha;
        };

        double ap_aff = primal_step(da_aff);
        double ad_aff = dual_step(dz_aff, dw_aff);
        double gap_aff = (a + ap_aff * da_aff).dot(z + ad_aff * dz_aff) +
                         (s - ap_aff * da_aff).dot(w + ad_aff * dw_aff);
        double sigma = gap_aff / gap;
        sigma = sigma * sigma * sigma;
        double mu = sigma * gap / (2.0 * static_cast<double>(n));

        // Corrector with second-order complementarity terms.
        xi = (mu - da_aff.cwiseProduct(dz_aff).array()).matrix().cwiseQuotient(a) -
             (mu + da_aff.cwiseProduct(dw_aff).array()).matrix().cwiseQuotient(s) + r;
        rhs.noalias() = xq.transpose() * xi;
        dbeta = fact.solve(rhs);
        da = q.cwiseProduct(xi - xs * dbeta);
        dz = (mu - da_aff.cwiseProduct(dz_aff).array()).matrix().cwiseQuotient(a) -
             z.cwiseQuotient(a).cwiseProduct(da) - z;
        dw = (mu + da_aff.cwiseProduct(dw_aff).array()).matrix().cwiseQuotient(s) +
             w.cwiseQuotient(s).cwiseProduct(da) - w;

        double ap = primal_step(da);
        double ad = dual_step(dz, dw);
        if (!std::isfinite(ap) || !std::isfinite(ad)) break;

        a += ap * da;
        s = Eigen::VectorXd::Ones(n) - a;
        beta += ad * dbeta;
        z += ad * dz;
        w += ad * dw;
        r = y - xs * beta;

        double exact = 0.0;
        for (long i = 0; i < n; ++i) exact += check_loss(r[i], tau);
        if (exact < best.objective) {
            best.objective = exact;
            best.coefficients = beta;
            best.iterations = iter + 1;
        }
    }

    QuantileFit fit;
    fit.tau = tau;
    fit.iterations = iter;
    fit.converged = converged;
    Eigen::VectorXd beta_scaled = converged || best.coefficients.size() == 0 ? beta : best.coefficients;
    fit.coefficients = unscale(beta_scaled);
    fit.residuals = y - x.data * fit.coefficients;
    fit.objective = 0.0;
    for (long i = 0; i < n; ++i) fit.objective += check_loss(fit.residuals[i], tau);
    if (!converged) throw NonConvergenceError(std::move(fit), opts.max_iter);
    return fit;
}

QrProblem::QrProblem(DesignMatrix x, SolverOptions opts) : impl_(std::make_unique<Impl>()) {
    const long n = x.data.rows();
    const long k = x.data.cols();
    if (k < 1) throw std::invalid_argument("design matrix needs at least one column");
    if (n <= k) throw std::invalid_argument("quantile regression needs n > k");
    if (!x.data.allFinite()) throw std::invalid_argument("design matrix has non-finite entries");
    if (!x.names.empty() && static_cast<long>(x.names.size()) != k) {
        throw std::invalid_argument("column name count does not match design width");
    }
    impl_->x = std::move(x);
    impl_->opts = opts;
    impl_->presolve();
    impl_->rank_check();
    impl_->gram_ldlt.compute(impl_->xs.transpose() * impl_->xs);
}

QrProblem::~QrProblem() = default;
QrProblem::QrProblem(QrProblem&&) noexcept = default;
QrProblem& QrProblem::operator=(QrProblem&&) noexcept = default;

QuantileFit QrProblem::fit(const Eigen::VectorXd& y, double tau,
                           const Eigen::VectorXd* warm_residuals) const {
    return impl_->solve(y, tau, warm_residuals);
}

long QrProblem::rows() const { return impl_->x.data.rows(); }
long QrProblem::cols() const { return impl_->x.data.cols(); }
const DesignMatrix& QrProblem::design() const { return impl_->x; }

QuantileFit qr_fit(const DesignMatrix& x, const Eigen::VectorXd& y, double tau,
                   const SolverOptions& opts) {
    return QrProblem(x, opts).fit(y, tau);
}

}  // namespace netquant
