#include "netquant/ivqr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "netquant/common.hpp"

namespace netquant {

InstrumentSpec default_instruments() { return {{2, 1}, {3, 1}}; }

StackedRegression build_stacked(const PanelData& panel, int p, const InstrumentSpec& instruments) {
    const int n = static_cast<int>(panel.y.rows());
    const int t_total = static_cast<int>(panel.y.cols());
    const int q = static_cast<int>(panel.z.cols());
    const int m = static_cast<int>(panel.f.cols());
    if (panel.network.n != n) throw std::invalid_argument("build_stacked: network size != N");
    if (panel.f.rows() != t_total) throw std::invalid_argument("build_stacked: factor rows != T");
    if (instruments.empty()) throw std::invalid_argument("build_stacked: empty instrument spec");
    for (const auto& term : instruments) {
        if (term.power < 1 || term.lag < 1) {
            throw std::invalid_argument("build_stacked: instrument powers and lags must be >= 1");
        }
    }

    int max_lag = 1;  // Y_{t-1} and Ybar_{t-1} regressors
    max_lag = std::max(max_lag, p);
    for (const auto& term : instruments) max_lag = std::max(max_lag, term.lag);
    const int first = 1 + max_lag;  // 1-based first usable period
    if (t_total < first + 1) {
        throw std::invalid_argument("build_stacked: panel too short for the requested lags");
    }

    const int n_periods = t_total - first + 1;
    const long rows = static_cast<long>(n) * n_periods;
    const int k_x = 3 + q + (p + 1) * m;
    const int n_r = static_cast<int>(instruments.size());

    StackedRegression s;
    s.n_nodes = n;
    s.n_periods = t_total;
    s.first_period = first;
    s.y.resize(rows);
    s.ybar.resize(rows);
    s.x.data.resize(rows, k_x);
    s.r.data.resize(rows, n_r);
    s.index.reserve(static_cast<std::size_t>(rows));

    s.x.names.clear();
    s.x.names.emplace_back("const");
    for (int l = 1; l <= q; ++l) s.x.names.push_back("z" + std::to_string(l));
    s.x.names.emplace_back("ybar_lag1");
    s.x.names.emplace_back("y_lag1");
    for (int lag = 0; lag <= p; ++lag) {
        for (int j = 1; j <= m; ++j) {
            s.x.names.push_back("f" + std::to_string(j) + "_lag" + std::to_string(lag));
        }
    }
    for (const auto& term : instruments) {
        s.r.names.push_back("w" + std::to_string(term.power) + "_y_lag" + std::to_string(term.lag));
    }

    long row = 0;
    for (int t = first; t <= t_total; ++t) {
        Eigen::VectorXd ybar_t = apply_weights(panel.network, panel.y.col(t - 1), 1);
        Eigen::VectorXd ybar_lag = apply_weights(panel.network, panel.y.col(t - 2), 1);

        std::map<std::pair<int, int>, Eigen::VectorXd> cache;
        auto w_power_lag = [&](int power, int lag) -> const Eigen::VectorXd& {
            auto key = std::make_pair(power, lag);
            auto it = cache.find(key);
            if (it == cache.end()) {
                it = cache.emplace(key, apply_weights(panel.network, panel.y.col(t - lag - 1), power))
                         .first;
            }
            return it->second;
        };

        for (int i = 0; i < n; ++i, ++row) {
            s.index.emplace_back(i, t);
            s.y[row] = panel.y(i, t - 1);
            s.ybar[row] = ybar_t[i];
            int c = 0;
            s.x.data(row, c++) = 1.0;
            for (int l = 0; l < q; ++l) s.x.data(row, c++) = panel.z(i, l);
            s.x.data(row, c++) = ybar_lag[i];
            s.x.data(row, c++) = panel.y(i, t - 2);
            for (int lag = 0; lag <= p; ++lag) {
                for (int j = 0; j < m; ++j) s.x.data(row, c++) = panel.f(t - 1 - lag, j);
            }
            for (int term = 0; term < n_r; ++term) {
                s.r.data(row, term) = w_power_lag(instruments[static_cast<std::size_t>(term)].power,
                                                  instruments[static_cast<std::size_t>(term)].lag)[i];
            }
        }
    }

    if (!s.y.allFinite() || !s.ybar.allFinite() || !s.x.data.allFinite() || !s.r.data.allFinite()) {
        for (long rix = 0; rix < s.rows(); ++rix) {
            bool bad = !std::isfinite(s.y[rix]) || !std::isfinite(s.ybar[rix]) ||
                       !s.x.data.row(rix).allFinite() || !s.r.data.row(rix).allFinite();
            if (bad) {
                auto [i, t] = s.index[static_cast<std::size_t>(rix)];
                throw DataError("panel", i, t, "non-finite value in stacked regression");
            }
        }
    }
    return s;
}

namespace {

DesignMatrix concat_designs(const DesignMatrix& x, const DesignMatrix& r) {
    DesignMatrix out;
    out.data.resize(x.data.rows(), x.data.cols() + r.data.cols());
    out.data << x.data, r.data;
    out.names = x.names;
    out.names.insert(out.names.end(), r.names.begin(), r.names.end());
    return out;
}

Eigen::MatrixXd resolve_weight(const Eigen::MatrixXd& weight, long n_r) {
    if (weight.size() == 0) return Eigen::MatrixXd::Identity(n_r, n_r);
    if (weight.rows() != n_r || weight.cols() != n_r) {
        throw std::invalid_argument("profile weight matrix has wrong dimensions");
    }
    if (!weight.isApprox(weight.transpose(), 1e-12)) {
        throw std::invalid_argument("profile weight matrix must be symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(weight);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("profile weight matrix must be positive definite");
    }
    return weight;
}

void check_instruments(const StackedRegression& s) {
    for (long j = 0; j < s.r.data.cols(); ++j) {
        double lo = s.r.data.col(j).minCoeff();
        double hi = s.r.data.col(j).maxCoeff();
        if (hi - lo <= 0.0) {
            throw EstimationError("degenerate instrument " + s.r.column_label(j) +
                                  ": zero variance");
        }
    }
}

}  // namespace

std::pair<Eigen::VectorXd, QuantileFit> step1_fit(const StackedRegression& s, double gamma1,
                                                  double tau, const SolverOptions& opts) {
    if (!(std::abs(gamma1) < 1.0)) {
        throw std::domain_error("step1_fit requires |gamma1| < 1");
    }
    DesignMatrix xr = concat_designs(s.x, s.r);
    QuantileFit fit = qr_fit(xr, s.y - gamma1 * s.ybar, tau, opts);
    return {fit.coefficients, fit};
}

std::vector<ProfilePoint> profile_objective(const StackedRegression& s, double tau,
                                            const GridSpec& grid, const Eigen::MatrixXd& weight,
                                            const SolverOptions& opts) {
    if (!(grid.lower < grid.upper) || !(grid.coarse_step > 0.0)) {
        throw std::invalid_argument("invalid grid specification");
    }
    const long n_r = s.r.data.cols();
    Eigen::MatrixXd a = resolve_weight(weight, n_r);

    QrProblem problem(concat_designs(s.x, s.r), opts);

    std::map<double, double> trace;  // gamma1 -> lambda norm
    Eigen::VectorXd warm;
    double warm_gamma = 0.0;
    bool have_warm = false;

    auto evaluate = [&](double g) {
        if (trace.count(g) != 0) return;
        Eigen::VectorXd resp = s.y - g * s.ybar;
        try {
            QuantileFit fit;
            if (have_warm) {
                // Shift the previous residuals to the new response; the
                // coefficients are unchanged by construction.
                Eigen::VectorXd shifted = warm - (g - warm_gamma) * s.ybar;
                fit = problem.fit(resp, tau, &shifted);
            } else {
                fit = problem.fit(resp, tau);
            }
            Eigen::VectorXd lambda = fit.coefficients.tail(n_r);
            trace[g] = lambda.dot(a * lambda);
            warm = fit.residuals;
            warm_gamma = g;
            have_warm = true;
        } catch (const NonConvergenceError&) {
            // Skip the point; the caller errors out only if all points fail.
        }
    };

    auto round_to_grid = [](double v) {
        // Kill accumulation noise so refinement reuses coarse evaluations.
        return std::round(v * 1e12) / 1e12;
    };

    std::vector<double> coarse;
    for (double g = grid.lower; g <= grid.upper + 1e-12; g += grid.coarse_step) {
        coarse.push_back(round_to_grid(std::min(g, grid.upper)));
    }
    for (double g : coarse) evaluate(g);
    if (trace.empty()) throw EstimationError("profile search failed at every grid point");

    auto argmin = [&]() {
        auto best = trace.begin();
        for (auto it = trace.begin(); it != trace.end(); ++it) {
            if (it->second < best->second) best = it;
        }
        return best->first;
    };

    double step = grid.coarse_step;
    for (int roundno = 0; roundno < grid.refine_rounds; ++roundno) {
        double center = argmin();
        double lo = std::max(grid.lower, center - 2.0 * step);
        double hi = std::min(grid.upper, center + 2.0 * step);
        step /= grid.refine_factor;
        have_warm = false;  // restart the sweep at the new bracket
        for (double g = lo; g <= hi + 1e-15; g += step) evaluate(round_to_grid(std::min(g, hi)));
    }

    std::vector<ProfilePoint> out;
    out.reserve(trace.size());
    for (const auto& [g, norm] : trace) out.push_back({g, norm});
    return out;
}

IvqrEstimate ivqr_estimate(const StackedRegression& s, double tau, const GridSpec& grid,
                           const Eigen::MatrixXd& weight, const SolverOptions& opts) {
    check_instruments(s);
    std::vector<ProfilePoint> trace = profile_objective(s, tau, grid, weight, opts);
    double best_norm = std::numeric_limits<double>::infinity();
    for (const auto& pt : trace) best_norm = std::min(best_norm, pt.lambda_norm);
    double gamma1 = std::numeric_limits<double>::quiet_NaN();
    int ties = 0;
    for (const auto& pt : trace) {
        if (pt.lambda_norm <= best_norm + 1e-12) {
            ++ties;
            if (std::isnan(gamma1)) gamma1 = pt.gamma1;  // trace is sorted: smallest first
        }
    }

    IvqrEstimate est;
    est.tau = tau;
    est.gamma1_hat = gamma1;
    est.profile_trace = std::move(trace);
    est.phi_names = s.x.names;
    est.diagnostics.profile_ties = ties - 1;

    auto [eta, step1] = step1_fit(s, gamma1, tau, opts);
    est.lambda_hat = eta.tail(s.r.data.cols());
    est.diagnostics.lambda_norm_at_opt = est.lambda_hat.squaredNorm();

    QuantileFit step3 = qr_fit(s.x, s.y - gamma1 * s.ybar, tau, opts);
    est.phi_hat = step3.coefficients;
    est.objective = step3.objective;
    est.std_errors = Eigen::VectorXd::Constant(1 + s.x.data.cols(),
                                               std::numeric_limits<double>::quiet_NaN());
    if (est.diagnostics.profile_ties > 0) {
        est.diagnostics.warnings.push_back("profile minimum tied at " +
                                           std::to_string(ties) + " grid points");
    }
    return est;
}

Eigen::VectorXd IvqrEstimate::theta() const {
    Eigen::VectorXd out(1 + phi_hat.size());
    out[0] = gamma1_hat;
    out.tail(phi_hat.size()) = phi_hat;
    return out;
}

QuantileFit fit_restricted(const StackedRegression& s, double tau, RestrictedModel model,
                           const SolverOptions& opts) {
    // Factor columns sit rightmost; everything before them is the NQAR block
    // (const, Z, ybar_lag, y_lag).
    long base_cols = s.x.data.cols();
    for (std::size_t j = 0; j < s.x.names.size(); ++j) {
        if (s.x.names[j].rfind("f", 0) == 0) {
            base_cols = static_cast<long>(j);
            break;
        }
    }

    DesignMatrix design;
    switch (model) {
        case RestrictedModel::Nqar:
            design.data = s.x.data.leftCols(base_cols);
            design.names.assign(s.x.names.begin(), s.x.names.begin() + base_cols);
            break;
        case RestrictedModel::Nqarf:
            design = s.x;
            break;
        case RestrictedModel::DnqrOlsQr: {
            design.data.resize(s.x.data.rows(), 1 + s.x.data.cols());
            design.data.col(0) = s.ybar;
            design.data.rightCols(s.x.data.cols()) = s.x.data;
            design.names.emplace_back("ybar");
            design.names.insert(design.names.end(), s.x.names.begin(), s.x.names.end());
            break;
        }
    }
    return qr_fit(design, s.y, tau, opts);
}

double goodness_of_fit(double unrestricted_objective, double restricted_objective) {
    if (!(restricted_objective > 0.0)) {
        throw EstimationError("goodness_of_fit: restricted objective must be positive");
    }
    return 1.0 - unrestricted_objective / restricted_objective;
}

ParamVector theta_to_params(const Eigen::VectorXd& theta) {
    if (theta.size() != 13) {
        throw std::invalid_argument("theta_to_params expects the canonical 13-parameter layout");
    }
    ParamVector p;
    p.gamma1 = theta[0];
    p.gamma0 = theta[1];
    for (int l = 0; l < 5; ++l) p.alpha[static_cast<std::size_t>(l)] = theta[2 + l];
    p.gamma2 = theta[7];
    p.gamma3 = theta[8];
    // x factor columns are (f1_lag0, f2_lag0, f1_lag1, f2_lag1); ParamVector
    // stores (beta10, beta11, beta20, beta21).
    p.beta[0] = theta[9];
    p.beta[1] = theta[11];
    p.beta[2] = theta[10];
    p.beta[3] = theta[12];
    return p;
}

ParamVector estimate_to_params(const IvqrEstimate& estimate) {
    return theta_to_params(estimate.theta());
}

ParamVector olsqr_to_params(const QuantileFit& fit) {
    return theta_to_params(fit.coefficients);
}

}  // namespace netquant
