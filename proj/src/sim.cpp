#include "netquant/sim.hpp"

#include <cmath>
#include <stdexcept>

#include "netquant/common.hpp"

namespace netquant {

CoefficientDraw coef_draw(double u) {
    if (!std::isfinite(u)) throw std::domain_error("coef_draw requires finite u");
    auto gcdf = [](double x, double shape, double scale) {
        return x <= 0.0 ? 0.0 : gamma_cdf(x, shape, scale);
    };
    double phi = norm_cdf(u);
    CoefficientDraw d;
    d.gamma0 = u;
    d.gamma1 = 0.1 * phi;
    d.gamma2 = 0.4 * std::exp(u) / (1.0 + std::exp(u));
    d.gamma3 = 0.4 * phi;
    d.alpha = {0.5 * phi, 0.3 * gcdf(u, 1.0, 2.0), 0.2 * gcdf(u, 2.0, 2.0),
               0.25 * gcdf(u, 3.0, 2.0), 0.2 * gcdf(u, 2.0, 1.0)};
    d.beta = {0.1 * phi, 0.3 * gcdf(u, 2.0, 2.0), 0.2 * gcdf(u, 1.0, 2.0),
              0.3 * gcdf(u, 2.0, 1.0)};
    return d;
}

CoefficientModel CoefficientModel::paper() {
    CoefficientModel model;
    model.draw = [](double u) { return coef_draw(u); };
    model.c1_bound = 0.1;
    model.c23_bound = 0.8;
    return model;
}

CoefficientModel CoefficientModel::paper_with_overrides(const double* gamma1, const double* gamma2,
                                                        const double* gamma3) {
    CoefficientModel model = paper();
    double g1 = gamma1 ? *gamma1 : -1.0;
    double g2 = gamma2 ? *gamma2 : -1.0;
    double g3 = gamma3 ? *gamma3 : -1.0;
    bool has1 = gamma1 != nullptr, has2 = gamma2 != nullptr, has3 = gamma3 != nullptr;
    model.draw = [=](double u) {
        CoefficientDraw d = coef_draw(u);
        if (has1) d.gamma1 = g1;
        if (has2) d.gamma2 = g2;
        if (has3) d.gamma3 = g3;
        return d;
    };
    model.c1_bound = has1 ? std::abs(g1) : 0.1;
    model.c23_bound = (has2 ? std::abs(g2) : 0.4) + (has3 ? std::abs(g3) : 0.4);
    return model;
}

CoefficientModel CoefficientModel::custom_gamma1(std::function<double(double)> gamma1_fn,
                                                 double gamma1_sup) {
    CoefficientModel model = paper();
    model.draw = [fn = std::move(gamma1_fn)](double u) {
        CoefficientDraw d = coef_draw(u);
        d.gamma1 = fn(u);
        return d;
    };
    model.c1_bound = gamma1_sup;
    return model;
}

StationarityReport check_stationarity(double c1, double c23) {
    StationarityReport report;
    report.c1 = c1;
    report.c23 = c23;
    report.c1_ok = c1 < 1.0;
    report.c23_ok = c23 < 1.0;
    report.sum_ok = c1 + c23 < 1.0;
    return report;
}

Eigen::VectorXd solve_contemporaneous(const Eigen::VectorXd& a1_diag, const NetworkWeights& w,
                                      const Eigen::VectorXd& rhs) {
    if (a1_diag.size() != w.n || rhs.size() != w.n) {
        throw std::invalid_argument("solve_contemporaneous: dimension mismatch");
    }
    double contraction = a1_diag.cwiseAbs().maxCoeff() * w.inf_norm();
    if (!(contraction < 1.0)) {
        throw std::domain_error("solve_contemporaneous: contraction condition violated (" +
                                std::to_string(contraction) + " >= 1)");
    }
    Eigen::VectorXd y = rhs;
    Eigen::VectorXd term = rhs;
    for (int iter = 0; iter < 10000; ++iter) {
        term = a1_diag.cwiseProduct(apply_weights(w, term, 1));
        y += term;
        if (term.cwiseAbs().maxCoeff() < 1e-12) return y;
    }
    throw SimulationError(-1, "Neumann iteration did not converge");
}

PanelData simulate_panel(const SimConfig& config, Rng& rng, SimDiagnostics* diag) {
    if (config.n < 1 || config.t < 1) throw std::invalid_argument("simulate_panel: n, t must be positive");
    if (config.burn_in < 0) throw std::invalid_argument("simulate_panel: burn_in must be >= 0");
    if (config.network.n != config.n) throw std::invalid_argument("simulate_panel: network size != n");
    if (config.p != 1) throw std::invalid_argument("simulate_panel: only p = 1 factor lags supported");
    StationarityReport stat = check_stationarity(config.coefs.c1_bound, config.coefs.c23_bound);
    if (!stat.passed()) {
        throw std::domain_error("simulate_panel: stationarity bounds fail (c1 = " +
                                std::to_string(stat.c1) + ", c23 = " + std::to_string(stat.c23) + ")");
    }

    const int n = config.n;
    const int total = config.burn_in + config.t;

    Eigen::MatrixXd z(n, config.q);
    for (int i = 0; i < n; ++i) {
        std::vector<double> row = sample_node_covariates(config.q, config.z_correlation, rng);
        for (int l = 0; l < config.q; ++l) z(i, l) = row[static_cast<std::size_t>(l)];
    }

    PanelData panel;
    panel.z = std::move(z);
    panel.y.resize(n, config.t);
    panel.f.resize(config.t, config.m);
    panel.network = config.network;
    panel.p = config.p;

    Eigen::VectorXd f_prev(config.m), f_cur(config.m);
    for (int j = 0; j < config.m; ++j) f_prev[j] = sample_std_normal(rng);

    Eigen::VectorXd y_prev = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd a1(n), rhs(n), u_draws(n);
    double max_resid = 0.0;

    for (int period = 1; period <= total; ++period) {
        for (int j = 0; j < config.m; ++j) f_cur[j] = sample_std_normal(rng);
        for (int i = 0; i < n; ++i) u_draws[i] = sample(config.dist, rng);

        Eigen::VectorXd wy_prev = apply_weights(config.network, y_prev, 1);
        for (int i = 0; i < n; ++i) {
            CoefficientDraw d = config.coefs.draw(u_draws[i]);
            double a0 = d.gamma0;
            for (int l = 0; l < config.q; ++l) a0 += d.alpha[static_cast<std::size_t>(l)] * panel.z(i, l);
            double common = d.beta[0] * f_cur[0] + d.beta[2] * f_cur[1] +
                            d.beta[1] * f_prev[0] + d.beta[3] * f_prev[1];
            rhs[i] = a0 + d.gamma2 * wy_prev[i] + d.gamma3 * y_prev[i] + common;
            a1[i] = d.gamma1;
        }

        Eigen::VectorXd y_cur;
        try {
            y_cur = solve_contemporaneous(a1, config.network, rhs);
        } catch (const SimulationError&) {
            throw SimulationError(period, "Neumann iteration did not converge");
        }

        int kept = period - config.burn_in;
        if (kept >= 1) {
            // Structural identity check: S_t y_t must reproduce the rhs.
            Eigen::VectorXd lhs = y_cur - a1.cwiseProduct(apply_weights(config.network, y_cur, 1));
            max_resid = std::max(max_resid, (lhs - rhs).cwiseAbs().maxCoeff());
            panel.y.col(kept - 1) = y_cur;
            panel.f.row(kept - 1) = f_cur.transpose();
        }
        y_prev = y_cur;
        f_prev = f_cur;
    }

    if (!panel.y.allFinite() || !panel.f.allFinite() || !panel.z.allFinite()) {
        throw SimulationError(total, "simulation produced non-finite values");
    }
    if (diag != nullptr) diag->max_structural_residual = max_resid;
    return panel;
}

PanelData simulate_panel(const SimConfig& config, SimDiagnostics* diag) {
    Rng rng(config.seed);
    return simulate_panel(config, rng, diag);
}

const std::vector<std::string>& ParamVector::names() {
    static const std::vector<std::string> kNames = {
        "gamma0", "gamma1", "gamma2", "gamma3", "alpha1", "alpha2", "alpha3",
        "alpha4", "alpha5", "beta10", "beta11", "beta20", "beta21"};
    return kNames;
}

Eigen::VectorXd ParamVector::to_vector() const {
    Eigen::VectorXd v(size());
    v << gamma0, gamma1, gamma2, gamma3, alpha[0], alpha[1], alpha[2], alpha[3], alpha[4],
        beta[0], beta[1], beta[2], beta[3];
    return v;
}

ParamVector ParamVector::from_vector(const Eigen::VectorXd& v) {
    if (v.size() != size()) throw std::invalid_argument("ParamVector expects 13 components");
    ParamVector p;
    p.gamma0 = v[0];
    p.gamma1 = v[1];
    p.gamma2 = v[2];
    p.gamma3 = v[3];
    for (int i = 0; i < 5; ++i) p.alpha[static_cast<std::size_t>(i)] = v[4 + i];
    for (int i = 0; i < 4; ++i) p.beta[static_cast<std::size_t>(i)] = v[9 + i];
    return p;
}

ParamVector true_quantile_coefs(double tau, const InnovationDist& dist) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("true_quantile_coefs requires tau in (0,1)");
    CoefficientDraw d = coef_draw(dist.quantile(tau));
    ParamVector p;
    p.gamma0 = d.gamma0;
    p.gamma1 = d.gamma1;
    p.gamma2 = d.gamma2;
    p.gamma3 = d.gamma3;
    p.alpha = d.alpha;
    p.beta = d.beta;
    return p;
}

std::pair<double, double> endogeneity_demo(const std::function<double(double)>& gamma0_fn,
                                           const std::function<double(double)>& gamma1_fn,
                                           double a12, double a21, double u1, double u2) {
    double g0_1 = gamma0_fn(u1), g0_2 = gamma0_fn(u2);
    double g1_1 = gamma1_fn(u1), g1_2 = gamma1_fn(u2);
    double denom = 1.0 - a21 * a12 * g1_1 * g1_2;
    if (std::abs(denom) <= 1e-10) {
        throw std::domain_error("endogeneity_demo: singular two-node system");
    }
    double y1 = (g0_1 + g0_2 * g1_1 * a12) / denom;
    double y2 = (g0_2 + g0_1 * g1_2 * a21) / denom;
    return {y1, y2};
}

}  // namespace netquant
