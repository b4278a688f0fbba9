#include <doctest.h>

#include <cmath>

#include "netquant/common.hpp"
#include "netquant/inference.hpp"
#include "netquant/ivqr.hpp"
#include "oracles.hpp"

using namespace netquant;

TEST_SUITE_BEGIN("ivqr");

namespace {

NetworkWeights dyad_weights(int n, std::uint64_t seed) {
    Rng rng(seed);
    return row_normalize(gen_dyad(n, rng));
}

PanelData paper_panel(int n, int t, std::uint64_t seed,
                      CoefficientModel coefs = CoefficientModel::paper()) {
    SimConfig config;
    config.n = n;
    config.t = t;
    config.network = dyad_weights(n, seed * 7919 + 1);
    config.seed = seed;
    config.coefs = std::move(coefs);
    return simulate_panel(config);
}

}  // namespace

TEST_CASE("build_stacked shapes, row order, and hand-checked instrument") {
    PanelData panel = paper_panel(12, 20, 3);
    StackedRegression s = build_stacked(panel, 1);
    CHECK(s.first_period == 2);
    CHECK(s.rows() == 12 * 19);
    CHECK(s.x.data.cols() == 12);  // 3 + q + (p+1)m
    CHECK(s.r.data.cols() == 2);
    CHECK(s.x.names[0] == "const");
    CHECK(s.x.names[6] == "ybar_lag1");
    CHECK(s.x.names[7] == "y_lag1");
    CHECK(s.x.names[8] == "f1_lag0");
    CHECK(s.x.names[11] == "f2_lag1");
    CHECK(s.index.front() == std::pair<int, int>(0, 2));
    CHECK(s.index[12] == std::pair<int, int>(0, 3));

    // Hand computation of the W^2 Y_{t-1} instrument on a 2-node panel.
    PanelData tiny;
    tiny.y.resize(2, 3);
    tiny.y << 1.0, 2.0, 3.0,
              4.0, 5.0, 6.0;
    tiny.z.resize(2, 1);
    tiny.z << 0.5, -0.5;
    tiny.f.resize(3, 1);
    tiny.f << 0.1, 0.2, 0.3;
    AdjacencyMatrix cyc;
    cyc.n = 2;
    cyc.out = {{1}, {0}};
    tiny.network = row_normalize(cyc);
    StackedRegression st = build_stacked(tiny, 1, {{2, 1}});
    // W is the swap, so W^2 = I: instrument = Y_{t-1} itself.
    CHECK(st.rows() == 4);
    CHECK(st.r.data(0, 0) == doctest::Approx(1.0));  // node 0, t=2: Y_{0,1}
    CHECK(st.r.data(1, 0) == doctest::Approx(4.0));
    CHECK(st.r.data(2, 0) == doctest::Approx(2.0));
    CHECK(st.r.data(3, 0) == doctest::Approx(5.0));
    // ybar of node 0 at t=2 is Y_{1,2}.
    CHECK(st.ybar[0] == doctest::Approx(5.0));
    CHECK(st.y[0] == doctest::Approx(2.0));

    // Too-short panels are rejected.
    PanelData shorty = tiny;
    shorty.y = tiny.y.leftCols(2);
    shorty.f = tiny.f.topRows(2);
    CHECK_THROWS_AS(build_stacked(shorty, 1), std::invalid_argument);

    // Non-finite cells are located.
    PanelData bad = tiny;
    bad.y(1, 2) = std::nan("");
    CHECK_THROWS_AS(build_stacked(bad, 1), DataError);
}

TEST_CASE("zero network produces degenerate instruments") {
    NetworkWeights zero;
    zero.n = 10;
    zero.rows.resize(10);
    zero.isolated_count = 10;
    SimConfig config;
    config.n = 10;
    config.t = 15;
    config.network = zero;
    config.seed = 4;
    PanelData panel = simulate_panel(config);
    StackedRegression s = build_stacked(panel, 1);
    CHECK(s.ybar.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.r.data.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(ivqr_estimate(s, 0.5), EstimationError);
}

TEST_CASE("step1 at gamma1=0 reduces to ordinary QR of y on (X, R)") {
    PanelData panel = paper_panel(20, 30, 5);
    StackedRegression s = build_stacked(panel, 1);
    auto [eta, fit] = step1_fit(s, 0.0, 0.5);
    DesignMatrix xr;
    xr.data.resize(s.rows(), s.x.data.cols() + s.r.data.cols());
    xr.data << s.x.data, s.r.data;
    QuantileFit direct = qr_fit(xr, s.y, 0.5);
    CHECK(fit.objective == doctest::Approx(direct.objective).epsilon(1e-12));
    CHECK(eta.size() == 14);
    CHECK_THROWS_AS(step1_fit(s, 1.5, 0.5), std::domain_error);
}

TEST_CASE("duplicated instrument column raises a singular-design error") {
    PanelData panel = paper_panel(20, 30, 6);
    StackedRegression s = build_stacked(panel, 1, {{2, 1}, {2, 1}});
    CHECK_THROWS_AS(step1_fit(s, 0.1, 0.5), SingularDesignError);
}

TEST_CASE("lambda is insignificant when the model is exactly specified at gamma1=0") {
    double zero = 0.0;
    PanelData panel =
        paper_panel(60, 80, 8, CoefficientModel::paper_with_overrides(&zero, nullptr, nullptr));
    StackedRegression s = build_stacked(panel, 1);
    auto [eta, fit] = step1_fit(s, 0.0, 0.5);
    Eigen::VectorXd lambda = eta.tail(2);

    // Standard errors from the square QR sandwich on the [x|r] design.
    Eigen::MatrixXd design(s.rows(), 14);
    design << s.x.data, s.r.data;
    double h = bandwidth_hs(s.rows(), 0.5, 0.05);
    Eigen::MatrixXd omega = estimate_omega(design, 0.5);
    Eigen::MatrixXd jac = estimate_jacobian(design, design, fit.residuals, h);
    SandwichResult sw = sandwich(jac, omega, s.rows());
    for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(lambda[j]) < 3.0 * sw.std_errors[12 + j]);
    }
}

TEST_CASE("profile trace: coverage, reproducibility, invariances") {
    PanelData panel = paper_panel(30, 40, 9);
    StackedRegression s = build_stacked(panel, 1);
    GridSpec grid;
    grid.lower = -0.3;
    grid.upper = 0.3;
    grid.coarse_step = 0.05;
    grid.refine_rounds = 2;

    std::vector<ProfilePoint> trace = profile_objective(s, 0.5, grid);
    // Every coarse point appears in the trace.
    for (double g = grid.lower; g <= grid.upper + 1e-12; g += grid.coarse_step) {
        bool found = false;
        for (const auto& pt : trace) found = found || std::abs(pt.gamma1 - g) < 1e-9;
        CHECK(found);
    }
    // Sorted ascending.
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i - 1].gamma1 < trace[i].gamma1);

    // Re-running step1 at a trace point reproduces its stored norm.
    const ProfilePoint& probe = trace[trace.size() / 3];
    auto [eta, fit] = step1_fit(s, probe.gamma1, 0.5);
    (void)fit;
    Eigen::VectorXd lambda = eta.tail(2);
    CHECK(lambda.squaredNorm() == doctest::Approx(probe.lambda_norm).epsilon(1e-10));

    // Weight c*I yields the same argmin, scaled norms.
    Eigen::MatrixXd weight = 3.0 * Eigen::MatrixXd::Identity(2, 2);
    std::vector<ProfilePoint> scaled = profile_objective(s, 0.5, grid, weight);
    REQUIRE(scaled.size() == trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        CHECK(scaled[i].gamma1 == doctest::Approx(trace[i].gamma1).epsilon(1e-12));
        CHECK(scaled[i].lambda_norm == doctest::Approx(3.0 * trace[i].lambda_norm).epsilon(1e-9));
    }

    CHECK_THROWS_AS(profile_objective(s, 0.5, grid, Eigen::MatrixXd::Zero(2, 2)),
                    std::invalid_argument);
    GridSpec badgrid;
    badgrid.lower = 0.5;
    badgrid.upper = -0.5;
    CHECK_THROWS_AS(profile_objective(s, 0.5, badgrid), std::invalid_argument);
}

TEST_CASE("estimator consistency (single large panel) and instrument rescaling") {
    PanelData panel = paper_panel(200, 201, 12);
    StackedRegression s = build_stacked(panel, 1);
    double tau = 0.5;
    IvqrEstimate est = ivqr_estimate(s, tau);
    double truth = 0.1 * tau;
    // Table-scale Monte Carlo SD for gamma1 at N=T=200 is about 0.027.
    CHECK(std::abs(est.gamma1_hat - truth) < 0.08);
    CHECK(est.phi_hat.size() == 12);
    CHECK(est.diagnostics.lambda_norm_at_opt < 1e-2);

    // Rescaling instruments leaves the profile argmin unchanged.
    StackedRegression scaled = s;
    scaled.r.data *= 37.0;
    IvqrEstimate est2 = ivqr_estimate(scaled, tau);
    CHECK(std::abs(est2.gamma1_hat - est.gamma1_hat) <= 2e-5 + 1e-12);
    for (long j = 0; j < est.phi_hat.size(); ++j) {
        CHECK(est2.phi_hat[j] == doctest::Approx(est.phi_hat[j]).epsilon(1e-6));
    }
}

TEST_CASE("restricted models nest and goodness of fit behaves") {
    PanelData panel = paper_panel(40, 50, 14);
    StackedRegression s = build_stacked(panel, 1);
    double tau = 0.3;
    QuantileFit nqar = fit_restricted(s, tau, RestrictedModel::Nqar);
    QuantileFit nqarf = fit_restricted(s, tau, RestrictedModel::Nqarf);
    QuantileFit olsqr = fit_restricted(s, tau, RestrictedModel::DnqrOlsQr);
    CHECK(nqar.coefficients.size() == 8);
    CHECK(nqarf.coefficients.size() == 12);
    CHECK(olsqr.coefficients.size() == 13);
    CHECK(nqarf.objective <= nqar.objective + 1e-8);
    CHECK(olsqr.objective <= nqarf.objective + 1e-8);

    // Zero factor columns are rank deficient and rejected outright.
    StackedRegression zf = s;
    zf.x.data.rightCols(4).setZero();
    CHECK_THROWS_AS(fit_restricted(zf, tau, RestrictedModel::Nqarf), SingularDesignError);

    CHECK(goodness_of_fit(nqarf.objective, nqar.objective) >= 0.0);
    CHECK(goodness_of_fit(5.0, 5.0) == 0.0);
    CHECK(goodness_of_fit(4.5, 5.0) == doctest::Approx(0.1));
    CHECK(goodness_of_fit(6.0, 5.0) < 0.0);  // flagged, not an error
    CHECK_THROWS_AS(goodness_of_fit(1.0, 0.0), EstimationError);

    // Nesting chain for the R^2 comparisons.
    IvqrEstimate est = ivqr_estimate(s, tau);
    double r2_nqar = goodness_of_fit(est.objective, nqar.objective);
    double r2_nqarf = goodness_of_fit(est.objective, nqarf.objective);
    CHECK(r2_nqar >= r2_nqarf - 1e-12);
}

TEST_CASE("theta layout maps into the named parameter vector") {
    Eigen::VectorXd theta(13);
    for (int i = 0; i < 13; ++i) theta[i] = i;
    ParamVector p = theta_to_params(theta);
    CHECK(p.gamma1 == 0.0);
    CHECK(p.gamma0 == 1.0);
    CHECK(p.alpha[0] == 2.0);
    CHECK(p.alpha[4] == 6.0);
    CHECK(p.gamma2 == 7.0);
    CHECK(p.gamma3 == 8.0);
    CHECK(p.beta[0] == 9.0);   // f1 lag 0 -> beta10
    CHECK(p.beta[1] == 11.0);  // f1 lag 1 -> beta11
    CHECK(p.beta[2] == 10.0);  // f2 lag 0 -> beta20
    CHECK(p.beta[3] == 12.0);  // f2 lag 1 -> beta21
    Eigen::VectorXd wrong(7);
    CHECK_THROWS_AS(theta_to_params(wrong), std::invalid_argument);
}

TEST_SUITE_END();
