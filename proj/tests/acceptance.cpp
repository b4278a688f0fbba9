// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 3-5 share a single 200-replication desk-scale Monte Carlo
// run of the canonical Type-1 scenario.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "netquant/common.hpp"
#include "netquant/distributions.hpp"
#include "netquant/inference.hpp"
#include "netquant/ivqr.hpp"
#include "netquant/mc.hpp"
#include "netquant/panel_io.hpp"
#include "netquant/sim.hpp"
#include "oracles.hpp"

using namespace netquant;

namespace {

int failures = 0;

void report(int criterion, const std::string& what, bool ok) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, what.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int acceptance_threads() {
    if (const char* env = std::getenv("NETQUANT_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return resolve_threads(0);
}

// ---------------------------------------------------------------- criteria 1+2

void criterion_1_and_2() {
    auto start = std::chrono::steady_clock::now();
    Rng rng(20240811);
    const double taus[] = {0.1, 0.25, 0.5, 0.9};
    bool all_match = true;
    bool all_fraction = true;
    double worst_rel = 0.0;
    for (int inst = 0; inst < 500; ++inst) {
        long k = 1 + static_cast<long>(rng.bounded(3));
        long n = k + 2 + static_cast<long>(rng.bounded(40 - k - 1));
        DesignMatrix x;
        x.data.resize(n, k);
        x.data.col(0).setOnes();
        for (long j = 1; j < k; ++j) {
            for (long i = 0; i < n; ++i) x.data(i, j) = norm_quantile(rng.uniform01());
        }
        Eigen::VectorXd beta(k);
        for (long j = 0; j < k; ++j) beta[j] = 2.0 * rng.uniform01() - 1.0;
        Eigen::VectorXd y = x.data * beta;
        for (long i = 0; i < n; ++i) {
            double noise = norm_quantile(rng.uniform01());
            if (rng.uniform01() < 0.2) noise *= 5.0;
            y[i] += noise;
        }
        double tau = taus[rng.bounded(4)];
        QuantileFit fit = qr_fit(x, y, tau);
        double oracle = oracles::qr_objective_oracle(x.data, y, tau);
        double rel = std::abs(fit.objective - oracle) / (1.0 + std::abs(oracle));
        worst_rel = std::max(worst_rel, rel);
        all_match = all_match && rel <= 1e-8;
        all_fraction = all_fraction && oracles::fraction_invariant_holds(fit, k, n);
    }
    double secs = elapsed_s(start);
    report(1, "QR solver equals the basic-solution oracle on 500 instances (worst rel " +
                  std::to_string(worst_rel) + ", " + std::to_string(secs) + " s)",
           all_match && secs < 30.0);
    report(2, "quantile-fraction invariant holds on every acceptance fit", all_fraction);
}

// -------------------------------------------------------------- criteria 3-5

void criteria_3_to_5() {
    auto start = std::chrono::steady_clock::now();
    Scenario scenario = canonical_table1_scenario();
    int threads = acceptance_threads();
    std::printf("running the canonical Table-1 scenario (%d replications, %d threads)...\n",
                scenario.replications, threads);
    std::fflush(stdout);
    McReport mc = run_scenario(scenario, threads);
    std::printf("scenario finished in %.1f s\n", elapsed_s(start));

    auto rmse = [&](double tau, const char* param) {
        const McCell* cell = mc.find(EstimatorKind::Ivqr, tau, param);
        return cell != nullptr && cell->available ? cell->rmse_x100 : -1.0;
    };
    double g1_01 = rmse(0.1, "gamma1");
    double g1_05 = rmse(0.5, "gamma1");
    double g3_01 = rmse(0.1, "gamma3");
    report(3, "rmse_x100 gamma1@0.1 = " + std::to_string(g1_01) + " in [4.0, 6.7]",
           g1_01 >= 4.0 && g1_01 <= 6.7);
    report(3, "rmse_x100 gamma1@0.5 = " + std::to_string(g1_05) + " in [3.6, 5.9]",
           g1_05 >= 3.6 && g1_05 <= 5.9);
    report(3, "rmse_x100 gamma3@0.1 = " + std::to_string(g3_01) + " in [2.3, 3.8]",
           g3_01 >= 2.3 && g3_01 <= 3.8);

    bool coverage_ok = true;
    double cov_lo = 101.0, cov_hi = -1.0;
    for (double tau : scenario.taus) {
        for (const auto& param : ParamVector::names()) {
            const McCell* cell = mc.find(EstimatorKind::Ivqr, tau, param);
            bool ok = cell != nullptr && cell->available && cell->coverage_x100 >= 91.0 &&
                      cell->coverage_x100 <= 99.0;
            if (cell != nullptr && cell->available) {
                cov_lo = std::min(cov_lo, cell->coverage_x100);
                cov_hi = std::max(cov_hi, cell->coverage_x100);
            }
            coverage_ok = coverage_ok && ok;
        }
    }
    report(4, "IVQR coverage of every parameter at tau {0.1,0.5,0.9} in [91, 99] (range " +
                  std::to_string(cov_lo) + " to " + std::to_string(cov_hi) + ")",
           coverage_ok);

    const McCell* qr_g1 = mc.find(EstimatorKind::OrdinaryQr, 0.1, "gamma1");
    const McCell* iv_g1 = mc.find(EstimatorKind::Ivqr, 0.1, "gamma1");
    bool have = qr_g1 != nullptr && iv_g1 != nullptr && qr_g1->available && iv_g1->available;
    double qr_bias = have ? std::abs(qr_g1->bias_x100) : -1.0;
    double iv_bias = have ? std::abs(iv_g1->bias_x100) : -1.0;
    double ratio = have && iv_bias > 0.0 ? qr_bias / iv_bias : -1.0;
    report(5, "ordinary-QR |bias_x100(gamma1)|@0.1 = " + std::to_string(qr_bias) + " >= 4.0",
           have && qr_bias >= 4.0);
    report(5, "IVQR |bias_x100(gamma1)|@0.1 = " + std::to_string(iv_bias) + " <= 0.5",
           have && iv_bias <= 0.5);
    report(5, "bias ratio = " + std::to_string(ratio) + " >= 8", have && ratio >= 8.0);
    double qr_cov = have ? qr_g1->coverage_x100 : -1.0;
    report(5, "ordinary-QR coverage of gamma1@0.1 = " + std::to_string(qr_cov) + " <= 60",
           have && qr_cov <= 60.0);
}

// ---------------------------------------------------------------- criterion 6

void criterion_6() {
    InnovationDist normal = InnovationDist::std_normal();
    bool ok = true;
    for (int i = 1; i <= 9; ++i) {
        double tau = 0.1 * i;
        ParamVector p = true_quantile_coefs(tau, normal);
        ok = ok && std::abs(p.gamma1 - 0.1 * tau) <= 1e-12;
    }
    ParamVector mid = true_quantile_coefs(0.5, normal);
    ok = ok && std::abs(mid.gamma2 - 0.2) <= 1e-12 && std::abs(mid.gamma3 - 0.2) <= 1e-12;
    report(6, "true-coefficient identities gamma1(tau) = 0.1 tau, gamma2(0.5) = gamma3(0.5) = 0.2",
           ok);
}

// ---------------------------------------------------------------- criterion 7

void criterion_7() {
    bool residual_ok = true;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        Rng rng(seed);
        SimConfig config;
        config.n = 100;
        config.t = 150;
        config.network = row_normalize(gen_dyad(100, rng));
        config.seed = seed + 100;
        SimDiagnostics diag;
        simulate_panel(config, &diag);
        residual_ok = residual_ok && diag.max_structural_residual < 1e-9;
    }
    report(7, "simulated panels satisfy the structural identity to 1e-9", residual_ok);

    bool solve_ok = true;
    Rng rng(404);
    for (int rep = 0; rep < 10; ++rep) {
        int n = 10 + 4 * rep;  // up to 46
        Rng net_rng(500 + static_cast<std::uint64_t>(rep));
        NetworkWeights w = row_normalize(gen_dyad(n, net_rng));
        Eigen::VectorXd diag_a(n), rhs(n);
        for (int i = 0; i < n; ++i) {
            diag_a[i] = 0.9 * (rng.uniform01() - 0.5);
            rhs[i] = 2.0 * rng.uniform01() - 1.0;
        }
        Eigen::VectorXd fast = solve_contemporaneous(diag_a, w, rhs);
        Eigen::MatrixXd dense = Eigen::MatrixXd::Identity(n, n) -
                                diag_a.asDiagonal() * oracles::dense_weights(w);
        Eigen::VectorXd lu = dense.partialPivLu().solve(rhs);
        solve_ok = solve_ok && (fast - lu).cwiseAbs().maxCoeff() < 1e-9;
    }
    report(7, "contemporaneous solve matches the dense LU oracle at n <= 50", solve_ok);
}

// ---------------------------------------------------------------- criterion 8

void criterion_8() {
    const int n = 100;
    const int draws = 200;

    auto run_density = [&](auto generator, double expected, const char* label) {
        Rng rng(808);
        std::vector<double> densities;
        densities.reserve(draws);
        for (int d = 0; d < draws; ++d) densities.push_back(density(generator(rng)));
        double mean = 0.0;
        for (double v : densities) mean += v;
        mean /= draws;
        double var = 0.0;
        for (double v : densities) var += (v - mean) * (v - mean);
        double sd_mean = std::sqrt(var / (draws - 1.0) / draws);
        bool ok = std::abs(mean - expected) <= 3.0 * sd_mean;
        report(8, std::string(label) + " mean density " + std::to_string(mean) + " vs analytic " +
                      std::to_string(expected) + " within 3 sigma",
               ok);
    };

    run_density([&](Rng& rng) { return gen_dyad(n, rng); },
                2.0 / n + 0.5 * std::pow(n, -0.8), "Type 1 (dyad)");
    run_density([&](Rng& rng) { return gen_sbm(n, 5, rng); },
                0.2 * 0.3 * std::pow(n, -0.3) + 0.8 * 0.3 / n, "Type 2 (SBM L=5)");

    // Power law: in-degree support and truncated-zeta mean.
    const int pn = 500;
    double num = 0.0, den = 0.0;
    for (int k = 1; k < pn; ++k) {
        num += std::pow(k, -1.5);
        den += std::pow(k, -2.5);
    }
    double expected_mean = num / den;
    Rng rng(809);
    bool support_ok = true;
    double mean_sum = 0.0;
    for (int d = 0; d < 100; ++d) {
        AdjacencyMatrix a = gen_powerlaw(pn, 2.5, rng);
        std::vector<int> indeg(static_cast<std::size_t>(pn), 0);
        for (int i = 0; i < pn; ++i) {
            for (int j : a.out[static_cast<std::size_t>(i)]) ++indeg[static_cast<std::size_t>(j)];
        }
        long total = 0;
        for (int deg : indeg) {
            support_ok = support_ok && deg >= 1 && deg <= pn - 1;
            total += deg;
        }
        mean_sum += static_cast<double>(total) / pn;
    }
    double mean = mean_sum / 100.0;
    report(8, "Type 3 (power law) in-degrees in support, mean " + std::to_string(mean) +
                  " within 0.15 of truncated-zeta " + std::to_string(expected_mean),
           support_ok && std::abs(mean - expected_mean) <= 0.15);
}

// ---------------------------------------------------------------- criterion 9

void criterion_9() {
    Rng rng(909);
    bool omega_ok = true, jac_ok = true;
    for (int rep = 0; rep < 5; ++rep) {
        long rows = 100 + 80 * rep;  // up to 420
        Eigen::MatrixXd psi(rows, 4), yx(rows, 3);
        Eigen::VectorXd resid(rows);
        for (long i = 0; i < rows; ++i) {
            for (int j = 0; j < 4; ++j) psi(i, j) = norm_quantile(rng.uniform01());
            for (int j = 0; j < 3; ++j) yx(i, j) = norm_quantile(rng.uniform01());
            resid[i] = 0.2 * (rng.uniform01() - 0.5);
        }
        double tau = 0.25;
        double h = 0.06;

        Eigen::MatrixXd omega_naive = Eigen::MatrixXd::Zero(4, 4);
        for (long i = 0; i < rows; ++i) omega_naive += psi.row(i).transpose() * psi.row(i);
        omega_naive *= tau * (1.0 - tau) / static_cast<double>(rows);
        omega_ok = omega_ok && (estimate_omega(psi, tau) - omega_naive).cwiseAbs().maxCoeff() < 1e-12;

        Eigen::MatrixXd jac_naive = Eigen::MatrixXd::Zero(4, 3);
        for (long i = 0; i < rows; ++i) {
            if (std::abs(resid[i]) <= h) jac_naive += psi.row(i).transpose() * yx.row(i);
        }
        jac_naive /= 2.0 * static_cast<double>(rows) * h;
        jac_ok = jac_ok &&
                 (estimate_jacobian(psi, yx, resid, h) - jac_naive).cwiseAbs().maxCoeff() < 1e-12;
    }
    report(9, "omega and jacobian match double-loop oracles to 1e-12", omega_ok && jac_ok);

    double rho = oracles::bisect_inverse([](double x) { return norm_cdf(x); }, 0.975, -20.0, 20.0,
                                         1e-13);
    double expected = std::pow(1e4, -1.0 / 3.0) * std::pow(rho, 2.0 / 3.0) *
                      std::cbrt(1.5 * norm_pdf(0.0) * norm_pdf(0.0));
    double got = bandwidth_hs(10000, 0.5, 0.05);
    report(9, "bandwidth(NT=10000, tau=0.5, alpha=0.05) = " + std::to_string(got) +
                  " matches the formula to 1e-6",
           std::abs(got - expected) < 1e-6);
}

// --------------------------------------------------------------- criterion 10

void criterion_10() {
    Scenario s;
    s.n = 40;
    s.t = 40;
    s.replications = 8;
    s.taus = {0.25, 0.5};
    s.estimators = {EstimatorKind::Ivqr, EstimatorKind::OrdinaryQr};
    s.seed = 1010;
    s.grid.lower = -0.4;
    s.grid.upper = 0.6;
    s.grid.coarse_step = 0.02;
    s.grid.refine_rounds = 2;
    McReport r1 = run_scenario(s, 1);
    McReport r2 = run_scenario(s, 4);
    McReport r3 = run_scenario(s, 3);
    bool ok = report_csv(r1) == report_csv(r2) && report_csv(r1) == report_csv(r3);
    report(10, "Monte Carlo report bytes are identical at 1, 3, and 4 threads", ok);
}

}  // namespace

int main() {
    auto start = std::chrono::steady_clock::now();
    criterion_1_and_2();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criteria_3_to_5();
    std::printf("acceptance finished in %.1f s with %d failure(s)\n", elapsed_s(start), failures);
    return failures == 0 ? 0 : 1;
}
