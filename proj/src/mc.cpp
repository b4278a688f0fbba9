#include "netquant/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "netquant/common.hpp"

namespace netquant {

namespace {

// Stream ids for the per-replication substreams; the fixed-network stream is
// shared by every replication when scenario.fixed_network is set.
constexpr std::uint64_t kFixedNetworkStream = 0x8000000000000000ull;

AdjacencyMatrix draw_network(const Scenario& scenario, Rng& rng) {
    switch (scenario.network_type) {
        case NetworkType::Dyad:
            return gen_dyad(scenario.n, rng);
        case NetworkType::Sbm:
            return gen_sbm(scenario.n, scenario.sbm_blocks, rng);
        case NetworkType::PowerLaw:
            return gen_powerlaw(scenario.n, scenario.powerlaw_exponent, rng);
    }
    throw std::logic_error("unknown network type");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string to_string(NetworkType type) {
    switch (type) {
        case NetworkType::Dyad: return "dyad";
        case NetworkType::Sbm: return "sbm";
        case NetworkType::PowerLaw: return "powerlaw";
    }
    return "unknown";
}

std::string to_string(EstimatorKind kind) {
    return kind == EstimatorKind::Ivqr ? "ivqr" : "ordinary_qr";
}

ReplicationResult run_replication(const Scenario& scenario, int rep_index) {
    ReplicationResult result;
    result.rep_index = rep_index;
    result.cells.assign(scenario.estimators.size(),
                        std::vector<RepCell>(scenario.taus.size()));

    Rng rng(scenario.seed, static_cast<std::uint64_t>(rep_index));
    NetworkWeights weights;
    if (scenario.fixed_network) {
        Rng net_rng(scenario.seed, kFixedNetworkStream);
        weights = row_normalize(draw_network(scenario, net_rng));
    } else {
        weights = row_normalize(draw_network(scenario, rng));
    }

    SimConfig config;
    config.n = scenario.n;
    config.t = scenario.t + 1;  // keep T usable cross-sections after the lag
    config.network = weights;
    config.dist = scenario.dist;
    config.burn_in = scenario.burn_in;

    StackedRegression stacked;
    try {
        PanelData panel = simulate_panel(config, rng);
        stacked = build_stacked(panel, config.p);
    } catch (const std::exception& e) {
        for (auto& row : result.cells) {
            for (auto& cell : row) cell.error = e.what();
        }
        return result;
    }

    for (std::size_t ti = 0; ti < scenario.taus.size(); ++ti) {
        double tau = scenario.taus[ti];
        Eigen::VectorXd truth = true_quantile_coefs(tau, scenario.dist).to_vector();
        for (std::size_t ei = 0; ei < scenario.estimators.size(); ++ei) {
            RepCell& cell = result.cells[ei][ti];
            try {
                Eigen::VectorXd estimate, se;
                if (scenario.estimators[ei] == EstimatorKind::Ivqr) {
                    IvqrEstimate est =
                        ivqr_estimate(stacked, tau, scenario.grid, {}, scenario.solver);
                    CovarianceEstimate cov = ivqr_covariance(stacked, est, scenario.alpha);
                    estimate = estimate_to_params(est).to_vector();
                    se = theta_to_params(cov.std_errors).to_vector();
                } else {
                    QuantileFit fit =
                        fit_restricted(stacked, tau, RestrictedModel::DnqrOlsQr, scenario.solver);
                    CovarianceEstimate cov = olsqr_covariance(stacked, fit, scenario.alpha);
                    estimate = olsqr_to_params(fit).to_vector();
                    se = theta_to_params(cov.std_errors).to_vector();
                }
                double zq = norm_quantile(1.0 - scenario.alpha / 2.0);
                cell.estimate = estimate;
                cell.std_error = se;
                cell.covered.resize(ParamVector::size());
                for (int j = 0; j < ParamVector::size(); ++j) {
                    cell.covered[static_cast<std::size_t>(j)] =
                        std::abs(estimate[j] - truth[j]) <= zq * se[j];
                }
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = e.what();
            }
        }
    }
    return result;
}

McReport aggregate(const Scenario& scenario, const std::vector<ReplicationResult>& results) {
    McReport report;
    report.scenario = scenario;
    const auto& names = ParamVector::names();

    for (std::size_t ei = 0; ei < scenario.estimators.size(); ++ei) {
        for (std::size_t ti = 0; ti < scenario.taus.size(); ++ti) {
            double tau = scenario.taus[ti];
            Eigen::VectorXd truth = true_quantile_coefs(tau, scenario.dist).to_vector();
            for (int j = 0; j < ParamVector::size(); ++j) {
                McCell cell;
                cell.estimator = to_string(scenario.estimators[ei]);
                cell.tau = tau;
                cell.param = names[static_cast<std::size_t>(j)];
                double sum_err = 0.0, sum_sq = 0.0;
                long covered = 0;
                int ok_count = 0, fail_count = 0;
                for (const auto& rep : results) {
                    const RepCell& rc = rep.cells[ei][ti];
                    if (!rc.ok) {
                        ++fail_count;
                        continue;
                    }
                    ++ok_count;
                    double err = rc.estimate[j] - truth[j];
                    sum_err += err;
                    sum_sq += err * err;
                    covered += rc.covered[static_cast<std::size_t>(j)];
                }
                cell.replications = ok_count;
                cell.failures = fail_count;
                if (ok_count > 0) {
                    cell.available = true;
                    cell.bias_x100 = 100.0 * sum_err / ok_count;
                    cell.rmse_x100 = 100.0 * std::sqrt(sum_sq / ok_count);
                    cell.coverage_x100 = 100.0 * static_cast<double>(covered) / ok_count;
                }
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

McReport run_scenario(const Scenario& scenario, int threads) {
    if (scenario.replications < 1) throw std::invalid_argument("replications must be >= 1");
    if (scenario.taus.empty()) throw std::invalid_argument("scenario needs at least one tau");
    for (double tau : scenario.taus) {
        if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("taus must lie in (0,1)");
    }
    std::vector<ReplicationResult> results(static_cast<std::size_t>(scenario.replications));
    parallel_for(scenario.replications, threads, [&](int rep) {
        results[static_cast<std::size_t>(rep)] = run_replication(scenario, rep);
    });
    return aggregate(scenario, results);
}

const McCell* McReport::find(EstimatorKind estimator, double tau, const std::string& param) const {
    std::string est = to_string(estimator);
    for (const auto& cell : cells) {
        if (cell.estimator == est && std::abs(cell.tau - tau) < 1e-12 && cell.param == param) {
            return &cell;
        }
    }
    return nullptr;
}

ComparisonSummary compare_estimators(const McReport& report) {
    ComparisonSummary summary;
    for (const auto& cell : report.cells) {
        if (cell.estimator != to_string(EstimatorKind::Ivqr) || !cell.available) continue;
        const McCell* qr = report.find(EstimatorKind::OrdinaryQr, cell.tau, cell.param);
        if (qr == nullptr || !qr->available) continue;
        ComparisonRow row;
        row.tau = cell.tau;
        row.param = cell.param;
        row.rmse_ratio = cell.rmse_x100 > 0.0
                             ? qr->rmse_x100 / cell.rmse_x100
                             : std::numeric_limits<double>::infinity();
        double denom = std::abs(cell.bias_x100);
        row.abs_bias_ratio = denom > 0.0 ? std::abs(qr->bias_x100) / denom
                                         : std::numeric_limits<double>::infinity();
        row.ordinary_coverage = qr->coverage_x100;
        row.low_coverage_flag = qr->coverage_x100 < 90.0;
        summary.rows.push_back(std::move(row));
    }
    return summary;
}

std::string report_csv(const McReport& report) {
    std::ostringstream out;
    out << "estimator,tau,param,rmse_x100,bias_x100,coverage_x100,replications,failures\n";
    for (const auto& cell : report.cells) {
        out << cell.estimator << ',' << format_double(cell.tau) << ',' << cell.param << ',';
        if (cell.available) {
            out << format_double(cell.rmse_x100) << ',' << format_double(cell.bias_x100) << ','
                << format_double(cell.coverage_x100);
        } else {
            out << ",,";
        }
        out << ',' << cell.replications << ',' << cell.failures << '\n';
    }
    return out.str();
}

nlohmann::json report_json(const McReport& report) {
    nlohmann::json j;
    j["scenario"] = scenario_to_json(report.scenario);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& cell : report.cells) {
        nlohmann::json row;
        row["estimator"] = cell.estimator;
        row["tau"] = cell.tau;
        row["param"] = cell.param;
        if (cell.available) {
            row["rmse_x100"] = cell.rmse_x100;
            row["bias_x100"] = cell.bias_x100;
            row["coverage_x100"] = cell.coverage_x100;
        } else {
            row["rmse_x100"] = nullptr;
            row["bias_x100"] = nullptr;
            row["coverage_x100"] = nullptr;
        }
        row["replications"] = cell.replications;
        row["failures"] = cell.failures;
        rows.push_back(std::move(row));
    }
    j["cells"] = std::move(rows);
    return j;
}

Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    s.n = j.value("n", s.n);
    s.t = j.value("t", s.t);
    std::string type = j.value("network_type", std::string("dyad"));
    if (type == "dyad") {
        s.network_type = NetworkType::Dyad;
    } else if (type == "sbm") {
        s.network_type = NetworkType::Sbm;
    } else if (type == "powerlaw") {
        s.network_type = NetworkType::PowerLaw;
    } else {
        throw std::invalid_argument("unknown network_type: " + type);
    }
    s.sbm_blocks = j.value("sbm_blocks", s.sbm_blocks);
    s.powerlaw_exponent = j.value("powerlaw_exponent", s.powerlaw_exponent);
    std::string dist = j.value("dist", std::string("normal"));
    if (dist == "normal") {
        s.dist = InnovationDist::std_normal();
    } else if (dist == "t") {
        s.dist = InnovationDist::student_t(j.value("df", 5));
    } else {
        throw std::invalid_argument("unknown dist: " + dist);
    }
    if (j.contains("taus")) s.taus = j.at("taus").get<std::vector<double>>();
    s.replications = j.value("replications", s.replications);
    if (j.contains("estimators")) {
        s.estimators.clear();
        for (const auto& name : j.at("estimators")) {
            std::string v = name.get<std::string>();
            if (v == "ivqr") {
                s.estimators.push_back(EstimatorKind::Ivqr);
            } else if (v == "ordinary_qr" || v == "qr") {
                s.estimators.push_back(EstimatorKind::OrdinaryQr);
            } else {
                throw std::invalid_argument("unknown estimator: " + v);
            }
        }
    }
    s.seed = j.value("seed", s.seed);
    s.fixed_network = j.value("fixed_network", s.fixed_network);
    s.alpha = j.value("alpha", s.alpha);
    s.burn_in = j.value("burn_in", s.burn_in);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        s.grid.lower = g.value("lower", s.grid.lower);
        s.grid.upper = g.value("upper", s.grid.upper);
        s.grid.coarse_step = g.value("coarse_step", s.grid.coarse_step);
        s.grid.refine_rounds = g.value("refine_rounds", s.grid.refine_rounds);
        s.grid.refine_factor = g.value("refine_factor", s.grid.refine_factor);
    }
    if (j.contains("solver")) {
        const auto& o = j.at("solver");
        s.solver.tolerance = o.value("tolerance", s.solver.tolerance);
        s.solver.max_iter = o.value("max_iter", s.solver.max_iter);
        s.solver.scaling = o.value("scaling", s.solver.scaling);
    }
    s.name = j.value("name", s.name);
    return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["n"] = s.n;
    j["t"] = s.t;
    j["network_type"] = to_string(s.network_type);
    if (s.network_type == NetworkType::Sbm) j["sbm_blocks"] = s.sbm_blocks;
    if (s.network_type == NetworkType::PowerLaw) j["powerlaw_exponent"] = s.powerlaw_exponent;
    j["dist"] = s.dist.kind == InnovationDist::Kind::StdNormal ? "normal" : "t";
    if (s.dist.kind == InnovationDist::Kind::StudentT) j["df"] = s.dist.df;
    j["taus"] = s.taus;
    j["replications"] = s.replications;
    nlohmann::json estimators = nlohmann::json::array();
    for (auto kind : s.estimators) estimators.push_back(to_string(kind));
    j["estimators"] = std::move(estimators);
    j["seed"] = s.seed;
    j["fixed_network"] = s.fixed_network;
    j["alpha"] = s.alpha;
    j["burn_in"] = s.burn_in;
    j["grid"] = {{"lower", s.grid.lower},
                 {"upper", s.grid.upper},
                 {"coarse_step", s.grid.coarse_step},
                 {"refine_rounds", s.grid.refine_rounds},
                 {"refine_factor", s.grid.refine_factor}};
    j["solver"] = {{"tolerance", s.solver.tolerance},
                   {"max_iter", s.solver.max_iter},
                   {"scaling", s.solver.scaling}};
    return j;
}

Scenario canonical_table1_scenario() {
    Scenario s;
    s.name = "table1_type1_normal_n100_t100";
    s.n = 100;
    s.t = 100;
    s.network_type = NetworkType::Dyad;
    s.dist = InnovationDist::std_normal();
    s.taus = {0.1, 0.5, 0.9};
    s.replications = 200;
    s.estimators = {EstimatorKind::Ivqr, EstimatorKind::OrdinaryQr};
    s.seed = 20240901;
    return s;
}

std::vector<BandCheck> check_table1_bands(const McReport& report) {
    std::vector<BandCheck> checks;
    auto require = [&](const char* label, const McCell* cell, auto value_of, double lo, double hi) {
        BandCheck check;
        check.description = label;
        if (cell != nullptr && cell->available) {
            check.value = value_of(*cell);
            check.passed = check.value >= lo && check.value <= hi;
        }
        checks.push_back(std::move(check));
    };
    auto rmse = [](const McCell& c) { return c.rmse_x100; };
    auto coverage = [](const McCell& c) { return c.coverage_x100; };
    auto abs_bias = [](const McCell& c) { return std::abs(c.bias_x100); };

    require("rmse_x100(gamma1) at tau=0.1 in [4.0, 6.7]",
            report.find(EstimatorKind::Ivqr, 0.1, "gamma1"), rmse, 4.0, 6.7);
    require("rmse_x100(gamma1) at tau=0.5 in [3.6, 5.9]",
            report.find(EstimatorKind::Ivqr, 0.5, "gamma1"), rmse, 3.6, 5.9);
    require("rmse_x100(gamma3) at tau=0.1 in [2.3, 3.8]",
            report.find(EstimatorKind::Ivqr, 0.1, "gamma3"), rmse, 2.3, 3.8);
    for (double tau : {0.1, 0.5, 0.9}) {
        for (const auto& param : ParamVector::names()) {
            std::string label = "coverage_x100(" + param + ") at tau=" + format_double(tau) +
                                " in [91, 99]";
            require(label.c_str(), report.find(EstimatorKind::Ivqr, tau, param), coverage, 91.0,
                    99.0);
        }
    }
    require("|bias_x100(gamma1)| ordinary QR at tau=0.1 >= 4.0",
            report.find(EstimatorKind::OrdinaryQr, 0.1, "gamma1"), abs_bias, 4.0, 1e9);
    require("|bias_x100(gamma1)| IVQR at tau=0.1 <= 0.5",
            report.find(EstimatorKind::Ivqr, 0.1, "gamma1"), abs_bias, 0.0, 0.5);
    const McCell* qr_bias = report.find(EstimatorKind::OrdinaryQr, 0.1, "gamma1");
    const McCell* iv_bias = report.find(EstimatorKind::Ivqr, 0.1, "gamma1");
    {
        BandCheck check;
        check.description = "bias ratio ordinary/IVQR for gamma1 at tau=0.1 >= 8";
        if (qr_bias != nullptr && iv_bias != nullptr && qr_bias->available &&
            iv_bias->available && std::abs(iv_bias->bias_x100) > 0.0) {
            check.value = std::abs(qr_bias->bias_x100) / std::abs(iv_bias->bias_x100);
            check.passed = check.value >= 8.0;
        }
        checks.push_back(std::move(check));
    }
    require("coverage_x100(gamma1) ordinary QR at tau=0.1 <= 60",
            report.find(EstimatorKind::OrdinaryQr, 0.1, "gamma1"), coverage, 0.0, 60.0);
    return checks;
}

}  // namespace netquant
