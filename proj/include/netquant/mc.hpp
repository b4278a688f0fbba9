#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netquant/inference.hpp"
#include "netquant/ivqr.hpp"
#include "netquant/sim.hpp"

namespace netquant {

enum class NetworkType { Dyad, Sbm, PowerLaw };
enum class EstimatorKind { Ivqr, OrdinaryQr };

std::string to_string(NetworkType type);
std::string to_string(EstimatorKind kind);

struct Scenario {
    int n = 100;
    int t = 100;
    NetworkType network_type = NetworkType::Dyad;
    int sbm_blocks = 5;
    double powerlaw_exponent = 2.5;
    InnovationDist dist;
    std::vector<double> taus{0.1, 0.5, 0.9};
    int replications = 200;
    std::vector<EstimatorKind> estimators{EstimatorKind::Ivqr};
    std::uint64_t seed = 1;
    bool fixed_network = false;
    double alpha = 0.05;
    int burn_in = 100;
    GridSpec grid;
    SolverOptions solver;
    std::string name = "scenario";
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& scenario);

/// One (estimator, tau) outcome inside a replication.
struct RepCell {
    bool ok = false;
    std::string error;
    Eigen::VectorXd estimate;   // 13 params, estimator layout mapped to names
    Eigen::VectorXd std_error;  // 13
    std::vector<bool> covered;  // truth inside the (1-alpha) CI
};

struct ReplicationResult {
    int rep_index = 0;
    // cells[estimator][tau] in scenario order
    std::vector<std::vector<RepCell>> cells;
};

/// Fresh network and panel draw, estimation at every requested tau and
/// estimator. Deterministic in (scenario.seed, rep_index); failures are
/// recorded per cell, never thrown.
ReplicationResult run_replication(const Scenario& scenario, int rep_index);

struct McCell {
    std::string estimator;
    double tau = 0.0;
    std::string param;
    double rmse_x100 = 0.0;
    double bias_x100 = 0.0;
    double coverage_x100 = 0.0;
    int replications = 0;  // successes entering the moments
    int failures = 0;
    bool available = false;
};

struct McReport {
    Scenario scenario;
    std::vector<McCell> cells;

    const McCell* find(EstimatorKind estimator, double tau, const std::string& param) const;
};

McReport aggregate(const Scenario& scenario, const std::vector<ReplicationResult>& results);

/// Runs every replication (work pool of `threads`) and aggregates. The report
/// is byte-identical for a given scenario regardless of thread count.
McReport run_scenario(const Scenario& scenario, int threads = 0);

struct ComparisonRow {
    double tau = 0.0;
    std::string param;
    double rmse_ratio = 0.0;       // ordinary / IVQR
    double abs_bias_ratio = 0.0;   // |ordinary| / |IVQR|
    double ordinary_coverage = 0.0;
    bool low_coverage_flag = false;  // ordinary coverage < 90
};

struct ComparisonSummary {
    std::vector<ComparisonRow> rows;
};

ComparisonSummary compare_estimators(const McReport& report);

std::string report_csv(const McReport& report);
nlohmann::json report_json(const McReport& report);

/// The desk-scale reproduction scenario: Type 1 network, standard normal
/// innovations, N = T = 100, 200 replications, both estimators.
Scenario canonical_table1_scenario();

struct BandCheck {
    std::string description;
    double value = 0.0;
    bool passed = false;
};

/// Embedded desk-scale bands for the canonical scenario (gamma1/gamma3 RMSE,
/// coverage range, and the ordinary-QR bias contrast).
std::vector<BandCheck> check_table1_bands(const McReport& report);

}  // namespace netquant
