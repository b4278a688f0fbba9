// netquant: simulate, estimate, and benchmark dynamic network quantile
// regressions from the command line.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "netquant/common.hpp"
#include "netquant/inference.hpp"
#include "netquant/ivqr.hpp"
#include "netquant/mc.hpp"
#include "netquant/panel_io.hpp"
#include "netquant/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitEstimation = 1;
constexpr int kExitUsage = 2;

int default_threads() {
    if (const char* env = std::getenv("NETQUANT_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return netquant::resolve_threads(0);
}

// Atomic write: temp file in the target directory, then rename.
void write_file_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        out << contents;
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::vector<double> parse_taus(const std::string& spec) {
    std::vector<double> taus;
    // Either "a:b:step" or a comma list.
    if (spec.find(':') != std::string::npos) {
        double lo = 0, hi = 0, step = 0;
        if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0) {
            throw CLI::ValidationError("--taus", "expected lo:hi:step or a comma list");
        }
        for (double t = lo; t <= hi + 1e-12; t += step) taus.push_back(std::min(t, hi));
    } else {
        std::stringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) taus.push_back(std::stod(tok));
        }
    }
    for (double t : taus) {
        if (!(t > 0.0 && t < 1.0)) throw CLI::ValidationError("--taus", "taus must lie in (0,1)");
    }
    if (taus.empty()) throw CLI::ValidationError("--taus", "no quantiles given");
    return taus;
}

json summary_line(const std::string& status, const std::vector<std::string>& outputs) {
    json j;
    j["status"] = status;
    j["outputs"] = outputs;
    return j;
}

struct GridFlags {
    double lower = -0.98, upper = 0.98, coarse_step = 0.02;
    int refine_rounds = 3;
    double refine_factor = 10.0;

    netquant::GridSpec spec() const { return {lower, upper, coarse_step, refine_rounds, refine_factor}; }
    void attach(CLI::App* cmd) {
        cmd->add_option("--grid-lower", lower, "Profile grid lower bound");
        cmd->add_option("--grid-upper", upper, "Profile grid upper bound");
        cmd->add_option("--grid-step", coarse_step, "Profile coarse grid step");
        cmd->add_option("--grid-refine-rounds", refine_rounds, "Refinement rounds");
        cmd->add_option("--grid-refine-factor", refine_factor, "Step divisor per refinement round");
    }
};

struct SolverFlags {
    double tolerance = 1e-8;
    int max_iter = 200;
    bool no_scaling = false;

    netquant::SolverOptions opts() const { return {tolerance, max_iter, !no_scaling}; }
    void attach(CLI::App* cmd) {
        cmd->add_option("--tol", tolerance, "Solver relative duality-gap tolerance");
        cmd->add_option("--max-iter", max_iter, "Solver iteration cap");
        cmd->add_flag("--no-scaling", no_scaling, "Disable design-column scaling");
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic network quantile regression toolkit"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    int threads = 0;
    std::string out_dir = ".";
    app.add_option("--seed", seed, "Experiment seed")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (default: NETQUANT_THREADS or all cores)");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();

    // generate-network
    auto* gen = app.add_subcommand("generate-network", "Draw a random network and write its edge list");
    std::string net_type = "dyad";
    int net_n = 0;
    int net_blocks = 5;
    double net_exponent = 2.5;
    gen->add_option("--type", net_type, "dyad | sbm | powerlaw")->capture_default_str();
    gen->add_option("--n", net_n, "Node count")->required();
    gen->add_option("--blocks", net_blocks, "Block count (sbm)")->capture_default_str();
    gen->add_option("--exponent", net_exponent, "Power-law exponent")->capture_default_str();

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate a panel dataset and write CSVs + manifest");
    int sim_n = 100, sim_t = 100, sim_burn = 100, sim_blocks = 5, sim_df = 5;
    double sim_exponent = 2.5;
    std::string sim_net_type = "dyad", sim_dist = "normal", sim_network_file;
    sim->add_option("--n", sim_n, "Node count")->capture_default_str();
    sim->add_option("--t", sim_t, "Panel length")->capture_default_str();
    sim->add_option("--burn-in", sim_burn, "Discarded leading periods")->capture_default_str();
    sim->add_option("--network-type", sim_net_type, "dyad | sbm | powerlaw")->capture_default_str();
    sim->add_option("--network", sim_network_file, "Edge CSV to use instead of drawing a network");
    sim->add_option("--blocks", sim_blocks, "Block count (sbm)")->capture_default_str();
    sim->add_option("--exponent", sim_exponent, "Power-law exponent")->capture_default_str();
    sim->add_option("--dist", sim_dist, "normal | t")->capture_default_str();
    sim->add_option("--df", sim_df, "Student-t degrees of freedom")->capture_default_str();

    // estimate
    auto* est = app.add_subcommand("estimate", "IVQR estimation from a dataset manifest");
    std::string est_manifest, est_taus = "0.1,0.5,0.9";
    double est_alpha = 0.05;
    bool est_strict_kernel = false;
    GridFlags est_grid;
    SolverFlags est_solver;
    est->add_option("--manifest", est_manifest, "Path to manifest.json")->required();
    est->add_option("--taus", est_taus, "Comma list or lo:hi:step")->capture_default_str();
    est->add_option("--alpha", est_alpha, "CI level alpha")->capture_default_str();
    est->add_flag("--one-sided-kernel", est_strict_kernel,
                  "Use the one-sided residual indicator in the kernel Jacobian");
    est_grid.attach(est);
    est_solver.attach(est);

    // montecarlo
    auto* mc = app.add_subcommand("montecarlo", "Run a Monte Carlo scenario");
    std::string mc_config;
    bool mc_check = false;
    mc->add_option("--config", mc_config, "Scenario JSON (defaults to the embedded desk-scale scenario)");
    mc->add_flag("--check", mc_check, "Validate the report against the embedded desk-scale bands");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "IVQR estimates across a quantile grid, as plot CSV");
    std::string sweep_manifest, sweep_taus = "0.1:0.9:0.1";
    double sweep_alpha = 0.05;
    GridFlags sweep_grid;
    SolverFlags sweep_solver;
    sweep->add_option("--manifest", sweep_manifest, "Path to manifest.json")->required();
    sweep->add_option("--taus", sweep_taus, "Comma list or lo:hi:step")->capture_default_str();
    sweep->add_option("--alpha", sweep_alpha, "CI level alpha")->capture_default_str();
    sweep_grid.attach(sweep);
    sweep_solver.attach(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (threads <= 0) threads = default_threads();

    try {
        if (gen->parsed()) {
            netquant::Rng rng(seed);
            netquant::AdjacencyMatrix adj;
            if (net_type == "dyad") {
                adj = netquant::gen_dyad(net_n, rng);
            } else if (net_type == "sbm") {
                adj = netquant::gen_sbm(net_n, net_blocks, rng);
            } else if (net_type == "powerlaw") {
                adj = netquant::gen_powerlaw(net_n, net_exponent, rng);
            } else {
                std::cerr << "unknown network type: " << net_type << "\n";
                return kExitUsage;
            }
            fs::path edges = fs::path(out_dir) / "network.csv";
            fs::create_directories(out_dir);
            netquant::save_edge_csv(adj, edges.string());
            json manifest;
            manifest["type"] = net_type;
            manifest["n"] = net_n;
            if (net_type == "sbm") manifest["blocks"] = net_blocks;
            if (net_type == "powerlaw") manifest["exponent"] = net_exponent;
            manifest["seed"] = seed;
            manifest["edges"] = adj.edge_count();
            manifest["density"] = netquant::density(adj);
            fs::path mpath = fs::path(out_dir) / "network_manifest.json";
            write_file_atomic(mpath, manifest.dump(2) + "\n");
            std::cout << summary_line("ok", {edges.string(), mpath.string()}).dump() << "\n";
            return kExitOk;
        }

        if (sim->parsed()) {
            netquant::Rng rng(seed);
            netquant::NetworkWeights weights;
            json gen_params;
            if (!sim_network_file.empty()) {
                weights = netquant::row_normalize(netquant::load_edge_csv(sim_network_file, sim_n));
                gen_params["network_file"] = sim_network_file;
            } else if (sim_net_type == "dyad") {
                weights = netquant::row_normalize(netquant::gen_dyad(sim_n, rng));
            } else if (sim_net_type == "sbm") {
                weights = netquant::row_normalize(netquant::gen_sbm(sim_n, sim_blocks, rng));
                gen_params["blocks"] = sim_blocks;
            } else if (sim_net_type == "powerlaw") {
                weights = netquant::row_normalize(netquant::gen_powerlaw(sim_n, sim_exponent, rng));
                gen_params["exponent"] = sim_exponent;
            } else {
                std::cerr << "unknown network type: " << sim_net_type << "\n";
                return kExitUsage;
            }
            gen_params["network_type"] = sim_network_file.empty() ? sim_net_type : "file";

            netquant::SimConfig config;
            config.n = sim_n;
            config.t = sim_t;
            config.network = weights;
            config.burn_in = sim_burn;
            config.seed = seed;
            if (sim_dist == "normal") {
                config.dist = netquant::InnovationDist::std_normal();
            } else if (sim_dist == "t") {
                config.dist = netquant::InnovationDist::student_t(sim_df);
            } else {
                std::cerr << "unknown distribution: " << sim_dist << "\n";
                return kExitUsage;
            }
            netquant::PanelData panel = netquant::simulate_panel(config, rng);
            json extras;
            extras["seed"] = seed;
            extras["dist"] = sim_dist;
            if (sim_dist == "t") extras["df"] = sim_df;
            extras["burn_in"] = sim_burn;
            extras["generator"] = gen_params;
            netquant::save_dataset(panel, out_dir, &extras);
            fs::path mpath = fs::path(out_dir) / "manifest.json";
            std::cout << summary_line("ok", {mpath.string()}).dump() << "\n";
            return kExitOk;
        }

        if (est->parsed()) {
            netquant::DatasetManifest manifest = netquant::load_manifest(est_manifest);
            netquant::PanelData panel = netquant::load_dataset(manifest);
            netquant::StackedRegression stacked = netquant::build_stacked(panel, panel.p);
            std::vector<double> taus = parse_taus(est_taus);
            json estimates = json::array();
            for (double tau : taus) {
                netquant::IvqrEstimate e =
                    netquant::ivqr_estimate(stacked, tau, est_grid.spec(), {}, est_solver.opts());
                netquant::CovarianceEstimate cov =
                    netquant::ivqr_covariance(stacked, e, est_alpha, est_strict_kernel);
                Eigen::VectorXd theta = e.theta();
                std::vector<netquant::Interval> ci =
                    netquant::confidence_interval(theta, cov.std_errors, est_alpha);

                json one;
                one["tau"] = tau;
                one["gamma1"] = e.gamma1_hat;
                json phi, se, lo, hi;
                se["gamma1"] = cov.std_errors[0];
                lo["gamma1"] = ci[0].lo;
                hi["gamma1"] = ci[0].hi;
                for (long j = 0; j < e.phi_hat.size(); ++j) {
                    const std::string& name = e.phi_names[static_cast<std::size_t>(j)];
                    phi[name] = e.phi_hat[j];
                    se[name] = cov.std_errors[j + 1];
                    lo[name] = ci[static_cast<std::size_t>(j + 1)].lo;
                    hi[name] = ci[static_cast<std::size_t>(j + 1)].hi;
                }
                one["phi"] = std::move(phi);
                one["lambda"] = std::vector<double>(e.lambda_hat.data(),
                                                    e.lambda_hat.data() + e.lambda_hat.size());
                one["se"] = std::move(se);
                one["ci"] = {{"lo", std::move(lo)}, {"hi", std::move(hi)}};
                json profile = json::array();
                for (const auto& pt : e.profile_trace) {
                    profile.push_back({pt.gamma1, pt.lambda_norm});
                }
                one["profile"] = std::move(profile);
                one["objective"] = e.objective;
                one["bandwidth"] = cov.bandwidth;
                // Quantile goodness of fit against the restricted models.
                netquant::QuantileFit nqar =
                    netquant::fit_restricted(stacked, tau, netquant::RestrictedModel::Nqar,
                                             est_solver.opts());
                netquant::QuantileFit nqarf =
                    netquant::fit_restricted(stacked, tau, netquant::RestrictedModel::Nqarf,
                                             est_solver.opts());
                one["r2_vs_nqar"] = netquant::goodness_of_fit(e.objective, nqar.objective);
                one["r2_vs_nqarf"] = netquant::goodness_of_fit(e.objective, nqarf.objective);
                estimates.push_back(std::move(one));
            }
            json out;
            out["estimates"] = std::move(estimates);
            fs::path path = fs::path(out_dir) / "estimate.json";
            write_file_atomic(path, out.dump(2) + "\n");
            std::cout << summary_line("ok", {path.string()}).dump() << "\n";
            return kExitOk;
        }

        if (mc->parsed()) {
            netquant::Scenario scenario = netquant::canonical_table1_scenario();
            if (!mc_config.empty()) {
                std::ifstream in(mc_config);
                if (!in) {
                    std::cerr << "cannot open scenario config: " << mc_config << "\n";
                    return kExitUsage;
                }
                json j;
                in >> j;
                scenario = netquant::scenario_from_json(j);
            }
            if (seed != 1) scenario.seed = seed;
            netquant::McReport report = netquant::run_scenario(scenario, threads);
            fs::path csv_path = fs::path(out_dir) / "report.csv";
            fs::path json_path = fs::path(out_dir) / "report.json";
            write_file_atomic(csv_path, netquant::report_csv(report));
            write_file_atomic(json_path, netquant::report_json(report).dump(2) + "\n");

            bool bands_ok = true;
            if (mc_check) {
                for (const auto& check : netquant::check_table1_bands(report)) {
                    std::fprintf(stdout, "%s %s (value %.4f)\n", check.passed ? "PASS" : "FAIL",
                                 check.description.c_str(), check.value);
                    bands_ok = bands_ok && check.passed;
                }
            }
            std::cout << summary_line(bands_ok ? "ok" : "band_check_failed",
                                      {csv_path.string(), json_path.string()})
                             .dump()
                      << "\n";
            return bands_ok ? kExitOk : kExitEstimation;
        }

        if (sweep->parsed()) {
            netquant::DatasetManifest manifest = netquant::load_manifest(sweep_manifest);
            netquant::PanelData panel = netquant::load_dataset(manifest);
            std::vector<double> taus = parse_taus(sweep_taus);
            std::vector<netquant::SweepRow> rows = netquant::quantile_sweep(
                panel, taus, sweep_grid.spec(), sweep_solver.opts(), sweep_alpha);
            fs::path path = fs::path(out_dir) / "sweep.csv";
            write_file_atomic(path, netquant::sweep_csv(rows));
            bool any_fail = false;
            for (const auto& row : rows) any_fail = any_fail || !row.ok;
            std::cout << summary_line(any_fail ? "partial" : "ok", {path.string()}).dump() << "\n";
            return any_fail ? kExitEstimation : kExitOk;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const netquant::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return kExitEstimation;
    }
    return kExitOk;
}
