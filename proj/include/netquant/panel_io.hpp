#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netquant/ivqr.hpp"
#include "netquant/sim.hpp"

namespace netquant {

/// File layout of a stored panel dataset. Paths are resolved relative to the
/// manifest's own directory when loaded from disk.
struct DatasetManifest {
    std::string y_path = "y.csv";
    std::string z_path = "z.csv";
    std::string f_path = "f.csv";
    std::string network_path = "network.csv";
    int n = 0;
    int t = 0;
    int q = 0;
    int m = 0;
    int p = 1;
    bool standardize_z = false;
    std::vector<std::string> z_names;  // labels only; loading is positional
};

DatasetManifest manifest_from_json(const nlohmann::json& j);
nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::string& path);

/// Loads and validates a dataset; dimensions must match the manifest exactly
/// and every cell must be finite. standardize_z maps each Z column to mean 0,
/// variance 1 (errors on constant columns).
PanelData load_dataset(const DatasetManifest& manifest);

/// Writes y/z/f/network CSVs plus manifest.json into dir with 17 significant
/// digits, so reloading is bit-exact. Returns the manifest that was written.
DatasetManifest save_dataset(const PanelData& panel, const std::string& dir,
                             const nlohmann::json* manifest_extras = nullptr);

struct SweepRow {
    double tau = 0.0;
    std::string param;
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::string reason;  // empty on success
    bool ok = false;
};

/// Per-tau IVQR estimates with pointwise confidence intervals; failed taus
/// produce a single row with the failure reason.
std::vector<SweepRow> quantile_sweep(const PanelData& panel, const std::vector<double>& taus,
                                     const GridSpec& grid = {}, const SolverOptions& opts = {},
                                     double alpha = 0.05);

/// Plot-ready CSV with the frozen header tau,param,estimate,lo,hi,reason.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace netquant
