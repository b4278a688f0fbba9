#include "netquant/panel_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "netquant/common.hpp"
#include "netquant/inference.hpp"

namespace netquant {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Reads a rectangular CSV of doubles with a header row.
Eigen::MatrixXd read_matrix_csv(const std::string& path, long rows, long cols,
                                const std::string& what) {
    std::ifstream in(path);
    if (!in) throw DataError(path, 0, 0, "cannot open " + what + " file");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path, 1, 1, "missing header");
    Eigen::MatrixXd out(rows, cols);
    long row = 0;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (row >= rows) throw DataError(path, lineno, 1, what + " has more rows than declared");
        std::stringstream ss(line);
        std::string cellstr;
        long col = 0;
        while (std::getline(ss, cellstr, ',')) {
            if (col >= cols) {
                throw DataError(path, lineno, col + 1, what + " has more columns than declared");
            }
            char* end = nullptr;
            double v = std::strtod(cellstr.c_str(), &end);
            if (end == cellstr.c_str() || *end != '\0') {
                throw DataError(path, lineno, col + 1, "unparsable number '" + cellstr + "'");
            }
            if (!std::isfinite(v)) {
                throw DataError(path, lineno, col + 1, "non-finite value");
            }
            out(row, col) = v;
            ++col;
        }
        if (col != cols) throw DataError(path, lineno, col, what + " has fewer columns than declared");
        ++row;
    }
    if (row != rows) throw DataError(path, lineno, 1, what + " has fewer rows than declared");
    return out;
}

void write_matrix_csv(const Eigen::MatrixXd& mat, const std::string& path,
                      const std::vector<std::string>& header) {
    std::ofstream out(path);
    if (!out) throw DataError(path, 0, 0, "cannot open file for writing");
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j > 0) out << ',';
        out << header[j];
    }
    out << '\n';
    for (long i = 0; i < mat.rows(); ++i) {
        for (long j = 0; j < mat.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_double(mat(i, j));
        }
        out << '\n';
    }
    if (!out) throw DataError(path, 0, 0, "write failure");
}

std::vector<std::string> indexed_header(const std::string& prefix, long count) {
    std::vector<std::string> header;
    header.reserve(static_cast<std::size_t>(count));
    for (long j = 1; j <= count; ++j) header.push_back(prefix + std::to_string(j));
    return header;
}

std::string resolve_path(const std::string& base_dir, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest m;
    m.y_path = j.value("y", m.y_path);
    m.z_path = j.value("z", m.z_path);
    m.f_path = j.value("f", m.f_path);
    m.network_path = j.value("network", m.network_path);
    m.n = j.at("n").get<int>();
    m.t = j.at("t").get<int>();
    m.q = j.at("q").get<int>();
    m.m = j.at("m").get<int>();
    m.p = j.value("p", 1);
    m.standardize_z = j.value("standardize_z", false);
    if (j.contains("z_names")) m.z_names = j.at("z_names").get<std::vector<std::string>>();
    return m;
}

nlohmann::json manifest_to_json(const DatasetManifest& m) {
    nlohmann::json j;
    j["y"] = m.y_path;
    j["z"] = m.z_path;
    j["f"] = m.f_path;
    j["network"] = m.network_path;
    j["n"] = m.n;
    j["t"] = m.t;
    j["q"] = m.q;
    j["m"] = m.m;
    j["p"] = m.p;
    j["standardize_z"] = m.standardize_z;
    if (!m.z_names.empty()) j["z_names"] = m.z_names;
    return j;
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path, 0, 0, "cannot open manifest");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path, 0, 0, std::string("manifest parse failure: ") + e.what());
    }
    DatasetManifest m;
    try {
        m = manifest_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path, 0, 0, std::string("manifest field failure: ") + e.what());
    }
    std::string dir = std::filesystem::path(path).parent_path().string();
    m.y_path = resolve_path(dir, m.y_path);
    m.z_path = resolve_path(dir, m.z_path);
    m.f_path = resolve_path(dir, m.f_path);
    m.network_path = resolve_path(dir, m.network_path);
    return m;
}

PanelData load_dataset(const DatasetManifest& manifest) {
    if (manifest.n < 1 || manifest.t < 1 || manifest.q < 1 || manifest.m < 1) {
        throw std::invalid_argument("manifest dimensions must be positive");
    }
    PanelData panel;
    panel.y = read_matrix_csv(manifest.y_path, manifest.n, manifest.t, "y");
    panel.z = read_matrix_csv(manifest.z_path, manifest.n, manifest.q, "z");
    panel.f = read_matrix_csv(manifest.f_path, manifest.t, manifest.m, "f");
    panel.network = row_normalize(load_edge_csv(manifest.network_path, manifest.n));
    panel.p = manifest.p;
    if (manifest.standardize_z) {
        for (long j = 0; j < panel.z.cols(); ++j) {
            double mean = panel.z.col(j).mean();
            double var = (panel.z.col(j).array() - mean).square().sum() /
                         static_cast<double>(panel.z.rows());
            if (var <= 0.0) {
                throw DataError(manifest.z_path, 0, j + 1,
                                "cannot standardize a zero-variance column");
            }
            panel.z.col(j) = (panel.z.col(j).array() - mean) / std::sqrt(var);
        }
    }
    return panel;
}

DatasetManifest save_dataset(const PanelData& panel, const std::string& dir,
                             const nlohmann::json* manifest_extras) {
    std::filesystem::create_directories(dir);
    DatasetManifest m;
    m.n = static_cast<int>(panel.y.rows());
    m.t = static_cast<int>(panel.y.cols());
    m.q = static_cast<int>(panel.z.cols());
    m.m = static_cast<int>(panel.f.cols());
    m.p = panel.p;

    std::filesystem::path base(dir);
    write_matrix_csv(panel.y, (base / m.y_path).string(), indexed_header("t", m.t));
    write_matrix_csv(panel.z, (base / m.z_path).string(), indexed_header("z", m.q));
    write_matrix_csv(panel.f, (base / m.f_path).string(), indexed_header("f", m.m));

    // Reconstruct the adjacency from the weights (nonzero row entries).
    AdjacencyMatrix adj;
    adj.n = panel.network.n;
    adj.out.resize(static_cast<std::size_t>(adj.n));
    for (int i = 0; i < adj.n; ++i) {
        for (const auto& [j, w] : panel.network.rows[static_cast<std::size_t>(i)]) {
            (void)w;
            adj.out[static_cast<std::size_t>(i)].push_back(j);
        }
    }
    save_edge_csv(adj, (base / m.network_path).string());

    nlohmann::json j = manifest_to_json(m);
    if (manifest_extras != nullptr) {
        for (auto it = manifest_extras->begin(); it != manifest_extras->end(); ++it) {
            j[it.key()] = it.value();
        }
    }
    std::ofstream out(base / "manifest.json");
    out << j.dump(2) << '\n';
    if (!out) throw DataError((base / "manifest.json").string(), 0, 0, "write failure");
    return m;
}

std::vector<SweepRow> quantile_sweep(const PanelData& panel, const std::vector<double>& taus,
                                     const GridSpec& grid, const SolverOptions& opts,
                                     double alpha) {
    if (taus.size() < 2) throw std::invalid_argument("quantile_sweep needs at least two taus");
    StackedRegression stacked = build_stacked(panel, panel.p);
    std::vector<SweepRow> rows;
    const auto& x_names = stacked.x.names;
    for (double tau : taus) {
        try {
            IvqrEstimate est = ivqr_estimate(stacked, tau, grid, {}, opts);
            CovarianceEstimate cov = ivqr_covariance(stacked, est, alpha);
            Eigen::VectorXd theta = est.theta();
            std::vector<Interval> ci = confidence_interval(theta, cov.std_errors, alpha);
            for (long j = 0; j < theta.size(); ++j) {
                SweepRow row;
                row.tau = tau;
                row.param = j == 0 ? "gamma1" : x_names[static_cast<std::size_t>(j - 1)];
                row.estimate = theta[j];
                row.lo = ci[static_cast<std::size_t>(j)].lo;
                row.hi = ci[static_cast<std::size_t>(j)].hi;
                row.ok = true;
                rows.push_back(std::move(row));
            }
        } catch (const std::exception& e) {
            SweepRow row;
            row.tau = tau;
            row.param = "-";
            row.reason = e.what();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "tau,param,estimate,lo,hi,reason\n";
    for (const auto& row : rows) {
        out << format_double(row.tau) << ',' << row.param << ',';
        if (row.ok) {
            out << format_double(row.estimate) << ',' << format_double(row.lo) << ','
                << format_double(row.hi);
        } else {
            out << ",,";
        }
        // Commas in failure reasons would break the column layout.
        std::string reason = row.reason;
        for (auto& c : reason) {
            if (c == ',' || c == '\n') c = ';';
        }
        out << ',' << reason << '\n';
    }
    return out.str();
}

}  // namespace netquant
