#include "srgmm/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace srgmm {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& path, int line, int column, const std::string& what) {
    std::ostringstream msg;
    msg << path << ":" << line;
    if (column > 0) msg << ":" << column;
    msg << ": " << what;
    throw std::invalid_argument(msg.str());
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') fields.back().pop_back();
    return fields;
}

double parse_double(const std::string& s, const std::string& path, int line, int column) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::invalid_argument&) {
        parse_fail(path, line, column, "expected a number, got '" + s + "'");
    } catch (const std::out_of_range&) {
        parse_fail(path, line, column, "number out of range: '" + s + "'");
    }
    if (used != s.size()) parse_fail(path, line, column, "trailing characters in number '" + s + "'");
    return v;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open file for writing: " + path);
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::string> row_ids;
    Eigen::MatrixXd values;  // numeric fields after the id column
};

// Reads a CSV whose first column is an id and remaining columns are numeric.
Table load_id_table(const std::string& path, bool header_has_id) {
    std::ifstream in = open_input(path);
    Table t;
    std::string line;
    int line_no = 0;

    if (!std::getline(in, line)) parse_fail(path, 1, 0, "empty file");
    ++line_no;
    t.header = split_csv_line(line);
    if (t.header.empty() || (header_has_id && t.header.size() < 2))
        parse_fail(path, line_no, 0, "header with too few columns");

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != t.header.size())
            parse_fail(path, line_no, 0, "expected " + std::to_string(t.header.size()) + " fields, got " +
                                             std::to_string(fields.size()));
        std::size_t first = header_has_id ? 1 : 0;
        if (header_has_id) t.row_ids.push_back(fields[0]);
        std::vector<double> row;
        row.reserve(fields.size() - first);
        for (std::size_t c = first; c < fields.size(); ++c)
            row.push_back(parse_double(fields[c], path, line_no, static_cast<int>(c + 1)));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) parse_fail(path, line_no, 0, "no data rows");

    t.values.resize(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) t.values(r, c) = rows[r][c];
    return t;
}

json theta_to_json(const ThetaParams& t) { return json::array({t.theta1, t.theta2, t.theta3}); }

ThetaParams theta_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("fit json: theta must be a 3-array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void ExpressionMatrix::validate() const {
    if (values.rows() != static_cast<Eigen::Index>(gene_ids.size()) ||
        values.cols() != static_cast<Eigen::Index>(spot_ids.size()))
        throw std::invalid_argument("ExpressionMatrix: id lengths do not match the value matrix");
    if (!values.allFinite()) throw std::invalid_argument("ExpressionMatrix: non-finite values");
}

void CountMatrix::validate() const {
    if (counts.rows() != static_cast<Eigen::Index>(gene_ids.size()) ||
        counts.cols() != static_cast<Eigen::Index>(spot_ids.size()))
        throw std::invalid_argument("CountMatrix: id lengths do not match the count matrix");
    for (Eigen::Index r = 0; r < counts.rows(); ++r)
        for (Eigen::Index c = 0; c < counts.cols(); ++c) {
            const double v = counts(r, c);
            if (!(v >= 0.0) || v != std::floor(v) || !std::isfinite(v))
                throw std::invalid_argument("CountMatrix: entries must be non-negative integers");
        }
    for (Eigen::Index c = 0; c < counts.cols(); ++c)
        if (counts.col(c).sum() <= 0.0)
            throw std::invalid_argument("CountMatrix: spot " + std::to_string(c) + " has zero total count");
}

ExpressionMatrix deviance_residuals(const CountMatrix& counts, std::vector<std::string>* warnings) {
    counts.validate();
    const Eigen::Index n_genes = counts.counts.rows();
    const Eigen::Index n_spots = counts.counts.cols();

    const Eigen::VectorXd spot_totals = counts.counts.colwise().sum();
    const double grand_total = spot_totals.sum();

    ExpressionMatrix out;
    out.gene_ids = counts.gene_ids;
    out.spot_ids = counts.spot_ids;
    out.values.resize(n_genes, n_spots);

    for (Eigen::Index g = 0; g < n_genes; ++g) {
        const double gene_total = counts.counts.row(g).sum();
        if (gene_total == 0.0) {
            out.values.row(g).setZero();
            if (warnings)
                warnings->push_back("gene " + counts.gene_ids[g] + " has zero total count; residuals set to 0");
            continue;
        }
        const double pi_hat = gene_total / grand_total;
        for (Eigen::Index s = 0; s < n_spots; ++s) {
            const double y = counts.counts(g, s);
            const double n = spot_totals[s];
            const double mu = n * pi_hat;
            double dev = 0.0;
            if (y > 0.0) dev += y * std::log(y / mu);
            if (n - y > 0.0) dev += (n - y) * std::log((n - y) / (n * (1.0 - pi_hat)));
            const double sign = y > mu ? 1.0 : (y < mu ? -1.0 : 0.0);
            out.values(g, s) = sign * std::sqrt(2.0 * std::max(0.0, dev));
        }
    }
    return out;
}

Eigen::VectorXd gene_deviances(const CountMatrix& counts) {
    const ExpressionMatrix residuals = deviance_residuals(counts);
    return residuals.values.array().square().rowwise().sum();
}

CountMatrix select_top_deviance(const CountMatrix& counts, int top_n) {
    counts.validate();
    const int n_genes = static_cast<int>(counts.counts.rows());
    if (top_n < 1 || top_n > n_genes)
        throw std::invalid_argument("select_top_deviance: top_n must lie in [1, #genes]");

    const Eigen::VectorXd dev = gene_deviances(counts);
    std::vector<int> idx(n_genes);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (dev[a] != dev[b]) return dev[a] > dev[b];
        return counts.gene_ids[a] < counts.gene_ids[b];
    });

    CountMatrix out;
    out.spot_ids = counts.spot_ids;
    out.counts.resize(top_n, counts.counts.cols());
    for (int r = 0; r < top_n; ++r) {
        out.counts.row(r) = counts.counts.row(idx[r]);
        out.gene_ids.push_back(counts.gene_ids[idx[r]]);
    }
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CoordsTable load_coords_csv(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) parse_fail(path, 1, 0, "empty file");
    const auto header = split_csv_line(line);

    bool has_id;
    if (header.size() == 3 && (header[0] == "id" || header[0] == "spot_id")) {
        has_id = true;
    } else if (header.size() == 2 && header[0] == "x") {
        has_id = false;
    } else {
        parse_fail(path, 1, 0, "expected header 'id,x,y' or 'x,y'");
    }

    CoordsTable t;
    std::vector<std::array<double, 2>> pts;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            parse_fail(path, line_no, 0, "wrong number of fields");
        const std::size_t off = has_id ? 1 : 0;
        if (has_id) t.ids.push_back(fields[0]);
        pts.push_back({parse_double(fields[off], path, line_no, static_cast<int>(off + 1)),
                       parse_double(fields[off + 1], path, line_no, static_cast<int>(off + 2))});
    }
    if (pts.empty()) parse_fail(path, line_no, 0, "no coordinates");
    t.coords.resize(pts.size(), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        t.coords(i, 0) = pts[i][0];
        t.coords(i, 1) = pts[i][1];
    }
    return t;
}

void save_coords_csv(const std::string& path, const Eigen::Ref<const Eigen::MatrixX2d>& coords,
                     const std::vector<std::string>& ids) {
    std::ofstream out = open_output(path);
    out << "id,x,y\n";
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
        const std::string id = ids.empty() ? "s" + std::to_string(i) : ids[i];
        out << id << ',' << format_double(coords(i, 0)) << ',' << format_double(coords(i, 1)) << '\n';
    }
}

ExpressionMatrix load_expression_csv(const std::string& path) {
    Table t = load_id_table(path, true);
    ExpressionMatrix m;
    m.values = std::move(t.values);
    m.gene_ids = std::move(t.row_ids);
    m.spot_ids.assign(t.header.begin() + 1, t.header.end());
    m.validate();
    return m;
}

void save_expression_csv(const std::string& path, const ExpressionMatrix& m) {
    m.validate();
    std::ofstream out = open_output(path);
    out << "id";
    for (const auto& s : m.spot_ids) out << ',' << s;
    out << '\n';
    for (Eigen::Index g = 0; g < m.values.rows(); ++g) {
        out << m.gene_ids[g];
        for (Eigen::Index s = 0; s < m.values.cols(); ++s) out << ',' << format_double(m.values(g, s));
        out << '\n';
    }
}

namespace {

CountMatrix load_counts_mtx(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    int line_no = 0;

    if (!std::getline(in, line)) parse_fail(path, 1, 0, "empty file");
    ++line_no;
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket" || object != "matrix" || format != "coordinate" ||
        (field != "integer" && field != "real") || symmetry != "general")
        parse_fail(path, line_no, 0, "expected '%%MatrixMarket matrix coordinate integer|real general'");

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line[0] != '%') break;
    }
    std::istringstream dims(line);
    Eigen::Index rows = 0, cols = 0;
    long long nnz = 0;
    if (!(dims >> rows >> cols >> nnz) || rows < 1 || cols < 1 || nnz < 0)
        parse_fail(path, line_no, 0, "bad dimension line");

    CountMatrix m;
    m.counts = Eigen::MatrixXd::Zero(rows, cols);
    for (long long e = 0; e < nnz; ++e) {
        if (!std::getline(in, line)) parse_fail(path, line_no + 1, 0, "unexpected end of file");
        ++line_no;
        std::istringstream entry(line);
        Eigen::Index r = 0, c = 0;
        double v = 0.0;
        if (!(entry >> r >> c >> v)) parse_fail(path, line_no, 0, "bad entry line");
        if (r < 1 || r > rows || c < 1 || c > cols) parse_fail(path, line_no, 0, "entry index out of range");
        m.counts(r - 1, c - 1) = v;
    }
    for (Eigen::Index g = 0; g < rows; ++g) m.gene_ids.push_back("g" + std::to_string(g));
    for (Eigen::Index s = 0; s < cols; ++s) m.spot_ids.push_back("s" + std::to_string(s));
    m.validate();
    return m;
}

}  // namespace

CountMatrix load_counts(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".mtx") return load_counts_mtx(path);
    Table t = load_id_table(path, true);
    CountMatrix m;
    m.counts = std::move(t.values);
    m.gene_ids = std::move(t.row_ids);
    m.spot_ids.assign(t.header.begin() + 1, t.header.end());
    m.validate();
    return m;
}

void save_counts_mtx(const std::string& path, const CountMatrix& m) {
    m.validate();
    std::ofstream out = open_output(path);
    long long nnz = 0;
    for (Eigen::Index r = 0; r < m.counts.rows(); ++r)
        for (Eigen::Index c = 0; c < m.counts.cols(); ++c)
            if (m.counts(r, c) != 0.0) ++nnz;
    out << "%%MatrixMarket matrix coordinate integer general\n";
    out << m.counts.rows() << ' ' << m.counts.cols() << ' ' << nnz << '\n';
    for (Eigen::Index r = 0; r < m.counts.rows(); ++r)
        for (Eigen::Index c = 0; c < m.counts.cols(); ++c)
            if (m.counts(r, c) != 0.0)
                out << (r + 1) << ' ' << (c + 1) << ' ' << static_cast<long long>(m.counts(r, c)) << '\n';
}

std::vector<int> load_labels_csv(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) parse_fail(path, 1, 0, "empty file");
    const auto header = split_csv_line(line);
    int col = -1;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == "label") col = static_cast<int>(c);
    if (col < 0) parse_fail(path, 1, 0, "no 'label' column in header");

    std::vector<int> labels;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) parse_fail(path, line_no, 0, "wrong number of fields");
        labels.push_back(static_cast<int>(parse_double(fields[col], path, line_no, col + 1)));
    }
    if (labels.empty()) parse_fail(path, line_no, 0, "no labels");
    return labels;
}

void save_labels_csv(const std::string& path, const std::vector<int>& labels,
                     const std::vector<std::string>& ids) {
    std::ofstream out = open_output(path);
    out << "id,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::string id = ids.empty() ? "g" + std::to_string(i) : ids[i];
        out << id << ',' << labels[i] << '\n';
    }
}

std::vector<std::string> load_gene_list(const std::string& path) {
    std::ifstream in = open_input(path);
    std::vector<std::string> genes;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) genes.push_back(line);
    }
    if (genes.empty()) throw std::invalid_argument(path + ": no gene ids");
    return genes;
}

GeneSetCollection load_gmt(const std::string& path) {
    std::ifstream in = open_input(path);
    GeneSetCollection sets;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string::size_type start = 0;
        while (true) {
            const auto pos = line.find('\t', start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (fields.size() < 3) parse_fail(path, line_no, 0, "gmt line needs name, description, members");
        std::set<std::string> members(fields.begin() + 2, fields.end());
        members.erase("");
        sets.signatures[fields[0]] = std::move(members);
    }
    if (sets.signatures.empty()) throw std::invalid_argument(path + ": no gene sets");
    return sets;
}

void save_fit_json(const std::string& path, const FitResult& result, const FitConfig& config) {
    json j;
    j["labels"] = result.labels;
    json clusters = json::array();
    for (std::size_t k = 0; k < result.params.size(); ++k) {
        clusters.push_back({{"mu", result.params[k].mu},
                            {"theta", theta_to_json(result.params[k].theta)},
                            {"pi", result.params[k].pi},
                            {"size", result.sizes[k]},
                            {"m", result.m_ks[k]}});
    }
    j["clusters"] = clusters;
    j["log_posterior"] = result.log_posterior;
    j["trace"] = result.trace;
    j["iterations"] = result.iterations;
    j["best_chain"] = result.best_chain;
    j["seed"] = result.seed;
    j["optimizer_failures"] = result.optimizer_failures;
    j["config"] = {{"k", config.k},
                   {"restarts", config.restarts},
                   {"max_iters", config.max_iters},
                   {"tol", config.tol},
                   {"patience", config.patience},
                   {"seed", config.seed},
                   {"lambda", config.lambda},
                   {"xi", config.xi},
                   {"nu", config.nu},
                   {"m_threshold", config.m_threshold},
                   {"m_cap", config.m_cap},
                   {"nm_max_evals", config.nm_max_evals},
                   {"nm_tol", config.nm_tol},
                   {"shuffle_sweep", config.shuffle_sweep},
                   {"threads", config.threads}};
    std::ofstream out = open_output(path);
    out << j.dump(2) << '\n';
}

LoadedFit load_fit_json(const std::string& path) {
    std::ifstream in = open_input(path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }

    LoadedFit lf;
    try {
        lf.result.labels = j.at("labels").get<std::vector<int>>();
        for (const auto& c : j.at("clusters")) {
            ClusterParams p;
            p.mu = c.at("mu").get<double>();
            p.theta = theta_from_json(c.at("theta"));
            p.pi = c.at("pi").get<double>();
            lf.result.params.push_back(p);
            lf.result.sizes.push_back(c.at("size").get<int>());
            lf.result.m_ks.push_back(c.at("m").get<int>());
        }
        lf.result.log_posterior = j.at("log_posterior").get<double>();
        lf.result.trace = j.at("trace").get<std::vector<std::vector<double>>>();
        lf.result.iterations = j.at("iterations").get<std::vector<int>>();
        lf.result.best_chain = j.at("best_chain").get<int>();
        lf.result.seed = j.at("seed").get<std::uint64_t>();
        lf.result.optimizer_failures = j.at("optimizer_failures").get<int>();

        const json& c = j.at("config");
        lf.config.k = c.at("k").get<int>();
        lf.config.restarts = c.at("restarts").get<int>();
        lf.config.max_iters = c.at("max_iters").get<int>();
        lf.config.tol = c.at("tol").get<double>();
        lf.config.patience = c.at("patience").get<int>();
        lf.config.seed = c.at("seed").get<std::uint64_t>();
        lf.config.lambda = c.at("lambda").get<double>();
        lf.config.xi = c.at("xi").get<double>();
        lf.config.nu = c.at("nu").get<std::vector<double>>();
        lf.config.m_threshold = c.at("m_threshold").get<double>();
        lf.config.m_cap = c.at("m_cap").get<int>();
        lf.config.nm_max_evals = c.at("nm_max_evals").get<int>();
        lf.config.nm_tol = c.at("nm_tol").get<double>();
        lf.config.shuffle_sweep = c.at("shuffle_sweep").get<bool>();
        lf.config.threads = c.at("threads").get<int>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return lf;
}

ScenarioSpec load_scenario_json(const std::string& path) {
    std::ifstream in = open_input(path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }

    ScenarioSpec spec;
    try {
        spec.n_spots = j.at("n_spots").get<int>();
        if (j.contains("bounds")) {
            const auto b = j.at("bounds").get<std::vector<double>>();
            if (b.size() != 4) throw std::invalid_argument(path + ": bounds must be [x_lo, x_hi, y_lo, y_hi]");
            spec.bounds = {b[0], b[1], b[2], b[3]};
        }
        spec.cluster_sizes = j.at("cluster_sizes").get<std::vector<int>>();
        if (j.contains("means")) spec.means = j.at("means").get<std::vector<double>>();
        if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& kj : j.at("kernels")) {
            KernelSpec k;
            k.family = kernel_family_from_string(kj.at("family").get<std::string>());
            k.sigma2 = kj.at("sigma2").get<double>();
            k.phi = kj.at("phi").get<double>();
            if (kj.contains("nugget")) k.nugget = kj.at("nugget").get<double>();
            spec.kernels.push_back(k);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    spec.validate();
    return spec;
}

void save_scenario_json(const std::string& path, const ScenarioSpec& spec) {
    json j;
    j["n_spots"] = spec.n_spots;
    j["bounds"] = {spec.bounds.x_lo, spec.bounds.x_hi, spec.bounds.y_lo, spec.bounds.y_hi};
    j["cluster_sizes"] = spec.cluster_sizes;
    if (!spec.means.empty()) j["means"] = spec.means;
    j["seed"] = spec.seed;
    json kernels = json::array();
    for (const auto& k : spec.kernels)
        kernels.push_back({{"family", to_string(k.family)},
                           {"sigma2", k.sigma2},
                           {"phi", k.phi},
                           {"nugget", k.nugget}});
    j["kernels"] = kernels;
    std::ofstream out = open_output(path);
    out << j.dump(2) << '\n';
}

}  // namespace srgmm
