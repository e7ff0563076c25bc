#include "zsmftg/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "zsmftg/errors.hpp"

namespace zsmftg {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct Document {
    // section -> key -> (value, line)
    std::map<std::string, std::map<std::string, std::pair<std::string, int>>> sections;

    const std::map<std::string, std::pair<std::string, int>>& section(
        const std::string& name) const {
        static const std::map<std::string, std::pair<std::string, int>> empty;
        auto it = sections.find(name);
        return it == sections.end() ? empty : it->second;
    }

    std::string get(const std::string& sec, const std::string& key) const {
        const auto& s = section(sec);
        auto it = s.find(key);
        if (it == s.end())
            throw ConfigError("missing key '" + key + "' in section [" + sec + "]");
        return it->second.first;
    }

    std::string get_or(const std::string& sec, const std::string& key,
                       const std::string& fallback) const {
        const auto& s = section(sec);
        auto it = s.find(key);
        return it == s.end() ? fallback : it->second.first;
    }

    bool has(const std::string& sec, const std::string& key) const {
        const auto& s = section(sec);
        return s.find(key) != s.end();
    }
};

Document parse_document(const std::string& text) {
    Document doc;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            doc.sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        if (current.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!doc.sections[current].emplace(key, std::make_pair(value, lineno)).second)
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return doc;
}

double to_double(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (trim(v.substr(pos)).size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(where + ": cannot parse '" + v + "' as a number");
    }
}

long to_long(const std::string& v, const std::string& where) {
    const double x = to_double(v, where);
    return static_cast<long>(x);
}

std::string serialize_distribution(const DistributionSpec& d) {
    switch (d.kind) {
        case DistributionSpec::Kind::PointMass:
            return "pointmass";
        case DistributionSpec::Kind::Uniform:
            return "uniform(" + format_double(-d.half_width) + "," + format_double(d.half_width) +
                   ")";
        case DistributionSpec::Kind::Gaussian:
            return "gaussian(" + format_matrix(d.cov) + ")";
    }
    return "pointmass";
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_matrix(const MatrixXd& M) {
    std::string s = "[";
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        s += "[";
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            s += format_double(M(r, c));
            if (c + 1 < M.cols()) s += ",";
        }
        s += "]";
        if (r + 1 < M.rows()) s += ",";
    }
    return s + "]";
}

ExperimentConfig parse_config(const std::string& text) {
    const Document doc = parse_document(text);

    KeyValues model_kv;
    for (const auto& [k, v] : doc.section("model")) model_kv[k] = v.first;
    for (const auto& [k, v] : doc.section("noise")) model_kv[k] = v.first;

    ExperimentConfig cfg;
    cfg.model = build_model(model_kv);

    const std::string method = doc.get_or("train", "method", "gda");
    if (method == "ag")
        cfg.train.method = TrainSpec::Method::AG;
    else if (method == "gda")
        cfg.train.method = TrainSpec::Method::GDA;
    else
        throw ConfigError("train.method must be 'ag' or 'gda', got '" + method + "'");

    const std::string mode = doc.get_or("train", "mode", "exact");
    if (mode == "exact")
        cfg.train.mode = TrainSpec::Mode::Exact;
    else if (mode == "sampled")
        cfg.train.mode = TrainSpec::Mode::Sampled;
    else
        throw ConfigError("train.mode must be 'exact' or 'sampled', got '" + mode + "'");

    cfg.train.eta1 = to_double(doc.get_or("train", "eta1", "0.1"), "train.eta1");
    cfg.train.eta2 = to_double(doc.get_or("train", "eta2", "0.1"), "train.eta2");
    cfg.train.n1max = to_long(doc.get_or("train", "n1max", "10"), "train.n1max");
    cfg.train.n2max = to_long(doc.get_or("train", "n2max", "200"), "train.n2max");
    cfg.train.iters = to_long(doc.get_or("train", "iters", "2000"), "train.iters");
    cfg.train.log_every = to_long(doc.get_or("train", "log_every", "1"), "train.log_every");

    const int d = cfg.model.d, ell = cfg.model.ell;
    cfg.train.theta0 = PolicyProfile::zero(d, ell);
    auto gain = [&](const std::string& key, MatrixXd& dst) {
        if (!doc.has("train", key)) return;
        dst = parse_matrix(doc.get("train", key));
        if (dst.rows() != ell || dst.cols() != d)
            throw ConfigError("train." + key + " must be " + std::to_string(ell) + "x" +
                              std::to_string(d));
    };
    gain("theta0_K1", cfg.train.theta0.K1);
    gain("theta0_L1", cfg.train.theta0.L1);
    gain("theta0_K2", cfg.train.theta0.K2);
    gain("theta0_L2", cfg.train.theta0.L2);

    SimSpec& est = cfg.train.estimator;
    est.horizon = to_long(doc.get_or("estimator", "horizon", "50"), "estimator.horizon");
    est.n_agents = to_long(doc.get_or("estimator", "n_agents", "1000"), "estimator.n_agents");
    est.n_perturbations = to_long(doc.get_or("estimator", "n_perturbations", "10000"),
                                  "estimator.n_perturbations");
    est.radius = to_double(doc.get_or("estimator", "radius", "0.1"), "estimator.radius");
    est.crn = to_long(doc.get_or("estimator", "crn", "0"), "estimator.crn") != 0;
    validate_sim_spec(est);

    cfg.output.dir = doc.get_or("output", "dir", "out");
    const std::string formats = doc.get_or("output", "formats", "csv,svg");
    cfg.output.csv = formats.find("csv") != std::string::npos;
    cfg.output.svg = formats.find("svg") != std::string::npos;

    cfg.seed = static_cast<std::uint64_t>(
        std::stoull(doc.get_or("run", "seed", "0")));
    est.seed = cfg.seed;

    validate_train_spec(cfg.train);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    const ModelParams& m = cfg.model;
    out << "[model]\n";
    out << "d = " << m.d << "\n";
    out << "ell = " << m.ell << "\n";
    out << "A = " << format_matrix(m.A) << "\n";
    out << "Abar = " << format_matrix(m.Abar) << "\n";
    out << "B1 = " << format_matrix(m.B1) << "\n";
    out << "B1bar = " << format_matrix(m.B1bar) << "\n";
    out << "B2 = " << format_matrix(m.B2) << "\n";
    out << "B2bar = " << format_matrix(m.B2bar) << "\n";
    out << "Q = " << format_matrix(m.Q) << "\n";
    out << "Qbar = " << format_matrix(m.Qbar) << "\n";
    out << "R1 = " << format_matrix(m.R1) << "\n";
    out << "R1bar = " << format_matrix(m.R1bar) << "\n";
    out << "R2 = " << format_matrix(m.R2) << "\n";
    out << "R2bar = " << format_matrix(m.R2bar) << "\n";
    out << "gamma = " << format_double(m.gamma) << "\n";
    out << "\n[noise]\n";
    out << "init_common = " << serialize_distribution(m.noise.init_common) << "\n";
    out << "init_idio = " << serialize_distribution(m.noise.init_idio) << "\n";
    out << "step_common = " << serialize_distribution(m.noise.step_common) << "\n";
    out << "step_idio = " << serialize_distribution(m.noise.step_idio) << "\n";

    const TrainSpec& t = cfg.train;
    out << "\n[train]\n";
    out << "method = " << (t.method == TrainSpec::Method::AG ? "ag" : "gda") << "\n";
    out << "mode = " << (t.mode == TrainSpec::Mode::Exact ? "exact" : "sampled") << "\n";
    out << "eta1 = " << format_double(t.eta1) << "\n";
    out << "eta2 = " << format_double(t.eta2) << "\n";
    out << "n1max = " << t.n1max << "\n";
    out << "n2max = " << t.n2max << "\n";
    out << "iters = " << t.iters << "\n";
    out << "log_every = " << t.log_every << "\n";
    out << "theta0_K1 = " << format_matrix(t.theta0.K1) << "\n";
    out << "theta0_L1 = " << format_matrix(t.theta0.L1) << "\n";
    out << "theta0_K2 = " << format_matrix(t.theta0.K2) << "\n";
    out << "theta0_L2 = " << format_matrix(t.theta0.L2) << "\n";

    const SimSpec& e = t.estimator;
    out << "\n[estimator]\n";
    out << "horizon = " << e.horizon << "\n";
    out << "n_agents = " << e.n_agents << "\n";
    out << "n_perturbations = " << e.n_perturbations << "\n";
    out << "radius = " << format_double(e.radius) << "\n";
    out << "crn = " << (e.crn ? 1 : 0) << "\n";

    out << "\n[output]\n";
    out << "dir = " << cfg.output.dir << "\n";
    out << "formats = " << (cfg.output.csv ? (cfg.output.svg ? "csv,svg" : "csv")
                                           : (cfg.output.svg ? "svg" : "")) << "\n";

    out << "\n[run]\n";
    out << "seed = " << cfg.seed << "\n";
    return out.str();
}

ExperimentConfig preset_table1() {
    ExperimentConfig cfg;
    ModelParams m;
    m.d = 1;
    m.ell = 1;
    auto scalar = [](double v) { return MatrixXd::Constant(1, 1, v); };
    m.A = scalar(0.4);
    m.Abar = scalar(0.4);
    m.B1 = scalar(0.4);
    m.B1bar = scalar(0.4);
    m.B2 = scalar(0.3);
    m.B2bar = scalar(0.3);
    m.Q = scalar(0.4);
    m.Qbar = scalar(0.4);
    m.R1 = scalar(0.4);
    m.R1bar = scalar(0.4);
    m.R2 = scalar(0.4);
    m.R2bar = scalar(0.4);
    m.gamma = 0.9;
    m.noise.init_common = DistributionSpec::uniform(1, 1.0);
    m.noise.init_idio = DistributionSpec::uniform(1, 1.0);
    m.noise.step_common = DistributionSpec::gaussian(scalar(0.01));
    m.noise.step_idio = DistributionSpec::gaussian(scalar(0.01));
    cfg.model = validate_model(std::move(m));

    cfg.train.method = TrainSpec::Method::GDA;
    cfg.train.mode = TrainSpec::Mode::Exact;
    cfg.train.eta1 = 0.1;
    cfg.train.eta2 = 0.1;
    cfg.train.n1max = 10;
    cfg.train.n2max = 200;
    cfg.train.iters = 2000;
    cfg.train.log_every = 1;
    cfg.train.theta0 = PolicyProfile::zero(1, 1);

    cfg.train.estimator.horizon = 50;
    cfg.train.estimator.n_perturbations = 10000;
    cfg.train.estimator.radius = 0.1;
    cfg.train.estimator.n_agents = 1000;

    cfg.output.dir = "out";
    cfg.seed = 0;
    cfg.train.estimator.seed = 0;
    return cfg;
}

ExperimentConfig preset_by_name(const std::string& name) {
    if (name == "table1") return preset_table1();
    throw ConfigError("unknown preset '" + name + "' (available: table1)");
}

}  // namespace zsmftg
