#include "zsmftg/model.hpp"

#include <cctype>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "zsmftg/errors.hpp"

namespace zsmftg {

namespace {

constexpr double kSymTol = 1e-12;

void require_symmetric(const MatrixXd& M, const std::string& name) {
    if (M.rows() != M.cols())
        throw NotSymmetric(name + " is not square (" + std::to_string(M.rows()) + "x" +
                           std::to_string(M.cols()) + ")");
    const double dev = (M - M.transpose()).cwiseAbs().maxCoeff();
    if (dev > kSymTol)
        throw NotSymmetric(name + " deviates from symmetry by " + std::to_string(dev));
}

void require_positive_definite(const MatrixXd& M, const std::string& name) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        throw NotPositiveDefinite(name + " is not positive definite");
}

void require_shape(const MatrixXd& M, Eigen::Index rows, Eigen::Index cols,
                   const std::string& name) {
    if (M.rows() != rows || M.cols() != cols)
        throw DimensionMismatch(name + " has shape " + std::to_string(M.rows()) + "x" +
                                std::to_string(M.cols()) + ", expected " + std::to_string(rows) +
                                "x" + std::to_string(cols));
}

MatrixXd symmetrize(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

void require_psd(const MatrixXd& M, const std::string& name) {
    require_symmetric(M, name);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-12)
        throw NotPositiveDefinite(name + " is not positive semidefinite");
}

const std::string& lookup(const KeyValues& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
}

double parse_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + s + "' as a number");
    }
}

// "pointmass" | "uniform(-h,h)" | "gaussian([[..]])"
DistributionSpec parse_distribution(const std::string& text, int dim, const std::string& key) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s == "pointmass") return DistributionSpec::point_mass(dim);
    if (s.rfind("uniform(", 0) == 0 && s.back() == ')') {
        const std::string args = s.substr(8, s.size() - 9);
        const auto comma = args.find(',');
        if (comma == std::string::npos)
            throw ConfigError("key '" + key + "': uniform takes (low,high)");
        const double lo = parse_double(args.substr(0, comma), key);
        const double hi = parse_double(args.substr(comma + 1), key);
        if (lo != -hi) throw ConfigError("key '" + key + "': uniform(low,high) needs low == -high");
        return DistributionSpec::uniform(dim, hi);
    }
    if (s.rfind("gaussian(", 0) == 0 && s.back() == ')') {
        MatrixXd cov = parse_matrix(s.substr(9, s.size() - 10));
        return DistributionSpec::gaussian(std::move(cov));
    }
    throw ConfigError("key '" + key + "': unknown distribution '" + text + "'");
}

}  // namespace

void finalize_gaussian(DistributionSpec& d) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(d.cov);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-12)
        throw NotPositiveDefinite("gaussian covariance is not positive semidefinite");
    const VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    d.transform_ = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

DistributionSpec DistributionSpec::point_mass(int dim) {
    DistributionSpec d;
    d.kind = Kind::PointMass;
    d.dim = dim;
    return d;
}

DistributionSpec DistributionSpec::uniform(int dim, double half_width) {
    if (half_width < 0) throw ConfigError("uniform half-width must be nonnegative");
    DistributionSpec d;
    d.kind = Kind::Uniform;
    d.dim = dim;
    d.half_width = half_width;
    return d;
}

DistributionSpec DistributionSpec::gaussian(MatrixXd cov) {
    DistributionSpec d;
    d.kind = Kind::Gaussian;
    d.dim = static_cast<int>(cov.rows());
    d.cov = symmetrize(cov);
    finalize_gaussian(d);
    return d;
}

MatrixXd DistributionSpec::covariance() const {
    switch (kind) {
        case Kind::PointMass:
            return MatrixXd::Zero(dim, dim);
        case Kind::Uniform:
            return (half_width * half_width / 3.0) * MatrixXd::Identity(dim, dim);
        case Kind::Gaussian:
            return cov;
    }
    return MatrixXd::Zero(dim, dim);
}

VectorXd DistributionSpec::sample(Sequence& seq) const {
    switch (kind) {
        case Kind::PointMass:
            return VectorXd::Zero(dim);
        case Kind::Uniform:
            return seq.uniform_sym_vec(dim, half_width);
        case Kind::Gaussian:
            return transform_ * seq.gauss_vec(dim);
    }
    return VectorXd::Zero(dim);
}

double DistributionSpec::transform_scalar() const {
    if (kind != Kind::Gaussian || dim != 1)
        throw Error("transform_scalar applies to scalar gaussian specs only");
    return transform_(0, 0);
}

bool DistributionSpec::operator==(const DistributionSpec& o) const {
    if (kind != o.kind || dim != o.dim) return false;
    if (kind == Kind::Uniform) return half_width == o.half_width;
    if (kind == Kind::Gaussian) return cov == o.cov;
    return true;
}

PolicyProfile PolicyProfile::zero(int d, int ell) {
    PolicyProfile t;
    t.K1 = t.L1 = t.K2 = t.L2 = MatrixXd::Zero(ell, d);
    return t;
}

ModelParams validate_model(ModelParams m) {
    const int d = m.d;
    const int ell = m.ell;
    if (d <= 0 || ell <= 0) throw DimensionMismatch("d and ell must be positive");

    require_shape(m.A, d, d, "A");
    require_shape(m.Abar, d, d, "Abar");
    require_shape(m.B1, d, ell, "B1");
    require_shape(m.B1bar, d, ell, "B1bar");
    require_shape(m.B2, d, ell, "B2");
    require_shape(m.B2bar, d, ell, "B2bar");
    require_shape(m.Q, d, d, "Q");
    require_shape(m.Qbar, d, d, "Qbar");
    require_shape(m.R1, ell, ell, "R1");
    require_shape(m.R1bar, ell, ell, "R1bar");
    require_shape(m.R2, ell, ell, "R2");
    require_shape(m.R2bar, ell, ell, "R2bar");

    require_symmetric(m.Q, "Q");
    require_symmetric(m.Qbar, "Qbar");
    require_symmetric(m.R1, "R1");
    require_symmetric(m.R1bar, "R1bar");
    require_symmetric(m.R2, "R2");
    require_symmetric(m.R2bar, "R2bar");

    m.Q = symmetrize(m.Q);
    m.Qbar = symmetrize(m.Qbar);
    m.R1 = symmetrize(m.R1);
    m.R1bar = symmetrize(m.R1bar);
    m.R2 = symmetrize(m.R2);
    m.R2bar = symmetrize(m.R2bar);

    require_positive_definite(m.R1, "R1");
    require_positive_definite(m.R2, "R2");
    require_positive_definite(m.R1 + m.R1bar, "R1 + R1bar");
    require_positive_definite(m.R2 + m.R2bar, "R2 + R2bar");

    if (!(m.gamma > 0.0 && m.gamma < 1.0))
        throw GammaOutOfRange("gamma must lie in (0,1), got " + std::to_string(m.gamma));

    auto check_dist = [&](const DistributionSpec& dist, const std::string& name) {
        if (dist.dim != d) throw DimensionMismatch(name + " has dimension " +
                                                   std::to_string(dist.dim) + ", expected " +
                                                   std::to_string(d));
    };
    check_dist(m.noise.init_common, "noise.init_common");
    check_dist(m.noise.init_idio, "noise.init_idio");
    check_dist(m.noise.step_common, "noise.step_common");
    check_dist(m.noise.step_idio, "noise.step_idio");

    if (m.noise.Sigma0.size() == 0) m.noise.Sigma0 = m.noise.step_common.covariance();
    if (m.noise.Sigma1.size() == 0) m.noise.Sigma1 = m.noise.step_idio.covariance();
    require_psd(m.noise.Sigma0, "Sigma0");
    require_psd(m.noise.Sigma1, "Sigma1");
    if ((m.noise.Sigma0 - m.noise.step_common.covariance()).cwiseAbs().maxCoeff() > 1e-12)
        throw ConfigError("Sigma0 is inconsistent with the declared step_common distribution");
    if ((m.noise.Sigma1 - m.noise.step_idio.covariance()).cwiseAbs().maxCoeff() > 1e-12)
        throw ConfigError("Sigma1 is inconsistent with the declared step_idio distribution");

    return m;
}

ModelParams build_model(const KeyValues& config) {
    ModelParams m;
    m.d = static_cast<int>(parse_double(lookup(config, "d"), "d"));
    m.ell = static_cast<int>(parse_double(lookup(config, "ell"), "ell"));

    auto mat = [&](const std::string& key) {
        try {
            return parse_matrix(lookup(config, key));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("key '" + key + "': " + e.what());
        }
    };

    m.A = mat("A");
    m.Abar = mat("Abar");
    m.B1 = mat("B1");
    m.B1bar = mat("B1bar");
    m.B2 = mat("B2");
    m.B2bar = mat("B2bar");
    m.Q = mat("Q");
    m.Qbar = mat("Qbar");
    m.R1 = mat("R1");
    m.R1bar = mat("R1bar");
    m.R2 = mat("R2");
    m.R2bar = mat("R2bar");
    m.gamma = parse_double(lookup(config, "gamma"), "gamma");

    m.noise.init_common = parse_distribution(lookup(config, "init_common"), m.d, "init_common");
    m.noise.init_idio = parse_distribution(lookup(config, "init_idio"), m.d, "init_idio");
    m.noise.step_common = parse_distribution(lookup(config, "step_common"), m.d, "step_common");
    m.noise.step_idio = parse_distribution(lookup(config, "step_idio"), m.d, "step_idio");

    return validate_model(std::move(m));
}

TildeParams derive_tilde(const ModelParams& m) {
    TildeParams t;
    t.Atil = m.A + m.Abar;
    t.Qtil = m.Q + m.Qbar;
    t.B1til = m.B1 + m.B1bar;
    t.B2til = m.B2 + m.B2bar;
    t.R1til = m.R1 + m.R1bar;
    t.R2til = m.R2 + m.R2bar;
    return t;
}

ModelParams build_two_population(const PopulationBlocks& pop1, const PopulationBlocks& pop2,
                                 const MatrixXd& Q, const MatrixXd& Qbar, const MatrixXd& R1,
                                 const MatrixXd& R1bar, const MatrixXd& R2, const MatrixXd& R2bar,
                                 double gamma, const NoiseSpec& noise) {
    const Eigen::Index dp = pop1.A.rows();
    const Eigen::Index ell = pop1.B.cols();
    for (const auto* p : {&pop1, &pop2}) {
        require_shape(p->A, dp, dp, "population A");
        require_shape(p->B, dp, ell, "population B");
        require_shape(p->Abar_own, dp, dp, "population Abar_own");
        require_shape(p->Abar_cross, dp, dp, "population Abar_cross");
        require_shape(p->Bbar_1, dp, ell, "population Bbar_1");
        require_shape(p->Bbar_2, dp, ell, "population Bbar_2");
    }

    const Eigen::Index d = 2 * dp;
    ModelParams m;
    m.d = static_cast<int>(d);
    m.ell = static_cast<int>(ell);

    m.A = MatrixXd::Zero(d, d);
    m.A.topLeftCorner(dp, dp) = pop1.A;
    m.A.bottomRightCorner(dp, dp) = pop2.A;

    m.B1 = MatrixXd::Zero(d, ell);
    m.B1.topRows(dp) = pop1.B;
    m.B2 = MatrixXd::Zero(d, ell);
    m.B2.bottomRows(dp) = pop2.B;

    m.Abar = MatrixXd::Zero(d, d);
    m.Abar.topLeftCorner(dp, dp) = pop1.Abar_own;
    m.Abar.topRightCorner(dp, dp) = pop1.Abar_cross;
    m.Abar.bottomLeftCorner(dp, dp) = pop2.Abar_cross;
    m.Abar.bottomRightCorner(dp, dp) = pop2.Abar_own;

    m.B1bar = MatrixXd::Zero(d, ell);
    m.B1bar.topRows(dp) = pop1.Bbar_1;
    m.B1bar.bottomRows(dp) = pop2.Bbar_1;
    m.B2bar = MatrixXd::Zero(d, ell);
    m.B2bar.topRows(dp) = pop1.Bbar_2;
    m.B2bar.bottomRows(dp) = pop2.Bbar_2;

    m.Q = Q;
    m.Qbar = Qbar;
    m.R1 = R1;
    m.R1bar = R1bar;
    m.R2 = R2;
    m.R2bar = R2bar;
    m.gamma = gamma;
    m.noise = noise;

    return validate_model(std::move(m));
}

double operator_norm(const MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    return M.jacobiSvd().singularValues()(0);
}

StabilityReport check_stability(const PolicyProfile& theta, const ModelParams& m) {
    const auto check = [&](const MatrixXd& G, const std::string& name) {
        if (G.rows() != m.ell || G.cols() != m.d)
            throw DimensionMismatch(name + " has shape " + std::to_string(G.rows()) + "x" +
                                    std::to_string(G.cols()) + ", expected " +
                                    std::to_string(m.ell) + "x" + std::to_string(m.d));
    };
    check(theta.K1, "K1");
    check(theta.L1, "L1");
    check(theta.K2, "K2");
    check(theta.L2, "L2");

    const TildeParams t = derive_tilde(m);
    StabilityReport r;
    r.norm_y = operator_norm(m.A - m.B1 * theta.K1 + m.B2 * theta.K2);
    r.norm_z = operator_norm(t.Atil - t.B1til * theta.L1 + t.B2til * theta.L2);
    r.in_Theta = m.gamma * r.norm_y * r.norm_y < 1.0 && m.gamma * r.norm_z * r.norm_z < 1.0;
    return r;
}

MatrixXd parse_matrix(const std::string& text) {
    std::size_t i = 0;
    const auto skip_ws = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    const auto fail = [&](const std::string& why) -> std::runtime_error {
        return ConfigError("matrix literal '" + text + "': " + why);
    };

    skip_ws();
    if (i >= text.size()) throw fail("empty");

    if (text[i] != '[') {  // bare scalar -> 1x1
        MatrixXd m(1, 1);
        std::size_t pos = 0;
        try {
            m(0, 0) = std::stod(text.substr(i), &pos);
        } catch (const std::exception&) {
            throw fail("expected a number");
        }
        i += pos;
        skip_ws();
        if (i != text.size()) throw fail("trailing characters");
        return m;
    }

    ++i;  // outer '['
    std::vector<std::vector<double>> rows;
    skip_ws();
    while (true) {
        if (i >= text.size()) throw fail("unterminated");
        if (text[i] == ']') {
            ++i;
            break;
        }
        if (text[i] != '[') throw fail("expected '[' starting a row");
        ++i;
        std::vector<double> row;
        skip_ws();
        while (i < text.size() && text[i] != ']') {
            std::size_t pos = 0;
            try {
                row.push_back(std::stod(text.substr(i), &pos));
            } catch (const std::exception&) {
                throw fail("expected a number in row " + std::to_string(rows.size()));
            }
            i += pos;
            skip_ws();
            if (i < text.size() && text[i] == ',') {
                ++i;
                skip_ws();
            }
        }
        if (i >= text.size()) throw fail("unterminated row");
        ++i;  // row ']'
        if (row.empty()) throw fail("empty row");
        rows.push_back(std::move(row));
        skip_ws();
        if (i < text.size() && text[i] == ',') {
            ++i;
            skip_ws();
        }
    }
    skip_ws();
    if (i != text.size()) throw fail("trailing characters");
    if (rows.empty()) throw fail("no rows");

    const std::size_t cols = rows[0].size();
    MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw fail("ragged rows");
        for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r),
                                                 static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

}  // namespace zsmftg
