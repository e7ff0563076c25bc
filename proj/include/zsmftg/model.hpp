#pragma once

#include <map>
#include <string>

#include <Eigen/Core>

#include "zsmftg/rng.hpp"

namespace zsmftg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Mean-zero distribution used for initial conditions and step noise.
struct DistributionSpec {
    enum class Kind { PointMass, Uniform, Gaussian };

    Kind kind = Kind::PointMass;
    double half_width = 0.0;  // Uniform: iid coordinates on [-h, h]
    MatrixXd cov;             // Gaussian: full covariance

    int dim = 0;

    static DistributionSpec point_mass(int dim);
    static DistributionSpec uniform(int dim, double half_width);
    static DistributionSpec gaussian(MatrixXd cov);

    MatrixXd covariance() const;
    VectorXd sample(Sequence& seq) const;

    // Gaussian sampling factor for dim == 1 (cov = t^2).
    double transform_scalar() const;

    bool operator==(const DistributionSpec& o) const;

private:
    MatrixXd transform_;  // Gaussian sampling factor (cov = T T^T)
    friend void finalize_gaussian(DistributionSpec& d);
};

struct NoiseSpec {
    DistributionSpec init_common;  // law of the time-0 common shock
    DistributionSpec init_idio;    // law of the time-0 idiosyncratic shock
    DistributionSpec step_common;  // iid common shocks for t >= 1
    DistributionSpec step_idio;    // iid idiosyncratic shocks for t >= 1
    MatrixXd Sigma0;               // covariance of step_common
    MatrixXd Sigma1;               // covariance of step_idio
};

// All game coefficients. Plain aggregate; build_model() is the validating
// entry point, tests may construct instances directly.
struct ModelParams {
    int d = 0;    // state dimension
    int ell = 0;  // control dimension
    MatrixXd A, Abar;
    MatrixXd B1, B1bar, B2, B2bar;
    MatrixXd Q, Qbar;
    MatrixXd R1, R1bar, R2, R2bar;
    double gamma = 0.0;
    NoiseSpec noise;
};

// Aggregated coefficients driving the mean process.
struct TildeParams {
    MatrixXd Atil, Qtil;
    MatrixXd B1til, B2til;
    MatrixXd R1til, R2til;
};

// Feedback gains theta = (K1, L1, K2, L2); player i applies
// u_i = (-1)^i K_i (x - xbar) + (-1)^i L_i xbar.
struct PolicyProfile {
    MatrixXd K1, L1, K2, L2;

    static PolicyProfile zero(int d, int ell);
};

struct StabilityReport {
    bool in_Theta = false;
    double norm_y = 0.0;  // ||A - B1 K1 + B2 K2||_2
    double norm_z = 0.0;  // ||Atil - B1til L1 + B2til L2||_2
};

// Flat key -> value document (matrix literals as nested bracket lists).
using KeyValues = std::map<std::string, std::string>;

// Validates invariants (symmetry to 1e-12, positive definiteness of the
// control weights, gamma in (0,1)) and symmetrizes the cost matrices so
// downstream code can assume exact symmetry.
ModelParams build_model(const KeyValues& config);

// Same validation applied to an already-assembled parameter set.
ModelParams validate_model(ModelParams m);

TildeParams derive_tilde(const ModelParams& m);

// Dynamics blocks of one population in the two-population block model.
struct PopulationBlocks {
    MatrixXd A;           // own-state dynamics, d' x d'
    MatrixXd B;           // own-controller input, d' x ell
    MatrixXd Abar_own;    // coupling to this population's mean
    MatrixXd Abar_cross;  // coupling to the other population's mean
    MatrixXd Bbar_1;      // response to controller 1's mean action
    MatrixXd Bbar_2;      // response to controller 2's mean action
};

// Assembles the block model where each controller steers its own
// population: A = diag(A1, A2), B1 = [B1; 0], B2 = [0; B2], coupling only
// through the mean terms. Cost matrices and noise refer to the stacked
// state of dimension 2 d'.
ModelParams build_two_population(const PopulationBlocks& pop1, const PopulationBlocks& pop2,
                                 const MatrixXd& Q, const MatrixXd& Qbar, const MatrixXd& R1,
                                 const MatrixXd& R1bar, const MatrixXd& R2, const MatrixXd& R2bar,
                                 double gamma, const NoiseSpec& noise);

StabilityReport check_stability(const PolicyProfile& theta, const ModelParams& m);

// Largest singular value.
double operator_norm(const MatrixXd& M);

// Parses "[[a,b],[c,d]]" (or a bare scalar as 1x1).
MatrixXd parse_matrix(const std::string& text);

}  // namespace zsmftg
