#pragma once

#include <Eigen/Core>

#include "zsmftg/model.hpp"

namespace zsmftg {

// Which of the two saddle Riccati equations: the deviation process (y) uses
// the raw coefficients, the mean process (z) the tilde-aggregated ones.
enum class AreVariant { y, z };

// The blocks M(P), L1(P), L2(P), L12(P), N1(P), N2(P) together with their
// assemblies L(P) = [L1 L2] and N(P) = [[N1 L12],[L12^T N2]].
struct BlockOperators {
    MatrixXd M;    // gamma A^T P A - P + Q
    MatrixXd L1;   // gamma A^T P B1
    MatrixXd L2;   // gamma A^T P B2
    MatrixXd L12;  // gamma B1^T P B2
    MatrixXd N1;   // gamma B1^T P B1 + R1
    MatrixXd N2;   // gamma B2^T P B2 - R2
    MatrixXd Lfull;
    MatrixXd Nfull;
};

struct RiccatiSolution {
    MatrixXd P;
    double residual_norm = 0.0;  // recomputed independently of the iteration
    long iterations = 0;
    bool n1_pos = false;       // saddle AREs: N1(P) > 0; DAREs: inner matrix > 0
    bool n2_neg = false;       // saddle AREs: N2(P) < 0
    bool stabilizing = false;  // DAREs: gamma ||A - B K||^2 < 1 at the induced gain
};

struct OpenLoopSolution {
    RiccatiSolution P;     // solves gamma [A^T P + 2Q](A + (B1 G1 + B2 G2) P) = P
    RiccatiSolution Pbar;  // tilde analogue with the Lambda coefficients
    MatrixXd Gamma1, Gamma2;    // (-1)^i (1/2) R_i^{-1} B_i^T
    MatrixXd Lambda1, Lambda2;  // (-1)^i (1/2) (R_i+Rbar_i)^{-1} (B_i+Bbar_i)^T
};

// Relative singular-value cutoff below which a matrix counts as singular,
// and the absolute eigenvalue threshold for the (pos/neg) definite flags.
inline constexpr double kSingularRelTol = 1e-10;
inline constexpr double kDefiniteEigTol = 1e-10;

bool numerically_invertible(const MatrixXd& M);
double smallest_singular_value(const MatrixXd& M);
bool is_positive_definite_flag(const MatrixXd& M);
bool is_negative_definite_flag(const MatrixXd& M);

// Solves P = W + gamma F^T P F. Requires gamma ||F||_2^2 < 1.
MatrixXd solve_discounted_lyapunov(const MatrixXd& F, const MatrixXd& W, double gamma);

// Discounted second moment of x_{t+1} = F x_t + eps with x_0 ~ (0, Sigma_init)
// and eps ~ (0, Sigma_noise):
//   Sigma = Sigma_init + gamma (F Sigma F^T + Sigma_noise / (1 - gamma)).
MatrixXd solve_discounted_covariance(const MatrixXd& F, const MatrixXd& Sigma_init,
                                     const MatrixXd& Sigma_noise, double gamma);

BlockOperators assemble_blocks(const MatrixXd& P, const ModelParams& m, AreVariant variant);

// Inverse of N(P) through either Schur-complement branch of the 2x2 block
// formula; the branches agree whenever both apply.
MatrixXd invert_block_n(const BlockOperators& b);

// Saddle ARE 0 = M(P) - L(P) N(P)^{-1} L(P)^T by damped fixed-point
// iteration from the discounted Lyapunov warm start.
RiccatiSolution solve_are_saddle(const ModelParams& m, AreVariant variant, double tol = 1e-11);

// Single-player DARE with sign (-1)^{i-1} Q (tilde coefficients when
// meanfield); certifies the convexity-concavity condition.
RiccatiSolution solve_dare(const ModelParams& m, int player, bool meanfield);

OpenLoopSolution solve_open_loop_riccati(const ModelParams& m, double tol = 1e-11);

}  // namespace zsmftg
