#pragma once

#include <array>
#include <string>

#include <Eigen/Core>

#include "zsmftg/model.hpp"
#include "zsmftg/solvers.hpp"

namespace zsmftg {

struct SaddleSolution {
    MatrixXd P, Pbar;           // ARE-y and ARE-z solutions
    PolicyProfile theta_star;   // (K1*, L1*, K2*, L2*)
    double value = 0.0;
    // value = value_y_init + value_z_init + value_y_noise + value_z_noise
    double value_y_init = 0.0;   // E[y0^T P y0]
    double value_z_init = 0.0;   // E[z0^T Pbar z0]
    double value_y_noise = 0.0;  // gamma/(1-gamma) tr(P Sigma1)
    double value_z_noise = 0.0;  // gamma/(1-gamma) tr(Pbar Sigma0)
    bool cond_y = false;         // N1(P) > 0 and N2(P) < 0
    bool cond_z = false;         // tilde analogue at Pbar
    bool in_Theta = false;
    bool convex_concave = false;
    // Gains obtained by joint least squares because a Schur branch was
    // singular; the stationarity residual is reported either way.
    bool degenerate_gains = false;
    double stationarity_residual = 0.0;
    double residual_y = 0.0, residual_z = 0.0;
};

struct OpenLoopFeedback {
    MatrixXd Gamma1P, Gamma2P;        // u_i = Gamma_i P (x - xbar) + ...
    MatrixXd Lambda1Pbar, Lambda2Pbar;  // ... + Lambda_i Pbar xbar
};

struct ConnectionReport {
    MatrixXd Pc_from_Po;  // (1/2) A^T P^o + Q
    double transform_residual_y = 0.0;
    double transform_residual_z = 0.0;
    double gain_identity_residual_y = 0.0;
    double gain_identity_residual_z = 0.0;
};

struct DareReport {
    int player = 0;
    bool meanfield = false;
    bool solved = false;
    bool inner_pd = false;
    bool stabilizing = false;
    double residual = 0.0;
    std::string error;
    MatrixXd P;
};

struct ConvexityReport {
    bool holds = false;
    std::array<DareReport, 4> dares;  // (1,plain), (2,plain), (1,mf), (2,mf)
};

SaddleSolution closed_loop_saddle(const ModelParams& m, double are_tol = 1e-11);

OpenLoopFeedback open_loop_feedback(const ModelParams& m);

// Checks P^c = (1/2) A^T P^o + Q and the feedback-coefficient identity
// between the open-loop and closed-loop equilibria. Needs ell = d and the
// input/weight matrices invertible.
ConnectionReport verify_connection(const ModelParams& m, double are_tol = 1e-11);

ConvexityReport check_convexity_concavity(const ModelParams& m);

// Computes the saddle by root-finding on the best-response gradient rather
// than through the coupled AREs; agrees with closed_loop_saddle.
PolicyProfile saddle_via_best_response(const ModelParams& m);

}  // namespace zsmftg
