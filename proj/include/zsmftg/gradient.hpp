#pragma once

#include <Eigen/Core>

#include "zsmftg/model.hpp"

namespace zsmftg {

// Exact gradients of the utility with respect to the four gains, plus the
// intermediates they are built from.
struct GradientBundle {
    MatrixXd dK1, dL1, dK2, dL2;
    MatrixXd Py, Pz;  // closed-loop value matrices
    MatrixXd Sy, Sz;  // discounted second moments of y and z
    double cost = 0.0;

    double norm() const;
};

struct CostParts {
    double y = 0.0;
    double z = 0.0;
    double total() const { return y + z; }
};

struct BestResponse {
    MatrixXd gain;  // optimal K1 (or L1) against the opponent's fixed gain
    MatrixXd P;     // value matrix of the induced single-player problem
};

// Discounted utility of the stationary linear policy theta; requires
// theta in the stabilizing set.
double evaluate_cost(const PolicyProfile& theta, const ModelParams& m);

// Same value split into the deviation (y) and mean (z) parts; the y part
// depends only on (K1, K2) and the z part only on (L1, L2).
CostParts evaluate_cost_parts(const PolicyProfile& theta, const ModelParams& m);

GradientBundle exact_gradient(const PolicyProfile& theta, const ModelParams& m);

// y-part gradients only (no initial/noise second-moment data needed beyond
// the model); used by the best-response saddle search.
struct YGradient {
    MatrixXd dK1, dK2;
    MatrixXd Py, Sy;
};
struct ZGradient {
    MatrixXd dL1, dL2;
    MatrixXd Pz, Sz;
};
YGradient exact_gradient_y(const MatrixXd& K1, const MatrixXd& K2, const ModelParams& m);
ZGradient exact_gradient_z(const MatrixXd& L1, const MatrixXd& L2, const ModelParams& m);

// Player 1's optimal gain against a fixed K2, through the K2-indexed DARE.
BestResponse best_response_K1(const MatrixXd& K2, const ModelParams& m);

// Mean-process analogue against a fixed L2.
BestResponse best_response_L1(const MatrixXd& L2, const ModelParams& m);

}  // namespace zsmftg
