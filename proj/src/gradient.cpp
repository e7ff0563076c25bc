#include "zsmftg/gradient.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "zsmftg/errors.hpp"
#include "zsmftg/solvers.hpp"

namespace zsmftg {

namespace {

constexpr long kMaxIterations = 100000;

MatrixXd symmetrize(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

void require_stable(const PolicyProfile& theta, const ModelParams& m) {
    const StabilityReport r = check_stability(theta, m);
    if (!r.in_Theta)
        throw Unstable("policy outside the stabilizing set (gamma norm_y^2 = " +
                       std::to_string(m.gamma * r.norm_y * r.norm_y) + ", gamma norm_z^2 = " +
                       std::to_string(m.gamma * r.norm_z * r.norm_z) + ")");
}

// Shared y/z machinery: the two halves differ only in their coefficients.
struct HalfModel {
    MatrixXd A, B1, B2, Q, R1, R2;
    MatrixXd init_cov, noise_cov;
    double gamma;
};

HalfModel y_half(const ModelParams& m) {
    return {m.A,      m.B1,
            m.B2,     m.Q,
            m.R1,     m.R2,
            m.noise.init_idio.covariance(), m.noise.Sigma1,
            m.gamma};
}

HalfModel z_half(const ModelParams& m) {
    const TildeParams t = derive_tilde(m);
    return {t.Atil,   t.B1til,
            t.B2til,  t.Qtil,
            t.R1til,  t.R2til,
            m.noise.init_common.covariance(), m.noise.Sigma0,
            m.gamma};
}

struct HalfGradient {
    MatrixXd d1, d2;
    MatrixXd P, S;
    double cost;
};

HalfGradient half_gradient(const MatrixXd& G1, const MatrixXd& G2, const HalfModel& h) {
    const MatrixXd F = h.A - h.B1 * G1 + h.B2 * G2;
    const MatrixXd W =
        h.Q + G1.transpose() * h.R1 * G1 - G2.transpose() * h.R2 * G2;
    HalfGradient out;
    out.P = solve_discounted_lyapunov(F, symmetrize(W), h.gamma);
    out.S = solve_discounted_covariance(F, h.init_cov, h.noise_cov, h.gamma);

    const MatrixXd B1tP = h.gamma * h.B1.transpose() * out.P;
    const MatrixXd B2tP = h.gamma * h.B2.transpose() * out.P;
    const MatrixXd E1 = (h.R1 + B1tP * h.B1) * G1 - B1tP * h.B2 * G2 - B1tP * h.A;
    const MatrixXd E2 = -B2tP * h.B1 * G1 + (B2tP * h.B2 - h.R2) * G2 + B2tP * h.A;
    out.d1 = 2.0 * E1 * out.S;
    out.d2 = 2.0 * E2 * out.S;
    out.cost = (out.P * h.init_cov).trace() +
               h.gamma / (1.0 - h.gamma) * (out.P * h.noise_cov).trace();
    return out;
}

double half_cost(const MatrixXd& G1, const MatrixXd& G2, const HalfModel& h) {
    const MatrixXd F = h.A - h.B1 * G1 + h.B2 * G2;
    const MatrixXd W =
        h.Q + G1.transpose() * h.R1 * G1 - G2.transpose() * h.R2 * G2;
    const MatrixXd P = solve_discounted_lyapunov(F, symmetrize(W), h.gamma);
    return (P * h.init_cov).trace() + h.gamma / (1.0 - h.gamma) * (P * h.noise_cov).trace();
}

// DARE of the inner best-response problem: state matrix A + B2 G2, cost
// Q - G2^T R2 G2, control channel (B1, R1).
BestResponse best_response_half(const MatrixXd& G2, const HalfModel& h) {
    const MatrixXd Ak = h.A + h.B2 * G2;
    const MatrixXd Qk = symmetrize(h.Q - G2.transpose() * h.R2 * G2);
    const double gamma = h.gamma;

    MatrixXd P = MatrixXd::Zero(h.A.rows(), h.A.cols());
    long iter = 0;
    for (; iter < kMaxIterations; ++iter) {
        const MatrixXd inner = h.R1 + gamma * h.B1.transpose() * P * h.B1;
        if (!numerically_invertible(inner))
            throw IndefiniteInnerMatrix("R1 + gamma B1^T P B1 singular at iterate " +
                                        std::to_string(iter));
        const MatrixXd BtPA = h.B1.transpose() * P * Ak;
        const MatrixXd next = symmetrize(
            Qk + gamma * Ak.transpose() * P * Ak -
            gamma * gamma * BtPA.transpose() * inner.fullPivLu().solve(BtPA));
        const double res = (next - P).norm();
        P = next;
        if (!P.allFinite() || P.norm() > 1e12)
            throw NoConvergence("best-response DARE diverged");
        if (res <= 1e-12 * std::max(1.0, P.norm())) break;
    }
    if (iter >= kMaxIterations) throw NoConvergence("best-response DARE did not converge");

    const MatrixXd inner = h.R1 + gamma * h.B1.transpose() * P * h.B1;
    if (!is_positive_definite_flag(inner))
        throw IndefiniteInnerMatrix("R1 + gamma B1^T P B1 not positive definite at solution");

    BestResponse br;
    br.P = P;
    br.gain = gamma * inner.fullPivLu().solve(h.B1.transpose() * P * Ak);
    return br;
}

}  // namespace

double GradientBundle::norm() const {
    return std::sqrt(dK1.squaredNorm() + dL1.squaredNorm() + dK2.squaredNorm() +
                     dL2.squaredNorm());
}

double evaluate_cost(const PolicyProfile& theta, const ModelParams& m) {
    return evaluate_cost_parts(theta, m).total();
}

CostParts evaluate_cost_parts(const PolicyProfile& theta, const ModelParams& m) {
    require_stable(theta, m);
    CostParts parts;
    parts.y = half_cost(theta.K1, theta.K2, y_half(m));
    parts.z = half_cost(theta.L1, theta.L2, z_half(m));
    return parts;
}

GradientBundle exact_gradient(const PolicyProfile& theta, const ModelParams& m) {
    require_stable(theta, m);
    const HalfGradient gy = half_gradient(theta.K1, theta.K2, y_half(m));
    const HalfGradient gz = half_gradient(theta.L1, theta.L2, z_half(m));
    GradientBundle out;
    out.dK1 = gy.d1;
    out.dK2 = gy.d2;
    out.dL1 = gz.d1;
    out.dL2 = gz.d2;
    out.Py = gy.P;
    out.Pz = gz.P;
    out.Sy = gy.S;
    out.Sz = gz.S;
    out.cost = gy.cost + gz.cost;
    return out;
}

YGradient exact_gradient_y(const MatrixXd& K1, const MatrixXd& K2, const ModelParams& m) {
    const HalfGradient g = half_gradient(K1, K2, y_half(m));
    return {g.d1, g.d2, g.P, g.S};
}

ZGradient exact_gradient_z(const MatrixXd& L1, const MatrixXd& L2, const ModelParams& m) {
    const HalfGradient g = half_gradient(L1, L2, z_half(m));
    return {g.d1, g.d2, g.P, g.S};
}

BestResponse best_response_K1(const MatrixXd& K2, const ModelParams& m) {
    return best_response_half(K2, y_half(m));
}

BestResponse best_response_L1(const MatrixXd& L2, const ModelParams& m) {
    return best_response_half(L2, z_half(m));
}

}  // namespace zsmftg
