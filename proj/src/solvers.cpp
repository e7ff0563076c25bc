#include "zsmftg/solvers.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "zsmftg/errors.hpp"

namespace zsmftg {

namespace {

constexpr long kMaxIterations = 100000;

MatrixXd symmetrize(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

// Coefficient view shared by the y-variant (raw) and z-variant (tilde).
struct Coefficients {
    MatrixXd A, B1, B2, Q, R1, R2;
};

Coefficients coefficients(const ModelParams& m, AreVariant variant) {
    if (variant == AreVariant::y) return {m.A, m.B1, m.B2, m.Q, m.R1, m.R2};
    const TildeParams t = derive_tilde(m);
    return {t.Atil, t.B1til, t.B2til, t.Qtil, t.R1til, t.R2til};
}

BlockOperators blocks_from(const MatrixXd& P, const Coefficients& c, double gamma) {
    BlockOperators b;
    const MatrixXd AtP = gamma * c.A.transpose() * P;
    b.M = AtP * c.A - P + c.Q;
    b.L1 = AtP * c.B1;
    b.L2 = AtP * c.B2;
    b.L12 = gamma * c.B1.transpose() * P * c.B2;
    b.N1 = gamma * c.B1.transpose() * P * c.B1 + c.R1;
    b.N2 = gamma * c.B2.transpose() * P * c.B2 - c.R2;

    const Eigen::Index d = c.A.rows();
    const Eigen::Index ell = c.B1.cols();
    b.Lfull.resize(d, 2 * ell);
    b.Lfull << b.L1, b.L2;
    b.Nfull.resize(2 * ell, 2 * ell);
    b.Nfull << b.N1, b.L12, b.L12.transpose(), b.N2;
    return b;
}

MatrixXd robust_inverse(const MatrixXd& M, const char* what) {
    if (!numerically_invertible(M))
        throw Singular(std::string(what) + " is numerically singular (smallest singular value " +
                       std::to_string(smallest_singular_value(M)) + ")");
    return M.fullPivLu().inverse();
}

}  // namespace

double smallest_singular_value(const MatrixXd& M) {
    return M.jacobiSvd().singularValues().minCoeff();
}

bool numerically_invertible(const MatrixXd& M) {
    if (M.rows() != M.cols() || M.size() == 0) return false;
    const VectorXd sv = M.jacobiSvd().singularValues();
    return sv.minCoeff() >= kSingularRelTol * sv.maxCoeff() && sv.maxCoeff() > 0.0;
}

bool is_positive_definite_flag(const MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(M));
    return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > kDefiniteEigTol;
}

bool is_negative_definite_flag(const MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(M));
    return es.info() == Eigen::Success && es.eigenvalues().maxCoeff() < -kDefiniteEigTol;
}

MatrixXd solve_discounted_lyapunov(const MatrixXd& F, const MatrixXd& W, double gamma) {
    if (F.rows() != F.cols() || W.rows() != W.cols() || F.rows() != W.rows())
        throw DimensionMismatch("discounted Lyapunov equation needs square F, W of equal size");
    const double nF = operator_norm(F);
    if (gamma * nF * nF >= 1.0)
        throw Unstable("gamma ||F||^2 = " + std::to_string(gamma * nF * nF) + " >= 1");

    // Doubling on the series sum_t gamma^t (F^T)^t W F^t: each pass squares
    // the propagator, so the remainder contracts like rho^(2^k).
    MatrixXd S = W;
    MatrixXd G = std::sqrt(gamma) * F;
    const double floor = 1e-18 * std::max(1.0, W.norm());
    bool converged = false;
    for (int k = 0; k < 200; ++k) {
        const MatrixXd incr = G.transpose() * S * G;
        S += incr;
        if (incr.norm() <= floor) {
            converged = true;
            break;
        }
        G = (G * G).eval();
    }
    if (!converged) throw NoConvergence("discounted Lyapunov doubling did not converge");
    S = symmetrize(S);

    const double res = (S - W - gamma * F.transpose() * S * F).norm();
    if (res > 1e-11 * std::max(1.0, S.norm()))
        throw NoConvergence("discounted Lyapunov residual " + std::to_string(res));
    return S;
}

MatrixXd solve_discounted_covariance(const MatrixXd& F, const MatrixXd& Sigma_init,
                                     const MatrixXd& Sigma_noise, double gamma) {
    const MatrixXd W = Sigma_init + gamma / (1.0 - gamma) * Sigma_noise;
    // Sigma = W + gamma F Sigma F^T is the transposed-coefficient Lyapunov form.
    return solve_discounted_lyapunov(F.transpose(), W, gamma);
}

BlockOperators assemble_blocks(const MatrixXd& P, const ModelParams& m, AreVariant variant) {
    return blocks_from(P, coefficients(m, variant), m.gamma);
}

MatrixXd invert_block_n(const BlockOperators& b) {
    const Eigen::Index ell = b.N1.rows();
    MatrixXd inv(2 * ell, 2 * ell);

    if (numerically_invertible(b.N1)) {
        const MatrixXd N1inv = b.N1.fullPivLu().inverse();
        const MatrixXd S2 = b.N2 - b.L12.transpose() * N1inv * b.L12;
        if (numerically_invertible(S2)) {
            const MatrixXd S2inv = S2.fullPivLu().inverse();
            const MatrixXd U = N1inv * b.L12 * S2inv;
            inv.topLeftCorner(ell, ell) = N1inv + U * b.L12.transpose() * N1inv;
            inv.topRightCorner(ell, ell) = -U;
            inv.bottomLeftCorner(ell, ell) = -U.transpose();
            inv.bottomRightCorner(ell, ell) = S2inv;
            return inv;
        }
    }
    if (numerically_invertible(b.N2)) {
        const MatrixXd N2inv = b.N2.fullPivLu().inverse();
        const MatrixXd S1 = b.N1 - b.L12 * N2inv * b.L12.transpose();
        if (numerically_invertible(S1)) {
            const MatrixXd S1inv = S1.fullPivLu().inverse();
            const MatrixXd V = S1inv * b.L12 * N2inv;
            inv.topLeftCorner(ell, ell) = S1inv;
            inv.topRightCorner(ell, ell) = -V;
            inv.bottomLeftCorner(ell, ell) = -V.transpose();
            inv.bottomRightCorner(ell, ell) = N2inv + N2inv * b.L12.transpose() * S1inv * b.L12 * N2inv;
            return inv;
        }
    }
    throw Singular("block matrix N(P) is singular in both branches (smallest singular value " +
                   std::to_string(smallest_singular_value(b.Nfull)) + ")");
}

RiccatiSolution solve_are_saddle(const ModelParams& m, AreVariant variant, double tol) {
    const Coefficients c = coefficients(m, variant);
    const double gamma = m.gamma;

    const double nA = operator_norm(c.A);
    MatrixXd P = (gamma * nA * nA < 1.0) ? solve_discounted_lyapunov(c.A, c.Q, gamma)
                                         : symmetrize(c.Q);

    // Fixed point P <- Q + gamma A^T P A - L(P) N(P)^{-1} L(P)^T, damped when
    // the step residual grows.
    const MatrixXd P0 = P;
    double alpha = 1.0;
    double prev_res = std::numeric_limits<double>::infinity();
    long iter = 0;
    for (; iter < kMaxIterations; ++iter) {
        BlockOperators b = blocks_from(P, c, gamma);
        MatrixXd Ninv;
        try {
            Ninv = invert_block_n(b);
        } catch (const Singular&) {
            if (alpha < 1e-12)
                throw Singular("N(P) singular at an ARE iterate and damping exhausted");
            alpha *= 0.5;
            P = symmetrize((1.0 - alpha) * P + alpha * P0);  // retreat toward the warm start
            continue;
        }
        const MatrixXd target =
            symmetrize(c.Q + gamma * c.A.transpose() * P * c.A - b.Lfull * Ninv * b.Lfull.transpose());
        const double res = (target - P).norm();
        if (res > prev_res && alpha > 1e-12) alpha *= 0.5;
        P = symmetrize((1.0 - alpha) * P + alpha * target);
        prev_res = res;
        if (res <= tol) break;
        if (!P.allFinite()) throw NoConvergence("ARE iteration diverged to non-finite values");
    }
    if (iter >= kMaxIterations)
        throw NoConvergence("saddle ARE fixed point did not reach tolerance " +
                            std::to_string(tol));

    RiccatiSolution sol;
    sol.P = P;
    sol.iterations = iter + 1;
    const BlockOperators b = blocks_from(P, c, gamma);
    sol.residual_norm = (b.M - b.Lfull * invert_block_n(b) * b.Lfull.transpose()).norm();
    sol.n1_pos = is_positive_definite_flag(b.N1);
    sol.n2_neg = is_negative_definite_flag(b.N2);
    return sol;
}

RiccatiSolution solve_dare(const ModelParams& m, int player, bool meanfield) {
    if (player != 1 && player != 2) throw Error("player must be 1 or 2");
    const TildeParams t = derive_tilde(m);
    const MatrixXd& A = meanfield ? t.Atil : m.A;
    const MatrixXd& B = meanfield ? (player == 1 ? t.B1til : t.B2til)
                                  : (player == 1 ? m.B1 : m.B2);
    const MatrixXd& R = meanfield ? (player == 1 ? t.R1til : t.R2til)
                                  : (player == 1 ? m.R1 : m.R2);
    const double sign = (player == 1) ? 1.0 : -1.0;
    const MatrixXd Qs = sign * (meanfield ? t.Qtil : m.Q);
    const double gamma = m.gamma;

    // Value iteration from 0.
    MatrixXd P = MatrixXd::Zero(m.d, m.d);
    long iter = 0;
    for (; iter < kMaxIterations; ++iter) {
        const MatrixXd inner = gamma * B.transpose() * P * B + R;
        if (!numerically_invertible(inner))
            throw IndefiniteInnerMatrix("gamma B^T P B + R singular at DARE iterate " +
                                        std::to_string(iter));
        const MatrixXd BtPA = B.transpose() * P * A;
        const MatrixXd next = symmetrize(Qs + gamma * A.transpose() * P * A -
                                         gamma * gamma * BtPA.transpose() *
                                             inner.fullPivLu().solve(BtPA));
        const double res = (next - P).norm();
        P = next;
        if (!P.allFinite() || P.norm() > 1e12)
            throw NoConvergence("DARE value iteration diverged");
        if (res <= 1e-12 * std::max(1.0, P.norm())) break;
    }
    if (iter >= kMaxIterations) throw NoConvergence("DARE value iteration did not converge");

    RiccatiSolution sol;
    sol.P = P;
    sol.iterations = iter + 1;
    const MatrixXd inner = gamma * B.transpose() * P * B + R;
    const MatrixXd BtPA = B.transpose() * P * A;
    sol.residual_norm = (Qs - P + gamma * A.transpose() * P * A -
                         gamma * gamma * BtPA.transpose() * inner.fullPivLu().solve(BtPA))
                            .norm();
    sol.n1_pos = is_positive_definite_flag(inner);
    const MatrixXd K = gamma * inner.fullPivLu().solve(B.transpose() * P * A);
    const double nK = operator_norm(A - B * K);
    sol.stabilizing = gamma * nK * nK < 1.0;
    return sol;
}

OpenLoopSolution solve_open_loop_riccati(const ModelParams& m, double tol) {
    const TildeParams t = derive_tilde(m);
    OpenLoopSolution out;
    out.Gamma1 = -0.5 * robust_inverse(m.R1, "R1") * m.B1.transpose();
    out.Gamma2 = 0.5 * robust_inverse(m.R2, "R2") * m.B2.transpose();
    out.Lambda1 = -0.5 * robust_inverse(t.R1til, "R1 + R1bar") * t.B1til.transpose();
    out.Lambda2 = 0.5 * robust_inverse(t.R2til, "R2 + R2bar") * t.B2til.transpose();

    const auto solve_one = [&](const MatrixXd& A, const MatrixXd& Q, const MatrixXd& Phi,
                               const char* what) {
        // Damped fixed point on P <- gamma [A^T P + 2Q](A + Phi P), from 0 so
        // the zero branch is returned when Q = 0.
        MatrixXd P = MatrixXd::Zero(m.d, m.d);
        double alpha = 1.0;
        double prev_res = std::numeric_limits<double>::infinity();
        long iter = 0;
        for (; iter < kMaxIterations; ++iter) {
            const MatrixXd target = m.gamma * (A.transpose() * P + 2.0 * Q) * (A + Phi * P);
            const double res = (target - P).norm();
            if (res > prev_res && alpha > 1e-12) alpha *= 0.5;
            P = (1.0 - alpha) * P + alpha * target;
            prev_res = res;
            if (!P.allFinite()) throw NoConvergence(std::string(what) + " iteration diverged");
            if (res <= tol) break;
        }
        if (iter >= kMaxIterations)
            throw NoConvergence(std::string(what) + " fixed point did not converge");
        RiccatiSolution sol;
        sol.P = P;
        sol.iterations = iter + 1;
        sol.residual_norm = (m.gamma * (A.transpose() * P + 2.0 * Q) * (A + Phi * P) - P).norm();
        const double nF = operator_norm(A + Phi * P);
        sol.stabilizing = m.gamma * nF * nF < 1.0;
        return sol;
    };

    out.P = solve_one(m.A, m.Q, m.B1 * out.Gamma1 + m.B2 * out.Gamma2, "open-loop Riccati P");
    out.Pbar = solve_one(t.Atil, t.Qtil, t.B1til * out.Lambda1 + t.B2til * out.Lambda2,
                         "open-loop Riccati Pbar");
    return out;
}

}  // namespace zsmftg
