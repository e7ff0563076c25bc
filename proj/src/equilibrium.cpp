#include "zsmftg/equilibrium.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "zsmftg/errors.hpp"
#include "zsmftg/gradient.hpp"

namespace zsmftg {

namespace {

// Saddle gains from the blocks at a solved P. Explicit Schur-branch
// formulas when the needed inverses exist, joint least squares otherwise.
struct GainPair {
    MatrixXd G1, G2;
    bool degenerate = false;
    double stationarity_residual = 0.0;
};

GainPair saddle_gains(const BlockOperators& b) {
    GainPair out;
    bool explicit_ok = false;

    if (numerically_invertible(b.N2) && numerically_invertible(b.N1)) {
        const MatrixXd N2inv = b.N2.fullPivLu().inverse();
        const MatrixXd N1inv = b.N1.fullPivLu().inverse();
        const MatrixXd M1 = b.L12 * N2inv * b.L12.transpose() - b.N1;
        const MatrixXd M2 = b.L12.transpose() * N1inv * b.L12 - b.N2;
        if (numerically_invertible(M1) && numerically_invertible(M2)) {
            out.G1 = -M1.fullPivLu().solve(b.L1.transpose() - b.L12 * N2inv * b.L2.transpose());
            out.G2 = -M2.fullPivLu().solve(b.L2.transpose() -
                                           b.L12.transpose() * N1inv * b.L1.transpose());
            explicit_ok = true;
        }
    }
    if (!explicit_ok) {
        // -N1 G1 + L12 G2 = -L1^T, -L12^T G1 + N2 G2 = -L2^T solved jointly.
        const Eigen::Index ell = b.N1.rows();
        const Eigen::Index d = b.L1.rows();
        MatrixXd lhs(2 * ell, 2 * ell);
        lhs << -b.N1, b.L12, -b.L12.transpose(), b.N2;
        MatrixXd rhs(2 * ell, d);
        rhs << -b.L1.transpose(), -b.L2.transpose();
        const MatrixXd sol = lhs.completeOrthogonalDecomposition().solve(rhs);
        out.G1 = sol.topRows(ell);
        out.G2 = sol.bottomRows(ell);
        out.degenerate = true;
    }

    const double r1 = (-b.N1 * out.G1 + b.L12 * out.G2 + b.L1.transpose()).norm();
    const double r2 = (-b.L12.transpose() * out.G1 + b.N2 * out.G2 + b.L2.transpose()).norm();
    out.stationarity_residual = std::max(r1, r2);
    return out;
}

void require_invertible(const MatrixXd& M, const std::string& name) {
    if (!numerically_invertible(M))
        throw AssumptionViolated(name + " is numerically singular (smallest singular value " +
                                 std::to_string(smallest_singular_value(M)) + ")");
}

// Damped gradient ascent on G2 with G1 best-responding; stops when the
// ascent gradient norm drops below tol.
template <typename BestResponseFn, typename AscentGradFn>
MatrixXd best_response_root(MatrixXd G2, BestResponseFn best_response, AscentGradFn ascent_grad,
                            double tol) {
    double eta = 1.0;
    MatrixXd g = ascent_grad(best_response(G2), G2);
    double gnorm = g.norm();
    for (long iter = 0; iter < 100000; ++iter) {
        if (gnorm <= tol) return G2;
        const MatrixXd G2_next = G2 + eta * g;
        MatrixXd g_next;
        double gnorm_next = std::numeric_limits<double>::infinity();
        bool ok = true;
        try {
            g_next = ascent_grad(best_response(G2_next), G2_next);
            gnorm_next = g_next.norm();
        } catch (const Error&) {
            ok = false;
        }
        if (!ok || gnorm_next > gnorm) {
            eta *= 0.5;
            if (eta < 1e-14) throw NoConvergence("best-response root search stalled");
            continue;
        }
        G2 = G2_next;
        g = g_next;
        gnorm = gnorm_next;
        if (eta < 1.0) eta *= 1.5;
    }
    throw NoConvergence("best-response root search did not converge");
}

}  // namespace

SaddleSolution closed_loop_saddle(const ModelParams& m, double are_tol) {
    const RiccatiSolution ry = solve_are_saddle(m, AreVariant::y, are_tol);
    const RiccatiSolution rz = solve_are_saddle(m, AreVariant::z, are_tol);

    const BlockOperators by = assemble_blocks(ry.P, m, AreVariant::y);
    const BlockOperators bz = assemble_blocks(rz.P, m, AreVariant::z);
    const GainPair ky = saddle_gains(by);
    const GainPair kz = saddle_gains(bz);

    SaddleSolution s;
    s.P = ry.P;
    s.Pbar = rz.P;
    s.residual_y = ry.residual_norm;
    s.residual_z = rz.residual_norm;
    s.theta_star.K1 = ky.G1;
    s.theta_star.K2 = ky.G2;
    s.theta_star.L1 = kz.G1;
    s.theta_star.L2 = kz.G2;
    s.degenerate_gains = ky.degenerate || kz.degenerate;
    s.stationarity_residual = std::max(ky.stationarity_residual, kz.stationarity_residual);

    s.cond_y = ry.n1_pos && ry.n2_neg;
    s.cond_z = rz.n1_pos && rz.n2_neg;
    s.in_Theta = check_stability(s.theta_star, m).in_Theta;
    s.convex_concave = check_convexity_concavity(m).holds;

    s.value_y_init = (s.P * m.noise.init_idio.covariance()).trace();
    s.value_z_init = (s.Pbar * m.noise.init_common.covariance()).trace();
    const double disc = m.gamma / (1.0 - m.gamma);
    s.value_y_noise = disc * (s.P * m.noise.Sigma1).trace();
    s.value_z_noise = disc * (s.Pbar * m.noise.Sigma0).trace();
    s.value = s.value_y_init + s.value_z_init + s.value_y_noise + s.value_z_noise;
    return s;
}

OpenLoopFeedback open_loop_feedback(const ModelParams& m) {
    const OpenLoopSolution ol = solve_open_loop_riccati(m);
    OpenLoopFeedback fb;
    fb.Gamma1P = ol.Gamma1 * ol.P.P;
    fb.Gamma2P = ol.Gamma2 * ol.P.P;
    fb.Lambda1Pbar = ol.Lambda1 * ol.Pbar.P;
    fb.Lambda2Pbar = ol.Lambda2 * ol.Pbar.P;
    return fb;
}

ConnectionReport verify_connection(const ModelParams& m, double are_tol) {
    if (m.ell != m.d)
        throw AssumptionViolated("connection identities need ell = d, got ell = " +
                                 std::to_string(m.ell) + ", d = " + std::to_string(m.d));
    const TildeParams t = derive_tilde(m);
    require_invertible(m.A, "A");
    require_invertible(t.Atil, "A + Abar");
    require_invertible(m.B1, "B1");
    require_invertible(m.B2, "B2");
    require_invertible(m.R1, "R1");
    require_invertible(m.R2, "R2");
    require_invertible(t.B1til, "B1 + B1bar");
    require_invertible(t.B2til, "B2 + B2bar");
    require_invertible(t.R1til, "R1 + R1bar");
    require_invertible(t.R2til, "R2 + R2bar");

    const OpenLoopSolution ol = solve_open_loop_riccati(m, are_tol);
    const RiccatiSolution ry = solve_are_saddle(m, AreVariant::y, are_tol);
    const RiccatiSolution rz = solve_are_saddle(m, AreVariant::z, are_tol);
    const GainPair ky = saddle_gains(assemble_blocks(ry.P, m, AreVariant::y));
    const GainPair kz = saddle_gains(assemble_blocks(rz.P, m, AreVariant::z));

    ConnectionReport rep;
    rep.Pc_from_Po = 0.5 * m.A.transpose() * ol.P.P + m.Q;
    rep.transform_residual_y = (ry.P - rep.Pc_from_Po).norm();
    rep.transform_residual_z =
        (rz.P - (0.5 * t.Atil.transpose() * ol.Pbar.P + t.Qtil)).norm();
    rep.gain_identity_residual_y =
        (-m.B1 * ky.G1 + m.B2 * ky.G2 - (m.B1 * ol.Gamma1 + m.B2 * ol.Gamma2) * ol.P.P).norm();
    rep.gain_identity_residual_z =
        (-t.B1til * kz.G1 + t.B2til * kz.G2 -
         (t.B1til * ol.Lambda1 + t.B2til * ol.Lambda2) * ol.Pbar.P)
            .norm();
    return rep;
}

ConvexityReport check_convexity_concavity(const ModelParams& m) {
    ConvexityReport rep;
    rep.holds = true;
    int idx = 0;
    for (bool meanfield : {false, true}) {
        for (int player : {1, 2}) {
            DareReport& r = rep.dares[idx++];
            r.player = player;
            r.meanfield = meanfield;
            try {
                const RiccatiSolution sol = solve_dare(m, player, meanfield);
                r.solved = true;
                r.inner_pd = sol.n1_pos;
                r.stabilizing = sol.stabilizing;
                r.residual = sol.residual_norm;
                r.P = sol.P;
            } catch (const Error& e) {
                r.solved = false;
                r.error = e.what();
            }
            if (!(r.solved && r.inner_pd)) rep.holds = false;
        }
    }
    return rep;
}

PolicyProfile saddle_via_best_response(const ModelParams& m) {
    const MatrixXd zero = MatrixXd::Zero(m.ell, m.d);

    const MatrixXd K2 = best_response_root(
        zero, [&](const MatrixXd& g2) { return best_response_K1(g2, m).gain; },
        [&](const MatrixXd& k1, const MatrixXd& g2) {
            return exact_gradient_y(k1, g2, m).dK2;
        },
        1e-8);
    const MatrixXd L2 = best_response_root(
        zero, [&](const MatrixXd& g2) { return best_response_L1(g2, m).gain; },
        [&](const MatrixXd& l1, const MatrixXd& g2) {
            return exact_gradient_z(l1, g2, m).dL2;
        },
        1e-8);

    PolicyProfile theta;
    theta.K2 = K2;
    theta.K1 = best_response_K1(K2, m).gain;
    theta.L2 = L2;
    theta.L1 = best_response_L1(L2, m).gain;
    return theta;
}

}  // namespace zsmftg
