#include "zsmftg/simulator.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "zsmftg/errors.hpp"
#include "zsmftg/gradient.hpp"
#include "zsmftg/solvers.hpp"

namespace zsmftg {

namespace {

// Substream labels. mkv_rollout and n_agent_rollout share the common-noise
// labels so paired runs from one Stream see identical common shocks.
constexpr std::uint64_t kInitIdio = 1;
constexpr std::uint64_t kInitCommon = 2;
constexpr std::uint64_t kStepIdio = 3;
constexpr std::uint64_t kStepCommon = 4;
constexpr std::uint64_t kPerturb = 5;
constexpr std::uint64_t kRollout = 6;
constexpr std::uint64_t kAgentInitIdio = 7;
constexpr std::uint64_t kAgentStepIdio = 8;
constexpr std::uint64_t kSample = 9;

double sample_scalar(const DistributionSpec& d, Sequence& seq) {
    switch (d.kind) {
        case DistributionSpec::Kind::PointMass:
            return 0.0;
        case DistributionSpec::Kind::Uniform:
            return d.half_width * (2.0 * seq.u01() - 1.0);
        case DistributionSpec::Kind::Gaussian:
            return d.transform_scalar() * seq.gauss();
    }
    return 0.0;
}

void check_policy_dims(const PolicyProfile& theta, const ModelParams& m) {
    for (const MatrixXd* G : {&theta.K1, &theta.L1, &theta.K2, &theta.L2})
        if (G->rows() != m.ell || G->cols() != m.d)
            throw DimensionMismatch("policy gain has shape " + std::to_string(G->rows()) + "x" +
                                    std::to_string(G->cols()) + ", expected " +
                                    std::to_string(m.ell) + "x" + std::to_string(m.d));
}

struct ClosedLoop {
    MatrixXd Fy, Fz;  // closed-loop state matrices
    MatrixXd Wy, Wz;  // per-step cost quadratic forms
};

ClosedLoop closed_loop(const PolicyProfile& theta, const ModelParams& m) {
    const TildeParams t = derive_tilde(m);
    ClosedLoop cl;
    cl.Fy = m.A - m.B1 * theta.K1 + m.B2 * theta.K2;
    cl.Fz = t.Atil - t.B1til * theta.L1 + t.B2til * theta.L2;
    cl.Wy = m.Q + theta.K1.transpose() * m.R1 * theta.K1 -
            theta.K2.transpose() * m.R2 * theta.K2;
    cl.Wz = t.Qtil + theta.L1.transpose() * t.R1til * theta.L1 -
            theta.L2.transpose() * t.R2til * theta.L2;
    return cl;
}

RolloutSample mkv_rollout_impl(const PolicyProfile& theta, const ModelParams& m,
                               const SimSpec& spec, const Stream& stream, const VectorXd* y0_pin,
                               const VectorXd* z0_pin) {
    check_policy_dims(theta, m);
    validate_sim_spec(spec);
    const ClosedLoop cl = closed_loop(theta, m);
    const long T = spec.horizon;

    RolloutSample out;
    if (spec.record_per_step) out.per_step.reserve(T);

    Sequence seq_i = stream.sub(kStepIdio).seq();
    Sequence seq_c = stream.sub(kStepCommon).seq();

    if (m.d == 1 && m.ell == 1) {
        const double fy = cl.Fy(0, 0), fz = cl.Fz(0, 0);
        const double wy = cl.Wy(0, 0), wz = cl.Wz(0, 0);
        double y, z;
        if (y0_pin) {
            y = (*y0_pin)(0);
        } else {
            Sequence s = stream.sub(kInitIdio).seq();
            y = sample_scalar(m.noise.init_idio, s);
        }
        if (z0_pin) {
            z = (*z0_pin)(0);
        } else {
            Sequence s = stream.sub(kInitCommon).seq();
            z = sample_scalar(m.noise.init_common, s);
        }
        double disc = 1.0, utility = 0.0;
        for (long t = 0; t < T; ++t) {
            const double c = wy * y * y + wz * z * z;
            utility += disc * c;
            if (spec.record_per_step) out.per_step.emplace_back(t, c);
            disc *= m.gamma;
            if (t + 1 < T) {
                y = fy * y + sample_scalar(m.noise.step_idio, seq_i);
                z = fz * z + sample_scalar(m.noise.step_common, seq_c);
            }
        }
        out.utility = utility;
        return out;
    }

    VectorXd y, z;
    if (y0_pin) {
        y = *y0_pin;
    } else {
        Sequence s = stream.sub(kInitIdio).seq();
        y = m.noise.init_idio.sample(s);
    }
    if (z0_pin) {
        z = *z0_pin;
    } else {
        Sequence s = stream.sub(kInitCommon).seq();
        z = m.noise.init_common.sample(s);
    }
    double disc = 1.0, utility = 0.0;
    for (long t = 0; t < T; ++t) {
        const double c = y.dot(cl.Wy * y) + z.dot(cl.Wz * z);
        utility += disc * c;
        if (spec.record_per_step) out.per_step.emplace_back(t, c);
        disc *= m.gamma;
        if (t + 1 < T) {
            y = (cl.Fy * y + m.noise.step_idio.sample(seq_i)).eval();
            z = (cl.Fz * z + m.noise.step_common.sample(seq_c)).eval();
        }
    }
    out.utility = utility;
    return out;
}

struct Welford {
    long n = 0;
    double mean = 0.0, m2 = 0.0;
    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double std_error() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

template <typename SampleFn>
MeanUtility batch_mean(long n, bool parallel, SampleFn&& sample) {
    std::vector<double> vals(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static) if (parallel)
    for (long j = 0; j < n; ++j) vals[static_cast<std::size_t>(j)] = sample(j);
    Welford w;
    for (double v : vals) w.add(v);  // fixed order, independent of threading
    return {w.mean, w.std_error(), n};
}

}  // namespace

void validate_sim_spec(const SimSpec& spec) {
    if (spec.horizon < 1) throw ConfigError("horizon must be >= 1");
    if (spec.n_agents < 1) throw ConfigError("n_agents must be >= 1");
    if (spec.n_perturbations < 1) throw ConfigError("n_perturbations must be >= 1");
    if (!(spec.radius > 0.0)) throw ConfigError("radius must be > 0");
}

RolloutSample mkv_rollout(const PolicyProfile& theta, const ModelParams& m, const SimSpec& spec,
                          const Stream& stream) {
    return mkv_rollout_impl(theta, m, spec, stream, nullptr, nullptr);
}

RolloutSample mkv_rollout_from(const PolicyProfile& theta, const ModelParams& m,
                               const SimSpec& spec, const VectorXd& y0, const VectorXd& z0,
                               const Stream& stream) {
    if (y0.size() != m.d || z0.size() != m.d)
        throw DimensionMismatch("initial states must have dimension d");
    return mkv_rollout_impl(theta, m, spec, stream, &y0, &z0);
}

RolloutSample n_agent_rollout(const PolicyProfile& theta, const ModelParams& m,
                              const SimSpec& spec, const Stream& stream) {
    check_policy_dims(theta, m);
    validate_sim_spec(spec);
    const long N = spec.n_agents;
    const long T = spec.horizon;
    const TildeParams tl = derive_tilde(m);

    RolloutSample out;
    if (spec.record_per_step) out.per_step.reserve(T);

    Sequence seq_c = stream.sub(kStepCommon).seq();
    std::vector<Sequence> seq_i;
    seq_i.reserve(static_cast<std::size_t>(N));
    for (long i = 0; i < N; ++i) seq_i.push_back(stream.sub(kAgentStepIdio,
                                                            static_cast<std::uint64_t>(i)).seq());

    VectorXd e0;
    {
        Sequence s = stream.sub(kInitCommon).seq();
        e0 = m.noise.init_common.sample(s);
    }
    MatrixXd X(m.d, N);
    for (long i = 0; i < N; ++i) {
        Sequence s = stream.sub(kAgentInitIdio, static_cast<std::uint64_t>(i)).seq();
        X.col(i) = e0 + m.noise.init_idio.sample(s);
    }

    MatrixXd U1(m.ell, N), U2(m.ell, N), Xnext(m.d, N);
    double disc = 1.0, utility = 0.0;
    for (long t = 0; t < T; ++t) {
        const VectorXd xbar = X.rowwise().mean();
        const VectorXd u1_mean_part = -(theta.L1 * xbar);
        const VectorXd u2_mean_part = theta.L2 * xbar;
        for (long i = 0; i < N; ++i) {
            const VectorXd dev = X.col(i) - xbar;
            U1.col(i) = -(theta.K1 * dev) + u1_mean_part;
            U2.col(i) = theta.K2 * dev + u2_mean_part;
        }
        const VectorXd u1bar = U1.rowwise().mean();
        const VectorXd u2bar = U2.rowwise().mean();

        double dev_cost = 0.0;
        for (long i = 0; i < N; ++i) {
            const VectorXd xd = X.col(i) - xbar;
            const VectorXd u1d = U1.col(i) - u1bar;
            const VectorXd u2d = U2.col(i) - u2bar;
            dev_cost += xd.dot(m.Q * xd) + u1d.dot(m.R1 * u1d) - u2d.dot(m.R2 * u2d);
        }
        const double c = dev_cost / static_cast<double>(N) + xbar.dot(tl.Qtil * xbar) +
                         u1bar.dot(tl.R1til * u1bar) - u2bar.dot(tl.R2til * u2bar);
        utility += disc * c;
        if (spec.record_per_step) out.per_step.emplace_back(t, c);
        disc *= m.gamma;

        if (t + 1 < T) {
            const VectorXd eps0 = m.noise.step_common.sample(seq_c);
            const VectorXd drift =
                m.Abar * xbar + m.B1bar * u1bar + m.B2bar * u2bar + eps0;
            for (long i = 0; i < N; ++i) {
                Xnext.col(i) = m.A * X.col(i) + m.B1 * U1.col(i) + m.B2 * U2.col(i) + drift +
                               m.noise.step_idio.sample(seq_i[static_cast<std::size_t>(i)]);
            }
            X.swap(Xnext);
        }
    }
    out.utility = utility;
    return out;
}

VectorXd sample_sphere(int n_entries, double tau, Sequence& seq) {
    if (n_entries < 1) throw ConfigError("sample_sphere needs n_entries >= 1");
    if (!(tau > 0.0)) throw ConfigError("sample_sphere needs tau > 0");
    VectorXd g = seq.gauss_vec(n_entries);
    double nrm = g.norm();
    while (nrm == 0.0 || !std::isfinite(nrm)) {
        g = seq.gauss_vec(n_entries);
        nrm = g.norm();
    }
    return (tau / nrm) * g;
}

GradientEstimate estimate_gradient_player(const PolicyProfile& theta, int player,
                                          const ModelParams& m, const SimSpec& spec,
                                          const Stream& stream, bool parallel) {
    if (player != 1 && player != 2) throw Error("player must be 1 or 2");
    check_policy_dims(theta, m);
    validate_sim_spec(spec);
    const long M = spec.n_perturbations;
    const int n = m.ell * m.d;
    const double tau = spec.radius;
    const double scale = static_cast<double>(n) / (tau * tau);

    SimSpec rollout_spec = spec;
    rollout_spec.record_per_step = false;

    std::vector<double> util(static_cast<std::size_t>(M));
    MatrixXd VK(n, M), VL(n, M);

    using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                       Eigen::RowMajor>>;

#pragma omp parallel for schedule(static) if (parallel)
    for (long i = 0; i < M; ++i) {
        Sequence sv = stream.sub(kPerturb, static_cast<std::uint64_t>(i)).seq();
        const VectorXd vK = sample_sphere(n, tau, sv);
        const VectorXd vL = sample_sphere(n, tau, sv);
        PolicyProfile pert = theta;
        const RowMajorMap dK(vK.data(), m.ell, m.d);
        const RowMajorMap dL(vL.data(), m.ell, m.d);
        if (player == 1) {
            pert.K1 += dK;
            pert.L1 += dL;
        } else {
            pert.K2 += dK;
            pert.L2 += dL;
        }
        const Stream rs = stream.sub(kRollout, spec.crn ? 0 : static_cast<std::uint64_t>(i));
        util[static_cast<std::size_t>(i)] = mkv_rollout(pert, m, rollout_spec, rs).utility;
        VK.col(i) = vK;
        VL.col(i) = vL;
    }

    VectorXd sumK = VectorXd::Zero(n), sumL = VectorXd::Zero(n);
    VectorXd sumK2 = VectorXd::Zero(n), sumL2 = VectorXd::Zero(n);
    for (long i = 0; i < M; ++i) {
        const double c = util[static_cast<std::size_t>(i)];
        if (!std::isfinite(c))
            throw NonFiniteSample("rollout " + std::to_string(i) + " produced utility " +
                                      std::to_string(c),
                                  i);
        const VectorXd sK = (scale * c) * VK.col(i);
        const VectorXd sL = (scale * c) * VL.col(i);
        sumK += sK;
        sumL += sL;
        sumK2 += sK.cwiseProduct(sK);
        sumL2 += sL.cwiseProduct(sL);
    }

    const double Md = static_cast<double>(M);
    GradientEstimate est;
    est.n_samples = M;
    const VectorXd meanK = sumK / Md;
    const VectorXd meanL = sumL / Md;
    est.dK = RowMajorMap(meanK.data(), m.ell, m.d);
    est.dL = RowMajorMap(meanL.data(), m.ell, m.d);
    auto se = [&](const VectorXd& sum, const VectorXd& sum2) -> MatrixXd {
        if (M < 2) return MatrixXd::Zero(m.ell, m.d);
        const VectorXd var =
            ((sum2 - sum.cwiseProduct(sum) / Md) / (Md - 1.0)).cwiseMax(0.0);
        const VectorXd s = (var / Md).cwiseSqrt();
        return RowMajorMap(s.data(), m.ell, m.d);
    };
    est.dK_se = se(sumK, sumK2);
    est.dL_se = se(sumL, sumL2);
    return est;
}

MeanUtility mkv_mean_utility(const PolicyProfile& theta, const ModelParams& m,
                             const SimSpec& spec, long n_samples, const Stream& stream,
                             bool parallel) {
    SimSpec s = spec;
    s.record_per_step = false;
    return batch_mean(n_samples, parallel, [&](long j) {
        return mkv_rollout(theta, m, s, stream.sub(kSample, static_cast<std::uint64_t>(j)))
            .utility;
    });
}

MeanUtility n_agent_mean_utility(const PolicyProfile& theta, const ModelParams& m,
                                 const SimSpec& spec, long n_replications, const Stream& stream,
                                 bool parallel) {
    SimSpec s = spec;
    s.record_per_step = false;
    return batch_mean(n_replications, parallel, [&](long j) {
        return n_agent_rollout(theta, m, s, stream.sub(kSample, static_cast<std::uint64_t>(j)))
            .utility;
    });
}

MeanUtility n_agent_minus_mkv(const PolicyProfile& theta, const ModelParams& m,
                              const SimSpec& spec, long n_replications, const Stream& stream,
                              bool parallel) {
    SimSpec s = spec;
    s.record_per_step = false;
    return batch_mean(n_replications, parallel, [&](long j) {
        const Stream rep = stream.sub(kSample, static_cast<std::uint64_t>(j));
        return n_agent_rollout(theta, m, s, rep).utility - mkv_rollout(theta, m, s, rep).utility;
    });
}

double truncation_tail(const PolicyProfile& theta, const ModelParams& m, long horizon) {
    const GradientBundle g = exact_gradient(theta, m);
    const TildeParams tl = derive_tilde(m);
    const MatrixXd Fy = m.A - m.B1 * theta.K1 + m.B2 * theta.K2;
    const MatrixXd Fz = tl.Atil - tl.B1til * theta.L1 + tl.B2til * theta.L2;

    MatrixXd Sy = m.noise.init_idio.covariance();
    MatrixXd Sz = m.noise.init_common.covariance();
    for (long t = 0; t < horizon; ++t) {
        Sy = (Fy * Sy * Fy.transpose() + m.noise.Sigma1).eval();
        Sz = (Fz * Sz * Fz.transpose() + m.noise.Sigma0).eval();
    }
    const double disc = m.gamma / (1.0 - m.gamma);
    const double from_T = (g.Py * Sy).trace() + (g.Pz * Sz).trace() +
                          disc * ((g.Py * m.noise.Sigma1).trace() +
                                  (g.Pz * m.noise.Sigma0).trace());
    return std::pow(m.gamma, static_cast<double>(horizon)) * from_T;
}

}  // namespace zsmftg
