#include "zsmftg/optimize.hpp"

#include <cmath>
#include <limits>

#include "zsmftg/errors.hpp"
#include "zsmftg/gradient.hpp"

namespace zsmftg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class ExactSource final : public GradientSource {
public:
    explicit ExactSource(const ModelParams& m) : m_(m) {}
    PlayerGradient player(const PolicyProfile& theta, int p, long) override {
        const GradientBundle g = exact_gradient(theta, m_);
        if (p == 1) return {g.dK1, g.dL1};
        return {g.dK2, g.dL2};
    }

private:
    ModelParams m_;
};

class SampledSource final : public GradientSource {
public:
    SampledSource(const ModelParams& m, const SimSpec& spec, const Stream& stream, bool parallel)
        : m_(m), spec_(spec), stream_(stream), parallel_(parallel) {}
    PlayerGradient player(const PolicyProfile& theta, int p, long iter) override {
        const Stream s = stream_.sub(static_cast<std::uint64_t>(iter),
                                     static_cast<std::uint64_t>(p));
        const GradientEstimate est = estimate_gradient_player(theta, p, m_, spec_, s, parallel_);
        return {est.dK, est.dL};
    }

private:
    ModelParams m_;
    SimSpec spec_;
    Stream stream_;
    bool parallel_;
};

bool finite_policy(const PolicyProfile& theta) {
    return theta.K1.allFinite() && theta.L1.allFinite() && theta.K2.allFinite() &&
           theta.L2.allFinite();
}

class Trainer {
public:
    Trainer(const ModelParams& m, const TrainSpec& spec, std::optional<double> ref)
        : m_(m), spec_(spec), ref_(ref) {
        log_.d = m.d;
        log_.ell = m.ell;
    }

    // Records the iterate and enforces the exact-mode stabilizing-set and
    // finiteness safeguards.
    void observe(long iter, const PolicyProfile& theta, double grad_norm) {
        if (!finite_policy(theta))
            throw NoConvergence("iterate " + std::to_string(iter) + " has non-finite gains");
        const bool stable = check_stability(theta, m_).in_Theta;
        if (iter % spec_.log_every == 0) {
            IterateRecord rec;
            rec.iter = iter;
            rec.theta = theta;
            rec.in_Theta = stable;
            rec.grad_norm = grad_norm;
            rec.cost = stable ? evaluate_cost(theta, m_) : kNaN;
            rec.rel_error = (ref_ && std::isfinite(rec.cost) && *ref_ != 0.0)
                                ? std::abs(rec.cost - *ref_) / std::abs(*ref_)
                                : kNaN;
            log_.records.push_back(std::move(rec));
        }
        if (spec_.mode == TrainSpec::Mode::Exact && !stable)
            throw LeftStabilizingSet(
                "iterate " + std::to_string(iter) + " left the stabilizing set", iter);
    }

    IterateLog take() { return std::move(log_); }

private:
    const ModelParams& m_;
    const TrainSpec& spec_;
    std::optional<double> ref_;
    IterateLog log_;
};

}  // namespace

double PlayerGradient::norm() const {
    return std::sqrt(dK.squaredNorm() + dL.squaredNorm());
}

void validate_train_spec(const TrainSpec& spec) {
    if (!(spec.eta1 > 0.0) || !(spec.eta2 > 0.0))
        throw ConfigError("learning rates must be positive");
    if (spec.n1max < 1 || spec.n2max < 1) throw ConfigError("AG iteration counts must be >= 1");
    if (spec.iters < 1) throw ConfigError("GDA iteration count must be >= 1");
    if (spec.log_every < 1) throw ConfigError("log_every must be >= 1");
    if (spec.mode == TrainSpec::Mode::Sampled) validate_sim_spec(spec.estimator);
}

std::unique_ptr<GradientSource> make_exact_source(const ModelParams& m) {
    return std::make_unique<ExactSource>(m);
}

std::unique_ptr<GradientSource> make_sampled_source(const ModelParams& m, const SimSpec& spec,
                                                    const Stream& stream, bool parallel) {
    return std::make_unique<SampledSource>(m, spec, stream, parallel);
}

IterateLog train_ag(const ModelParams& m, const TrainSpec& spec, GradientSource& source,
                    std::optional<double> reference_value) {
    validate_train_spec(spec);
    Trainer trainer(m, spec, reference_value);
    PolicyProfile theta = spec.theta0;

    long k = 0;  // global iteration: one per inner theta1 update
    for (long n2 = 1; n2 <= spec.n2max; ++n2) {
        for (long n1 = 1; n1 <= spec.n1max; ++n1) {
            const PlayerGradient g1 = source.player(theta, 1, k + 1);
            theta.K1 -= spec.eta1 * g1.dK;
            theta.L1 -= spec.eta1 * g1.dL;
            ++k;
            if (n1 < spec.n1max) {
                trainer.observe(k, theta, g1.norm());
            } else {
                // theta2 ascends at the inner-final iterate; the iteration
                // counter does not advance for the outer update.
                const PlayerGradient g2 = source.player(theta, 2, k);
                theta.K2 += spec.eta2 * g2.dK;
                theta.L2 += spec.eta2 * g2.dL;
                trainer.observe(k, theta,
                                std::sqrt(g1.norm() * g1.norm() + g2.norm() * g2.norm()));
            }
        }
    }
    return trainer.take();
}

IterateLog train_gda(const ModelParams& m, const TrainSpec& spec, GradientSource& source,
                     std::optional<double> reference_value) {
    validate_train_spec(spec);
    Trainer trainer(m, spec, reference_value);
    PolicyProfile theta = spec.theta0;

    for (long n = 1; n <= spec.iters; ++n) {
        const PlayerGradient g1 = source.player(theta, 1, n);
        const PlayerGradient g2 = source.player(theta, 2, n);
        theta.K1 -= spec.eta1 * g1.dK;
        theta.L1 -= spec.eta1 * g1.dL;
        theta.K2 += spec.eta2 * g2.dK;
        theta.L2 += spec.eta2 * g2.dL;
        trainer.observe(n, theta, std::sqrt(g1.norm() * g1.norm() + g2.norm() * g2.norm()));
    }
    return trainer.take();
}

IterateLog train(const ModelParams& m, const TrainSpec& spec, GradientSource& source,
                 std::optional<double> reference_value) {
    if (spec.method == TrainSpec::Method::AG)
        return train_ag(m, spec, source, reference_value);
    return train_gda(m, spec, source, reference_value);
}

}  // namespace zsmftg
