#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "zsmftg/model.hpp"
#include "zsmftg/simulator.hpp"

namespace zsmftg {

struct TrainSpec {
    enum class Method { AG, GDA };
    enum class Mode { Exact, Sampled };

    Method method = Method::GDA;
    Mode mode = Mode::Exact;
    double eta1 = 0.1;
    double eta2 = 0.1;
    long n1max = 10;   // AG inner iterations
    long n2max = 200;  // AG outer iterations
    long iters = 2000; // GDA iterations
    PolicyProfile theta0;
    SimSpec estimator;  // sampled mode
    long log_every = 1;
};

void validate_train_spec(const TrainSpec& spec);

struct IterateRecord {
    long iter = 0;
    PolicyProfile theta;
    double cost = 0.0;       // NaN when the iterate is outside Theta
    double rel_error = 0.0;  // |cost - C*| / |C*|; NaN when no reference
    double grad_norm = 0.0;  // norm of the update gradient(s) at this iteration
    bool in_Theta = false;
};

struct IterateLog {
    int d = 0;
    int ell = 0;
    std::vector<IterateRecord> records;
};

struct PlayerGradient {
    MatrixXd dK, dL;
    double norm() const;
};

// Where the training loops get their gradients: exact (model-based) or
// estimated from rollouts (sample-based).
class GradientSource {
public:
    virtual ~GradientSource() = default;
    // Gradient of the utility w.r.t. the given player's (K, L); iter labels
    // the update for RNG substream purposes.
    virtual PlayerGradient player(const PolicyProfile& theta, int player, long iter) = 0;
};

std::unique_ptr<GradientSource> make_exact_source(const ModelParams& m);
std::unique_ptr<GradientSource> make_sampled_source(const ModelParams& m, const SimSpec& spec,
                                                    const Stream& stream, bool parallel = true);

// Alternating gradient: eta1-descent on theta1 repeated n1max times between
// eta2-ascent updates of theta2, n2max outer rounds; the inner loop warm
// starts from the previous outer iterate.
IterateLog train_ag(const ModelParams& m, const TrainSpec& spec, GradientSource& source,
                    std::optional<double> reference_value = std::nullopt);

// Simultaneous gradient-descent-ascent: both updates at iteration n use
// gradients evaluated at the previous iterate.
IterateLog train_gda(const ModelParams& m, const TrainSpec& spec, GradientSource& source,
                     std::optional<double> reference_value = std::nullopt);

IterateLog train(const ModelParams& m, const TrainSpec& spec, GradientSource& source,
                 std::optional<double> reference_value = std::nullopt);

}  // namespace zsmftg
