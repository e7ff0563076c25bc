#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "zsmftg/model.hpp"
#include "zsmftg/rng.hpp"

namespace zsmftg {

struct SimSpec {
    long horizon = 50;         // rollout truncation length
    long n_agents = 1;         // population size in N-agent mode
    long n_perturbations = 1;  // M in the sphere-smoothing estimator
    double radius = 0.1;       // perturbation radius tau
    std::uint64_t seed = 0;
    bool crn = false;  // reuse one noise stream across all perturbations
    bool record_per_step = false;
};

void validate_sim_spec(const SimSpec& spec);

struct RolloutSample {
    double utility = 0.0;
    std::vector<std::pair<long, double>> per_step;  // (t, c_t) when recorded
};

// One truncated discounted-utility sample of the exact (y, z) pair under
// the linear policy theta. Divergence shows up as a non-finite utility.
RolloutSample mkv_rollout(const PolicyProfile& theta, const ModelParams& m, const SimSpec& spec,
                          const Stream& stream);

// Same with pinned initial states instead of sampled ones.
RolloutSample mkv_rollout_from(const PolicyProfile& theta, const ModelParams& m,
                               const SimSpec& spec, const VectorXd& y0, const VectorXd& z0,
                               const Stream& stream);

// N coupled agents sharing the common noise, controls fed by empirical
// means; returns the truncated discounted average utility. A rollout built
// from the same Stream as an mkv_rollout sees the same common shocks.
RolloutSample n_agent_rollout(const PolicyProfile& theta, const ModelParams& m,
                              const SimSpec& spec, const Stream& stream);

// Uniform draw from the radius-tau sphere in R^n_entries.
VectorXd sample_sphere(int n_entries, double tau, Sequence& seq);

struct GradientEstimate {
    MatrixXd dK, dL;              // sphere-smoothing estimates, ell x d
    MatrixXd dK_se, dL_se;        // per-entry standard errors of the mean
    long n_samples = 0;
};

// Sphere-smoothing gradient estimate for one player's (K, L) pair; each of
// the M perturbations runs one independent rollout. Perturbations are
// embarrassingly parallel; the reduction runs in index order, so results
// are bitwise identical at any thread count.
GradientEstimate estimate_gradient_player(const PolicyProfile& theta, int player,
                                          const ModelParams& m, const SimSpec& spec,
                                          const Stream& stream, bool parallel = true);

struct MeanUtility {
    double mean = 0.0;
    double std_error = 0.0;
    long n = 0;
};

MeanUtility mkv_mean_utility(const PolicyProfile& theta, const ModelParams& m,
                             const SimSpec& spec, long n_samples, const Stream& stream,
                             bool parallel = true);

MeanUtility n_agent_mean_utility(const PolicyProfile& theta, const ModelParams& m,
                                 const SimSpec& spec, long n_replications, const Stream& stream,
                                 bool parallel = true);

// Paired difference mean over replications of (N-agent utility - MKV
// utility) with shared common noise; isolates the finite-population bias.
MeanUtility n_agent_minus_mkv(const PolicyProfile& theta, const ModelParams& m,
                              const SimSpec& spec, long n_replications, const Stream& stream,
                              bool parallel = true);

// Exact discounted cost mass beyond the truncation horizon,
//   sum_{t >= T} gamma^t E[c_t],
// from the closed-loop value and state second-moment recursions.
double truncation_tail(const PolicyProfile& theta, const ModelParams& m, long horizon);

}  // namespace zsmftg
