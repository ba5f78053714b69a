#pragma once

#include "rmab/policy.hpp"
#include "rmab/rng.hpp"
#include "rmab/types.hpp"

#include <string>
#include <vector>

namespace rmab {

struct EvalReport {
    double value = 0.0;
    double std_error = 0.0;
    std::string variant; // "cwpdis" | "single-trajectory" | "simulation"
    int horizon = 0;
    int num_arms = 0;
    // Mean importance weight per (t, i); positive for interior target
    // policies, zero where a deterministic target disagrees with every
    // logged action prefix (those cells contribute nothing to the value).
    std::vector<double> mean_weights;

    std::string to_json() const;
};

// Consistent weighted per-decision importance sampling over >= 2 trajectories:
//   value = sum_{t,i} gamma^{t-1} E_tau[r_{t,i} rho_{t,i}] / E_tau[rho_{t,i}]
// with rho the running product of target/behavior action probabilities,
// accumulated in log space. pull_probs holds, per trajectory, the flattened
// [t][i] marginal pull probability of the target policy at the observed
// state. When `grad` is non-null it receives d(value)/d(pull_prob) in the
// same layout (defined for interior probabilities).
EvalReport cwpdis_eval(const std::vector<std::vector<double>>& pull_probs,
                       const std::vector<Trajectory>& trajs, double gamma,
                       std::vector<std::vector<double>>* grad = nullptr);

// Single-trajectory variant with non-multiplicative weights: each decision is
// treated as its own length-1 segment and weights are normalized per arm by
// their time average:
//   value = sum_{i,t} gamma^{t-1} r_{t,i} rho'_{t,i} / mean_{t'} rho'_{t',i}
EvalReport cwpdis_eval_single(const std::vector<double>& pull_probs, const Trajectory& traj,
                              double gamma, std::vector<double>* grad = nullptr);

// Monte-Carlo mean of the discounted return of `policy` on the given
// dynamics. Episode e uses the rng stream base_rng.split(e); with a null
// initial state, arms start independently uniform over states.
EvalReport simulate_eval(const std::vector<TransitionKernel>& kernels, const RewardVector& reward,
                         int horizon, double gamma, const WhittlePolicy& policy, int episodes,
                         const Rng& base_rng, const std::vector<int>* initial_state = nullptr);

struct EmpiricalKernels {
    std::vector<TransitionKernel> kernels;
    // missing[i][s*2+a] = 1 when the (s,a) row of arm i was never observed
    // and was filled uniformly.
    std::vector<std::vector<int>> missing;
};

// Transition counts per arm normalized into kernels; unobserved rows are
// flagged and filled with 1/M.
EmpiricalKernels empirical_kernels(const std::vector<Trajectory>& trajs, int num_states);

} // namespace rmab
