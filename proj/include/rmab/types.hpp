#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rmab {

// Thrown when a computation degenerates numerically (NaN contamination,
// ill-conditioned system, unconvergence). The CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Thrown on malformed files or unwritable outputs. CLI exit code 3.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kNumActions = 2; // 0 = passive, 1 = active
inline constexpr double kRowSumTol = 1e-9;
inline constexpr double kIngestRowSumTol = 1e-6;

// Per-arm transition probabilities, indexed [state][action][next state].
struct TransitionKernel {
    int num_states = 0;
    std::vector<double> probs; // flattened, size num_states * 2 * num_states

    TransitionKernel() = default;
    explicit TransitionKernel(int m) : num_states(m), probs(static_cast<std::size_t>(m) * 2 * m, 0.0) {}

    double operator()(int s, int a, int sp) const {
        return probs[(static_cast<std::size_t>(s) * kNumActions + a) * num_states + sp];
    }
    double& at(int s, int a, int sp) {
        return probs[(static_cast<std::size_t>(s) * kNumActions + a) * num_states + sp];
    }
    const double* row(int s, int a) const {
        return probs.data() + (static_cast<std::size_t>(s) * kNumActions + a) * num_states;
    }
    double* row(int s, int a) {
        return probs.data() + (static_cast<std::size_t>(s) * kNumActions + a) * num_states;
    }
};

// State reward, shared across arms.
struct RewardVector {
    std::vector<double> values;

    RewardVector() = default;
    explicit RewardVector(std::vector<double> v) : values(std::move(v)) {}

    int size() const { return static_cast<int>(values.size()); }
    double span() const;
};

// Reward ladder used by the synthetic datasets: values[i] = i / (M - 1).
RewardVector ladder_reward(int num_states);

struct RmabInstance {
    std::vector<TransitionKernel> arms;
    RewardVector reward;
    int budget = 1;
    int horizon = 1;
    double discount = 0.99;

    int num_arms() const { return static_cast<int>(arms.size()); }
    int num_states() const { return arms.empty() ? reward.size() : arms.front().num_states; }
};

// Realized episode for all arms: [t][i] layout, t in [0, horizon).
// behavior_probs holds pi_beh(a_{t,i} | s_t) for the action actually taken.
struct Trajectory {
    int horizon = 0;
    int num_arms = 0;
    std::vector<int> states;
    std::vector<int> actions;
    std::vector<double> rewards;
    std::vector<double> behavior_probs;

    Trajectory() = default;
    Trajectory(int t, int n)
        : horizon(t), num_arms(n), states(static_cast<std::size_t>(t) * n, 0),
          actions(static_cast<std::size_t>(t) * n, 0), rewards(static_cast<std::size_t>(t) * n, 0.0),
          behavior_probs(static_cast<std::size_t>(t) * n, 1.0) {}

    std::size_t idx(int t, int i) const { return static_cast<std::size_t>(t) * num_arms + i; }
    int state(int t, int i) const { return states[idx(t, i)]; }
    int action(int t, int i) const { return actions[idx(t, i)]; }
    double reward(int t, int i) const { return rewards[idx(t, i)]; }
    double behavior_prob(int t, int i) const { return behavior_probs[idx(t, i)]; }
};

// Returns every invariant violation with an index path; empty means valid.
std::vector<std::string> validate_instance(const RmabInstance& inst);

// Trajectory-level checks against its owning instance (budget, reward match).
std::vector<std::string> validate_trajectory(const Trajectory& traj, const RmabInstance& inst);

// Sum_{t} gamma^{t-1} sum_i rewards[t][i]. Requires gamma in (0, 1].
double discounted_return(const Trajectory& traj, double gamma);

} // namespace rmab
