#pragma once

#include "rmab/rng.hpp"
#include "rmab/soft_topk.hpp"
#include "rmab/whittle.hpp"

#include <vector>

namespace rmab {

// Marginal per-arm pull probabilities at one joint state. Strict policies
// emit exactly `budget` ones; the soft policy sums to the budget.
struct PolicyOutput {
    std::vector<double> pull_probs;
};

// Indicator of the top-k Whittle indices gathered at the joint state; ties
// broken toward the lower arm index for reproducibility.
PolicyOutput strict_policy(const WhittleTable& table, const std::vector<int>& joint_state, int k);

// Soft top-k over the gathered index vector (differentiable with respect to
// the Whittle indices through the returned transport state).
SoftTopKState soft_policy_state(const WhittleTable& table, const std::vector<int>& joint_state, int k,
                                const SoftTopKConfig& cfg);
PolicyOutput soft_policy(const WhittleTable& table, const std::vector<int>& joint_state, int k,
                         const SoftTopKConfig& cfg);

enum class PolicyKind { kStrict, kSoft, kNoAction, kRandom };

// A simulatable policy over the table's indices. `act` samples a feasible
// action set; for the soft kind, arms are drawn sequentially without
// replacement proportional to the remaining pull probabilities.
struct WhittlePolicy {
    PolicyKind kind = PolicyKind::kStrict;
    const WhittleTable* table = nullptr;
    int budget = 1;
    int num_arms = 0; // used by the table-free kinds
    SoftTopKConfig topk;

    std::vector<double> pull_probs(const std::vector<int>& joint_state) const;
    std::vector<int> act(const std::vector<int>& joint_state, Rng& rng) const;
};

} // namespace rmab
