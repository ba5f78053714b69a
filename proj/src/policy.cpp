#include "rmab/policy.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace rmab {

namespace {

std::vector<double> gather_indices(const WhittleTable& table, const std::vector<int>& joint_state) {
    if (static_cast<int>(joint_state.size()) != table.num_arms)
        throw std::invalid_argument("policy: joint state size != number of arms");
    std::vector<double> scores(table.num_arms);
    for (int i = 0; i < table.num_arms; ++i) {
        const int s = joint_state[i];
        if (s < 0 || s >= table.num_states)
            throw std::invalid_argument("policy: state index outside [0, M) for arm " + std::to_string(i));
        scores[i] = table.index(i, s);
    }
    return scores;
}

} // namespace

PolicyOutput strict_policy(const WhittleTable& table, const std::vector<int>& joint_state, int k) {
    const std::vector<double> scores = gather_indices(table, joint_state);
    const int n = static_cast<int>(scores.size());
    if (k < 0 || k > n) throw std::invalid_argument("strict_policy: k outside [0, N]");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    PolicyOutput out;
    out.pull_probs.assign(n, 0.0);
    for (int r = 0; r < k; ++r) out.pull_probs[order[r]] = 1.0;
    return out;
}

SoftTopKState soft_policy_state(const WhittleTable& table, const std::vector<int>& joint_state, int k,
                                const SoftTopKConfig& cfg) {
    return soft_topk_forward(gather_indices(table, joint_state), k, cfg);
}

PolicyOutput soft_policy(const WhittleTable& table, const std::vector<int>& joint_state, int k,
                         const SoftTopKConfig& cfg) {
    PolicyOutput out;
    out.pull_probs = soft_policy_state(table, joint_state, k, cfg).probs;
    return out;
}

std::vector<double> WhittlePolicy::pull_probs(const std::vector<int>& joint_state) const {
    switch (kind) {
    case PolicyKind::kStrict:
        return strict_policy(*table, joint_state, budget).pull_probs;
    case PolicyKind::kSoft:
        return soft_policy(*table, joint_state, budget, topk).pull_probs;
    case PolicyKind::kNoAction:
        return std::vector<double>(joint_state.size(), 0.0);
    case PolicyKind::kRandom:
        return std::vector<double>(joint_state.size(),
                                   static_cast<double>(budget) / static_cast<double>(joint_state.size()));
    }
    throw std::logic_error("unreachable policy kind");
}

std::vector<int> WhittlePolicy::act(const std::vector<int>& joint_state, Rng& rng) const {
    const int n = static_cast<int>(joint_state.size());
    std::vector<int> actions(n, 0);
    switch (kind) {
    case PolicyKind::kNoAction:
        return actions;
    case PolicyKind::kStrict: {
        const PolicyOutput out = strict_policy(*table, joint_state, budget);
        for (int i = 0; i < n; ++i) actions[i] = out.pull_probs[i] > 0.5 ? 1 : 0;
        return actions;
    }
    case PolicyKind::kRandom: {
        // Uniform size-K subset via partial Fisher-Yates.
        std::vector<int> ids(n);
        std::iota(ids.begin(), ids.end(), 0);
        for (int r = 0; r < budget; ++r) {
            const int j = r + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - r)));
            std::swap(ids[r], ids[j]);
            actions[ids[r]] = 1;
        }
        return actions;
    }
    case PolicyKind::kSoft: {
        // Sequential selection of `budget` arms without replacement,
        // proportional to the remaining pull probabilities.
        std::vector<double> remaining = soft_policy(*table, joint_state, budget, topk).pull_probs;
        for (int r = 0; r < budget; ++r) {
            double total = std::accumulate(remaining.begin(), remaining.end(), 0.0);
            int pick = -1;
            if (total > 1e-12) {
                double target = rng.uniform() * total;
                for (int i = 0; i < n; ++i) {
                    if (remaining[i] <= 0.0) continue;
                    target -= remaining[i];
                    if (target <= 0.0) {
                        pick = i;
                        break;
                    }
                }
                if (pick < 0) { // guard against roundoff exhausting the scan
                    for (int i = n - 1; i >= 0; --i)
                        if (remaining[i] > 0.0) {
                            pick = i;
                            break;
                        }
                }
            } else {
                // All mass consumed numerically; fall back to the first
                // unselected arm to keep the draw feasible.
                for (int i = 0; i < n; ++i)
                    if (actions[i] == 0) {
                        pick = i;
                        break;
                    }
            }
            actions[pick] = 1;
            remaining[pick] = 0.0;
        }
        return actions;
    }
    }
    throw std::logic_error("unreachable policy kind");
}

} // namespace rmab
