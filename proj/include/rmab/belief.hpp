#pragma once

#include "rmab/whittle.hpp"
#include "rmab/whittle_diff.hpp"

#include <string>
#include <vector>

namespace rmab {

// Fully observable reduction of a 2-state collapsing bandit. Belief states
// are (last observed state omega, steps since observation d), d in [1..T],
// enumerated as id = omega * T + (d - 1), with belief e_omega * P_passive^d.
// A passive step moves (omega, d) -> (omega, d+1) deterministically (d stays
// capped at T); pulling reveals the next true state, splitting to (s', 1)
// with probability (belief * P_active)(s'). The chain reward is belief . R.
struct BeliefChain {
    int horizon = 0;                  // d cap
    std::vector<double> beliefs;      // [chain id][underlying state]
    TransitionKernel kernel;          // over 2*horizon chain states
    RewardVector reward;

    int num_chain_states() const { return 2 * horizon; }
    int id(int omega, int d) const { return omega * horizon + (d - 1); }
    int omega_of(int chain_id) const { return chain_id / horizon; }
    int d_of(int chain_id) const { return chain_id % horizon + 1; }
    double belief(int chain_id, int s) const { return beliefs[static_cast<std::size_t>(chain_id) * 2 + s]; }

    // Mapping block for serialized chains: [{"id","omega","d"}, ...].
    std::string annotation_json() const;
};

// Requires a 2-state kernel (the collapsing-bandit subclass).
BeliefChain expand_belief_chain(const TransitionKernel& kernel, const RewardVector& reward, int horizon);

struct BeliefWhittleResult {
    BeliefChain chain;
    std::vector<double> indices; // per chain state
    // dW(chain state)/dP(s,a,s') on the underlying 2-state kernel, obtained by
    // chaining the selected-system derivatives through the belief construction
    // (product rule through the passive matrix powers).
    std::vector<double> jacobian; // [chain id][s][a][s'], inner size 8

    double jac(int chain_id, int s, int a, int sp) const {
        return jacobian[(static_cast<std::size_t>(chain_id) * 2 + s) * 2 * 2 + a * 2 + sp];
    }
};

BeliefWhittleResult belief_whittle(const TransitionKernel& kernel, const RewardVector& reward,
                                   double gamma, int horizon);

} // namespace rmab
