#pragma once

#include "rmab/types.hpp"

namespace fixtures {

// Two-state arm where pulling flips the drift at state 0 and is irrelevant at
// state 1; used across the solver and differentiation tests.
//   passive: s0 -> (0.8, 0.2), s1 -> (0.5, 0.5)
//   active:  s0 -> (0.2, 0.8), s1 -> (0.5, 0.5)
// With R = [0, 1] and gamma = 0.5 the subsidized system at the state-0 index
// solves exactly to m = 6/17, V = (16/17, 36/17) on the passive branch and
// (6/23, 16/23, 36/23) on the rejected active branch (hand linear algebra).
inline rmab::TransitionKernel flip_drift_kernel() {
    rmab::TransitionKernel k(2);
    k.at(0, 0, 0) = 0.8;
    k.at(0, 0, 1) = 0.2;
    k.at(0, 1, 0) = 0.2;
    k.at(0, 1, 1) = 0.8;
    k.at(1, 0, 0) = 0.5;
    k.at(1, 0, 1) = 0.5;
    k.at(1, 1, 0) = 0.5;
    k.at(1, 1, 1) = 0.5;
    return k;
}

inline rmab::RewardVector binary_reward() { return rmab::RewardVector({0.0, 1.0}); }

// Kernel whose passive and active rows coincide at every state.
inline rmab::TransitionKernel identical_action_kernel() {
    rmab::TransitionKernel k(2);
    k.at(0, 0, 0) = 0.7;
    k.at(0, 0, 1) = 0.3;
    k.at(0, 1, 0) = 0.7;
    k.at(0, 1, 1) = 0.3;
    k.at(1, 0, 0) = 0.4;
    k.at(1, 0, 1) = 0.6;
    k.at(1, 1, 0) = 0.4;
    k.at(1, 1, 1) = 0.6;
    return k;
}

inline rmab::RmabInstance two_arm_instance(double gamma = 0.5) {
    rmab::RmabInstance inst;
    inst.arms = {flip_drift_kernel(), identical_action_kernel()};
    inst.reward = binary_reward();
    inst.budget = 1;
    inst.horizon = 4;
    inst.discount = gamma;
    return inst;
}

} // namespace fixtures
