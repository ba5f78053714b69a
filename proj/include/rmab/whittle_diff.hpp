#pragma once

#include "rmab/whittle.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rmab {

inline constexpr double kConditionLimit = 1e12;
inline constexpr double kIndexAgreementTol = 1e-4;

// Which Bellman equality holds at each state under the precomputed values.
// Rows 0..M-1 of the selected system carry state s with chosen_action[s]
// (ties resolved to passive); row M carries the active action at the target
// state, whose passive twin already sits among the first M rows.
struct RowSelection {
    int target_state = 0;
    std::vector<int> chosen_action; // per state, 0 = passive, 1 = active

    // Dense (M+1) x 2M selector with a single 1 per row; stacked-row index j
    // is `s` for the passive equality at s and `M + s` for the active one.
    Eigen::MatrixXd selector() const;
};

RowSelection select_rows(const TransitionKernel& kernel, const RewardVector& reward, double gamma,
                         int target_state, const SubsidizedValues& vals);

// Selected Bellman system over the unknowns x = [m, V(0), ..., V(M-1)]:
// the row for state s with action a has coefficient 1 on m iff a is passive,
// gamma*P(s,a,.) - e_s on V, and right-hand side -R(s).
void assemble_system(const TransitionKernel& kernel, const RewardVector& reward, double gamma,
                     const RowSelection& sel, Eigen::MatrixXd& lhs, Eigen::VectorXd& rhs);

struct IndexGradient {
    double index = 0.0;
    std::vector<double> values;     // V solved from the system
    std::vector<double> kernel_jac; // dW/dP, [s][a][s'] flattened
    std::vector<double> reward_jac; // dW/dR, per state

    double jac(int s, int a, int sp, int num_states) const {
        return kernel_jac[(static_cast<std::size_t>(s) * kNumActions + a) * num_states + sp];
    }
};

// Solves the selected system and differentiates the index through it with
// the implicit function theorem: dx = lhs^-1 (drhs - dlhs x), where a kernel
// entry P(s,a,s') touches only its selected row with coefficient gamma in
// column s'. Unselected (s,a) rows do not constrain the solution, so their
// entries carry zero derivative. Requires vals computed at m = W(target).
IndexGradient solve_and_differentiate(const TransitionKernel& kernel, const RewardVector& reward,
                                      double gamma, int target_state, const SubsidizedValues& vals);

struct WhittleJacobian {
    int num_arms = 0;
    int num_states = 0;
    // [i][u][s][a][s'] flattened
    std::vector<double> grads;

    std::size_t block(int arm, int u) const {
        return (static_cast<std::size_t>(arm) * num_states + u) * num_states * kNumActions * num_states;
    }
    double at(int arm, int u, int s, int a, int sp) const {
        return grads[block(arm, u) + (static_cast<std::size_t>(s) * kNumActions + a) * num_states + sp];
    }
};

// Full dW/dP for every (arm, state) pair of the table. Pairs are independent;
// each costs one (M+1) factorization reused across all 2M^2 right-hand sides.
WhittleJacobian whittle_jacobian(const RmabInstance& inst, const WhittleTable& table, int threads = 1);

} // namespace rmab
