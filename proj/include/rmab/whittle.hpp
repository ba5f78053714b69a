#pragma once

#include "rmab/types.hpp"

#include <vector>

namespace rmab {

// Stopping tolerances for the subsidized Bellman machinery. The action
// indifference tolerance is deliberately looser than the bracket stop so the
// row selection downstream has slack.
inline constexpr double kValueIterationTol = 1e-9;
inline constexpr double kBracketWidthTol = 1e-9;
inline constexpr double kIndifferenceTol = 1e-6;

// Fixed point of the subsidized Bellman equations at a given subsidy:
//   Q(s,a) = m*[a==0] + R(s) + gamma * sum_s' P(s,a,s') V(s')
//   V(s)   = max_a Q(s,a)
struct SubsidizedValues {
    double subsidy = 0.0;
    std::vector<double> values;   // V(s)
    std::vector<double> q_values; // [s][a]

    double q(int s, int a) const { return q_values[static_cast<std::size_t>(s) * kNumActions + a]; }
};

// Value iteration from V = 0 until the sup-norm residual is <= tol. The
// iteration count is bounded by ceil(log(residual_0 / tol) / log(1/gamma));
// exceeding the bound means NaN contamination and raises NumericError.
SubsidizedValues value_iteration(const TransitionKernel& kernel, const RewardVector& reward,
                                 double gamma, double subsidy, double tol = kValueIterationTol);

struct WhittleResult {
    double index = 0.0;
    SubsidizedValues values; // computed at subsidy = index
};

// Smallest subsidy making the passive action as rewarding as the active one
// in the target state, found by bisection over
// [-span(R)/(1-gamma), +span(R)/(1-gamma)], halved until the bracket width is
// <= kBracketWidthTol. Throws std::runtime_error("...index outside bracket")
// when the endpoints do not straddle indifference (non-indexable or
// degenerate arm).
WhittleResult whittle_index(const TransitionKernel& kernel, const RewardVector& reward, double gamma,
                            int target_state, double vi_tol = kValueIterationTol,
                            double bracket_tol = kBracketWidthTol);

struct WhittleTable {
    int num_arms = 0;
    int num_states = 0;
    std::vector<double> indices;              // [i][u]
    std::vector<SubsidizedValues> values_at_index; // [i][u]

    double index(int arm, int state) const {
        return indices[static_cast<std::size_t>(arm) * num_states + state];
    }
    const SubsidizedValues& values(int arm, int state) const {
        return values_at_index[static_cast<std::size_t>(arm) * num_states + state];
    }
};

// Indices of all arms and all states; arms are evaluated independently (and
// concurrently when threads > 1, writing into preallocated per-arm slots).
WhittleTable whittle_table(const RmabInstance& inst, int threads = 1);

} // namespace rmab
