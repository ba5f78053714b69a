#include "rmab/whittle.hpp"

#include "rmab/parallel.hpp"

#include <cmath>
#include <string>

namespace rmab {

namespace {

// One Bellman backup; returns the sup-norm residual. Ties pick the passive
// action's value (identical by definition of a tie).
double backup(const TransitionKernel& kernel, const RewardVector& reward, double gamma, double subsidy,
              const std::vector<double>& v, std::vector<double>& v_next, std::vector<double>& q) {
    const int m = kernel.num_states;
    double residual = 0.0;
    for (int s = 0; s < m; ++s) {
        double q0 = 0.0, q1 = 0.0;
        const double* p0 = kernel.row(s, 0);
        const double* p1 = kernel.row(s, 1);
        for (int sp = 0; sp < m; ++sp) {
            q0 += p0[sp] * v[sp];
            q1 += p1[sp] * v[sp];
        }
        q0 = subsidy + reward.values[s] + gamma * q0;
        q1 = reward.values[s] + gamma * q1;
        q[static_cast<std::size_t>(s) * 2] = q0;
        q[static_cast<std::size_t>(s) * 2 + 1] = q1;
        const double vn = q0 >= q1 ? q0 : q1;
        residual = std::max(residual, std::abs(vn - v[s]));
        v_next[s] = vn;
    }
    return residual;
}

} // namespace

SubsidizedValues value_iteration(const TransitionKernel& kernel, const RewardVector& reward,
                                 double gamma, double subsidy, double tol) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("value_iteration: gamma outside (0, 1)");
    const int m = kernel.num_states;
    SubsidizedValues out;
    out.subsidy = subsidy;
    out.values.assign(m, 0.0);
    out.q_values.assign(static_cast<std::size_t>(m) * kNumActions, 0.0);

    std::vector<double> next(m, 0.0);
    double residual = backup(kernel, reward, gamma, subsidy, out.values, next, out.q_values);
    out.values.swap(next);
    if (residual <= tol) return out;

    // Contraction: residual_n <= gamma^n * residual_0.
    const long bound = static_cast<long>(std::ceil(std::log(residual / tol) / std::log(1.0 / gamma))) + 2;
    for (long it = 0; it < bound; ++it) {
        residual = backup(kernel, reward, gamma, subsidy, out.values, next, out.q_values);
        out.values.swap(next);
        if (residual <= tol) return out;
    }
    throw NumericError("value_iteration: no convergence within the contraction bound (subsidy " +
                       std::to_string(subsidy) + "); inputs are likely contaminated by NaN");
}

WhittleResult whittle_index(const TransitionKernel& kernel, const RewardVector& reward, double gamma,
                            int target_state, double vi_tol, double bracket_tol) {
    const int m = kernel.num_states;
    if (target_state < 0 || target_state >= m)
        throw std::invalid_argument("whittle_index: target state outside [0, M)");

    const double span = reward.span();
    double lo = -span / (1.0 - gamma);
    double hi = span / (1.0 - gamma);

    auto gap = [&](double subsidy) {
        SubsidizedValues vals = value_iteration(kernel, reward, gamma, subsidy, vi_tol);
        return vals.q(target_state, 0) - vals.q(target_state, 1);
    };

    if (lo == hi) {
        // Constant reward: the bracket is degenerate and the only candidate is 0.
        WhittleResult res;
        res.values = value_iteration(kernel, reward, gamma, 0.0, vi_tol);
        res.index = 0.0;
        if (std::abs(res.values.q(target_state, 0) - res.values.q(target_state, 1)) > kIndifferenceTol)
            throw std::runtime_error("whittle_index: index outside bracket (state " +
                                     std::to_string(target_state) + ")");
        return res;
    }

    if (gap(lo) > 0.0 || gap(hi) < 0.0)
        throw std::runtime_error("whittle_index: index outside bracket (state " +
                                 std::to_string(target_state) + "); arm may be non-indexable");

    while (hi - lo > bracket_tol) {
        const double mid = 0.5 * (lo + hi);
        if (gap(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }

    WhittleResult res;
    res.index = 0.5 * (lo + hi);
    res.values = value_iteration(kernel, reward, gamma, res.index, vi_tol);
    if (std::abs(res.values.q(target_state, 0) - res.values.q(target_state, 1)) > kIndifferenceTol)
        throw NumericError("whittle_index: actions not indifferent at the found subsidy (state " +
                           std::to_string(target_state) + ")");
    return res;
}

WhittleTable whittle_table(const RmabInstance& inst, int threads) {
    WhittleTable table;
    table.num_arms = inst.num_arms();
    table.num_states = inst.num_states();
    table.indices.assign(static_cast<std::size_t>(table.num_arms) * table.num_states, 0.0);
    table.values_at_index.assign(table.indices.size(), SubsidizedValues{});

    parallel_for(table.num_arms, threads, [&](int i) {
        for (int u = 0; u < table.num_states; ++u) {
            try {
                WhittleResult res = whittle_index(inst.arms[i], inst.reward, inst.discount, u);
                const std::size_t slot = static_cast<std::size_t>(i) * table.num_states + u;
                table.indices[slot] = res.index;
                table.values_at_index[slot] = std::move(res.values);
            } catch (const std::exception& e) {
                throw std::runtime_error("whittle_table: arm " + std::to_string(i) + ": " + e.what());
            }
        }
    });
    return table;
}

} // namespace rmab
