#include "rmab/whittle_diff.hpp"

#include "rmab/parallel.hpp"

#include <cmath>
#include <string>

namespace rmab {

Eigen::MatrixXd RowSelection::selector() const {
    const int m = static_cast<int>(chosen_action.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + 1, 2 * m);
    for (int s = 0; s < m; ++s) a(s, chosen_action[s] == 0 ? s : m + s) = 1.0;
    a(m, target_state + m) = 1.0; // active equality at the target state
    return a;
}

RowSelection select_rows(const TransitionKernel& kernel, const RewardVector& reward, double gamma,
                         int target_state, const SubsidizedValues& vals) {
    const int m = kernel.num_states;
    RowSelection sel;
    sel.target_state = target_state;
    sel.chosen_action.resize(m);

    for (int s = 0; s < m; ++s) {
        const double q0 = vals.q(s, 0);
        const double q1 = vals.q(s, 1);
        const double v = vals.values[s];
        // The stored values must satisfy one of the two equalities; otherwise
        // they were not computed at this kernel/subsidy.
        if (std::min(std::abs(v - q0), std::abs(v - q1)) > kIndifferenceTol)
            throw std::runtime_error("select_rows: inconsistent value functions at state " +
                                     std::to_string(s) + " (stale subsidized values)");
        sel.chosen_action[s] = (q0 >= q1 - kIndifferenceTol) ? 0 : 1;
    }

    if (std::abs(vals.q(target_state, 0) - vals.q(target_state, 1)) > kIndifferenceTol)
        throw std::runtime_error(
            "select_rows: actions not indifferent at target state " + std::to_string(target_state) +
            " (values not computed at the Whittle subsidy)");
    sel.chosen_action[target_state] = 0;
    return sel;
}

void assemble_system(const TransitionKernel& kernel, const RewardVector& reward, double gamma,
                     const RowSelection& sel, Eigen::MatrixXd& lhs, Eigen::VectorXd& rhs) {
    const int m = kernel.num_states;
    lhs.setZero(m + 1, m + 1);
    rhs.setZero(m + 1);
    auto fill_row = [&](int r, int s, int a) {
        lhs(r, 0) = (a == 0) ? 1.0 : 0.0;
        for (int sp = 0; sp < m; ++sp) lhs(r, 1 + sp) = gamma * kernel(s, a, sp);
        lhs(r, 1 + s) -= 1.0;
        rhs(r) = -reward.values[s];
    };
    for (int s = 0; s < m; ++s) fill_row(s, s, sel.chosen_action[s]);
    fill_row(m, sel.target_state, 1);
}

IndexGradient solve_and_differentiate(const TransitionKernel& kernel, const RewardVector& reward,
                                      double gamma, int target_state, const SubsidizedValues& vals) {
    const int m = kernel.num_states;
    const RowSelection sel = select_rows(kernel, reward, gamma, target_state, vals);

    Eigen::MatrixXd lhs;
    Eigen::VectorXd rhs;
    assemble_system(kernel, reward, gamma, sel, lhs, rhs);

    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(lhs);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        if (!(smin > 0.0) || smax / smin > kConditionLimit)
            throw NumericError("solve_and_differentiate: ill-conditioned system at target state " +
                               std::to_string(target_state));
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    const Eigen::VectorXd x = lu.solve(rhs);

    if (std::abs(x(0) - vals.subsidy) > kIndexAgreementTol)
        throw NumericError("solve_and_differentiate: row selection inconsistent (solved index " +
                           std::to_string(x(0)) + " vs binary search " + std::to_string(vals.subsidy) +
                           ")");

    // dW/dP(s,a,s') = -gamma * V(s') * [lhs^-1]_{0, row(s,a)}; one transposed
    // solve yields the needed row of the inverse for every right-hand side.
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(m + 1);
    e0(0) = 1.0;
    const Eigen::VectorXd inv_row0 = lhs.transpose().partialPivLu().solve(e0);

    IndexGradient out;
    out.index = x(0);
    out.values.assign(x.data() + 1, x.data() + 1 + m);
    out.kernel_jac.assign(static_cast<std::size_t>(m) * kNumActions * m, 0.0);
    out.reward_jac.assign(m, 0.0);

    auto add_row = [&](int r, int s, int a) {
        for (int sp = 0; sp < m; ++sp)
            out.kernel_jac[(static_cast<std::size_t>(s) * kNumActions + a) * m + sp] +=
                -gamma * x(1 + sp) * inv_row0(r);
        out.reward_jac[s] += -inv_row0(r);
    };
    for (int s = 0; s < m; ++s) add_row(s, s, sel.chosen_action[s]);
    add_row(m, target_state, 1);
    return out;
}

WhittleJacobian whittle_jacobian(const RmabInstance& inst, const WhittleTable& table, int threads) {
    const int n = inst.num_arms();
    const int m = inst.num_states();
    WhittleJacobian jac;
    jac.num_arms = n;
    jac.num_states = m;
    jac.grads.assign(static_cast<std::size_t>(n) * m * m * kNumActions * m, 0.0);

    parallel_for(n, threads, [&](int i) {
        for (int u = 0; u < m; ++u) {
            try {
                IndexGradient g =
                    solve_and_differentiate(inst.arms[i], inst.reward, inst.discount, u, table.values(i, u));
                std::copy(g.kernel_jac.begin(), g.kernel_jac.end(), jac.grads.begin() + jac.block(i, u));
            } catch (const std::exception& e) {
                throw std::runtime_error("whittle_jacobian: arm " + std::to_string(i) + ", state " +
                                         std::to_string(u) + ": " + e.what());
            }
        }
    });
    return jac;
}

} // namespace rmab
