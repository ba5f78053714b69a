#include "fixtures.hpp"
#include "oracles.hpp"
#include "rmab/whittle_diff.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace rmab;

TEST_CASE("select_rows keeps the passive branch at state 1 of the flip-drift fixture") {
    const auto kernel = fixtures::flip_drift_kernel();
    const auto reward = fixtures::binary_reward();
    const WhittleResult res = whittle_index(kernel, reward, 0.5, 0);
    const RowSelection sel = select_rows(kernel, reward, 0.5, 0, res.values);
    CHECK(sel.target_state == 0);
    CHECK(sel.chosen_action[0] == 0); // tie at the target resolves passive
    CHECK(sel.chosen_action[1] == 0); // passive branch wins at state 1 (36/17 > 36/23)

    const Eigen::MatrixXd a = sel.selector();
    CHECK(a.rows() == 3);
    CHECK(a.cols() == 4);
    CHECK(a.sum() == doctest::Approx(3.0));
    for (int r = 0; r < a.rows(); ++r) CHECK(a.row(r).sum() == doctest::Approx(1.0));
    CHECK(a(2, 2) == 1.0); // row M selects the active equality at the target
}

TEST_CASE("select_rows picks passive everywhere for identical-action kernels") {
    const auto kernel = fixtures::identical_action_kernel();
    const auto reward = fixtures::binary_reward();
    const WhittleResult res = whittle_index(kernel, reward, 0.5, 1);
    const RowSelection sel = select_rows(kernel, reward, 0.5, 1, res.values);
    CHECK(sel.chosen_action == std::vector<int>{0, 0});
}

TEST_CASE("select_rows agrees with the argmax of the grid oracle's Q table") {
    Rng rng(3);
    const TransitionKernel kernel = oracles::random_kernel(4, rng);
    const RewardVector reward = ladder_reward(4);
    const double gamma = 0.6;
    for (int u = 0; u < 4; ++u) {
        const WhittleResult res = whittle_index(kernel, reward, gamma, u);
        const RowSelection sel = select_rows(kernel, reward, gamma, u, res.values);
        const auto oracle = oracles::oracle_values(kernel, reward, gamma, res.index);
        for (int s = 0; s < 4; ++s) {
            if (std::abs(oracle.q0[s] - oracle.q1[s]) <= kIndifferenceTol) {
                CHECK(sel.chosen_action[s] == 0); // tie rule
            } else {
                CHECK(sel.chosen_action[s] == (oracle.q0[s] > oracle.q1[s] ? 0 : 1));
            }
        }
    }
}

TEST_CASE("select_rows rejects stale value functions") {
    const auto kernel = fixtures::flip_drift_kernel();
    const auto reward = fixtures::binary_reward();
    WhittleResult res = whittle_index(kernel, reward, 0.5, 0);

    SUBCASE("values from the wrong subsidy") {
        const SubsidizedValues wrong = value_iteration(kernel, reward, 0.5, res.index + 0.2);
        CHECK_THROWS_WITH_AS(select_rows(kernel, reward, 0.5, 0, wrong),
                             doctest::Contains("not indifferent"), std::runtime_error);
    }
    SUBCASE("corrupted values") {
        res.values.values[1] += 0.5;
        CHECK_THROWS_WITH_AS(select_rows(kernel, reward, 0.5, 0, res.values),
                             doctest::Contains("inconsistent value functions"), std::runtime_error);
    }
}

TEST_CASE("assembled system reproduces the fixture's exact solution") {
    const auto kernel = fixtures::flip_drift_kernel();
    const auto reward = fixtures::binary_reward();
    const WhittleResult res = whittle_index(kernel, reward, 0.5, 0);
    const RowSelection sel = select_rows(kernel, reward, 0.5, 0, res.values);
    Eigen::MatrixXd lhs;
    Eigen::VectorXd rhs;
    assemble_system(kernel, reward, 0.5, sel, lhs, rhs);
    const Eigen::VectorXd x = lhs.partialPivLu().solve(rhs);
    CHECK(x(0) == doctest::Approx(6.0 / 17.0).epsilon(1e-12));
    CHECK(x(1) == doctest::Approx(16.0 / 17.0).epsilon(1e-12));
    CHECK(x(2) == doctest::Approx(36.0 / 17.0).epsilon(1e-12));
}

TEST_CASE("assembled 2-state system equals one of the closed-form layouts up to row order") {
    Rng rng(29);
    const TransitionKernel k = oracles::random_kernel(2, rng);
    const RewardVector reward = ladder_reward(2);
    const double g = 0.5;
    const int u = 0;
    const WhittleResult res = whittle_index(k, reward, g, u);
    const RowSelection sel = select_rows(k, reward, g, u, res.values);
    Eigen::MatrixXd lhs;
    Eigen::VectorXd rhs;
    assemble_system(k, reward, g, sel, lhs, rhs);

    // Closed-form candidates for the 2-state index at u = 0: the two target
    // rows plus state 1 resolved either passive or active.
    auto row = [&](int s, int a) {
        Eigen::RowVector3d r;
        r << (a == 0 ? 1.0 : 0.0), g * k(s, a, 0) - (s == 0 ? 1.0 : 0.0),
            g * k(s, a, 1) - (s == 1 ? 1.0 : 0.0);
        return r;
    };
    auto contains_row = [&](const Eigen::RowVector3d& target) {
        for (int r = 0; r < 3; ++r)
            if ((lhs.row(r) - target).cwiseAbs().maxCoeff() < 1e-12) return true;
        return false;
    };
    const bool passive_variant =
        contains_row(row(0, 0)) && contains_row(row(0, 1)) && contains_row(row(1, 0));
    const bool active_variant =
        contains_row(row(0, 0)) && contains_row(row(0, 1)) && contains_row(row(1, 1));
    CHECK((passive_variant || active_variant));
}

TEST_CASE("assembly at gamma = 0 leaves -I on the value block") {
    const auto kernel = fixtures::identical_action_kernel();
    const auto reward = fixtures::binary_reward();
    RowSelection sel;
    sel.target_state = 0;
    sel.chosen_action = {0, 0};
    Eigen::MatrixXd lhs;
    Eigen::VectorXd rhs;
    assemble_system(kernel, reward, 0.0, sel, lhs, rhs);
    CHECK(lhs.block(0, 1, 2, 2).isApprox(-Eigen::Matrix2d::Identity()));
    const Eigen::VectorXd x = lhs.partialPivLu().solve(rhs);
    CHECK(x(1) == doctest::Approx(reward.values[0]));
    CHECK(x(2) == doctest::Approx(reward.values[1]));
    CHECK(x(0) == doctest::Approx(0.0)); // identical kernels force a zero gap
}

TEST_CASE("solve_and_differentiate matches finite differences on the fixture") {
    const auto kernel = fixtures::flip_drift_kernel();
    const auto reward = fixtures::binary_reward();
    const WhittleResult res = whittle_index(kernel, reward, 0.5, 0);
    const IndexGradient grad = solve_and_differentiate(kernel, reward, 0.5, 0, res.values);
    CHECK(grad.index == doctest::Approx(6.0 / 17.0).epsilon(1e-7));

    auto index_of = [&](const TransitionKernel& k) {
        return whittle_index(k, reward, 0.5, 0, 1e-12, 1e-12).index;
    };
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
            for (int sp = 0; sp < 2; ++sp) {
                const double fd = oracles::fd_renormalized(kernel, s, a, sp, 1e-5, index_of);
                const double analytic = oracles::project_tangent(
                    grad.kernel_jac.data() + (static_cast<std::size_t>(s) * 2 + a) * 2,
                    kernel.row(s, a), 2, sp);
                CHECK(std::abs(fd - analytic) <= 1e-4);
            }
}

TEST_CASE("identical-action kernels have index zero and vanish along symmetric perturbations") {
    const auto kernel = fixtures::identical_action_kernel();
    const auto reward = fixtures::binary_reward();
    const double gamma = 0.7;
    for (int u = 0; u < 2; ++u) {
        const WhittleResult res = whittle_index(kernel, reward, gamma, u);
        const IndexGradient grad = solve_and_differentiate(kernel, reward, gamma, u, res.values);
        CHECK(std::abs(grad.index) < 1e-7);
        // tangent direction applied identically to both actions' rows
        Rng rng(100 + u);
        for (int s = 0; s < 2; ++s) {
            const double d0 = rng.uniform(-1.0, 1.0);
            const double d[2] = {d0, -d0};
            double directional = 0.0;
            for (int sp = 0; sp < 2; ++sp)
                directional += (grad.jac(s, 0, sp, 2) + grad.jac(s, 1, sp, 2)) * d[sp];
            CHECK(std::abs(directional) < 1e-8);
        }
    }
}

TEST_CASE("solved system agrees with the grid oracle on a random 3-state kernel") {
    Rng rng(19);
    const TransitionKernel kernel = oracles::random_kernel(3, rng);
    const RewardVector reward = ladder_reward(3);
    const double gamma = 0.5;
    for (int u = 0; u < 3; ++u) {
        const WhittleResult res = whittle_index(kernel, reward, gamma, u);
        const IndexGradient grad = solve_and_differentiate(kernel, reward, gamma, u, res.values);
        const double oracle = oracles::grid_search_whittle(kernel, reward, gamma, u);
        CHECK(std::abs(grad.index - oracle) <= 1e-3);
        const auto ov = oracles::oracle_values(kernel, reward, gamma, grad.index);
        for (int s = 0; s < 3; ++s) CHECK(grad.values[s] == doctest::Approx(ov.v[s]).epsilon(1e-5));
    }
}

TEST_CASE("whittle_jacobian blocks") {
    SUBCASE("identical arms produce identical blocks") {
        RmabInstance inst;
        inst.arms = {fixtures::flip_drift_kernel(), fixtures::flip_drift_kernel()};
        inst.reward = fixtures::binary_reward();
        inst.budget = 1;
        inst.horizon = 3;
        inst.discount = 0.5;
        const WhittleTable table = whittle_table(inst);
        const WhittleJacobian jac = whittle_jacobian(inst, table, 2);
        for (int u = 0; u < 2; ++u)
            for (int s = 0; s < 2; ++s)
                for (int a = 0; a < 2; ++a)
                    for (int sp = 0; sp < 2; ++sp)
                        CHECK(jac.at(0, u, s, a, sp) == doctest::Approx(jac.at(1, u, s, a, sp)));
    }
    SUBCASE("block equals a direct solve_and_differentiate call bit for bit") {
        RmabInstance inst;
        inst.arms = {fixtures::flip_drift_kernel(), fixtures::identical_action_kernel()};
        inst.reward = fixtures::binary_reward();
        inst.budget = 1;
        inst.horizon = 3;
        inst.discount = 0.5;
        const WhittleTable table = whittle_table(inst);
        const WhittleJacobian jac = whittle_jacobian(inst, table);
        const IndexGradient direct =
            solve_and_differentiate(inst.arms[0], inst.reward, inst.discount, 0, table.values(0, 0));
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a)
                for (int sp = 0; sp < 2; ++sp)
                    CHECK(jac.at(0, 0, s, a, sp) == direct.jac(s, a, sp, 2));
    }
    SUBCASE("random 3-state arms match finite differences") {
        Rng rng(23);
        RmabInstance inst;
        for (int i = 0; i < 5; ++i) inst.arms.push_back(oracles::random_kernel(3, rng));
        inst.reward = ladder_reward(3);
        inst.budget = 2;
        inst.horizon = 3;
        inst.discount = 0.6;
        const WhittleTable table = whittle_table(inst, 2);
        const WhittleJacobian jac = whittle_jacobian(inst, table, 2);
        for (int i = 0; i < 5; ++i) {
            for (int u = 0; u < 3; ++u) {
                auto index_of = [&](const TransitionKernel& k) {
                    return whittle_index(k, inst.reward, inst.discount, u, 1e-12, 1e-12).index;
                };
                for (int s = 0; s < 3; ++s)
                    for (int a = 0; a < 2; ++a)
                        for (int sp = 0; sp < 3; ++sp) {
                            const double fd =
                                oracles::fd_renormalized(inst.arms[i], s, a, sp, 1e-5, index_of);
                            const double block[3] = {jac.at(i, u, s, a, 0), jac.at(i, u, s, a, 1),
                                                     jac.at(i, u, s, a, 2)};
                            const double analytic =
                                oracles::project_tangent(block, inst.arms[i].row(s, a), 3, sp);
                            CHECK(std::abs(fd - analytic) <= 1e-4);
                        }
            }
        }
    }
}

TEST_CASE("factorization reuse equals independent per-entry solves") {
    Rng rng(37);
    const TransitionKernel kernel = oracles::random_kernel(4, rng);
    const RewardVector reward = ladder_reward(4);
    const double gamma = 0.8;
    const int u = 2;
    const WhittleResult res = whittle_index(kernel, reward, gamma, u);
    const IndexGradient grad = solve_and_differentiate(kernel, reward, gamma, u, res.values);
    const RowSelection sel = select_rows(kernel, reward, gamma, u, res.values);

    Eigen::MatrixXd lhs;
    Eigen::VectorXd rhs;
    assemble_system(kernel, reward, gamma, sel, lhs, rhs);
    const Eigen::VectorXd x = lhs.partialPivLu().solve(rhs);

    std::vector<std::pair<int, std::pair<int, int>>> rows; // row -> (s, a)
    for (int s = 0; s < 4; ++s) rows.push_back({s, {s, sel.chosen_action[s]}});
    rows.push_back({4, {u, 1}});
    for (const auto& [r, sa] : rows) {
        for (int sp = 0; sp < 4; ++sp) {
            Eigen::MatrixXd dlhs = Eigen::MatrixXd::Zero(5, 5);
            dlhs(r, 1 + sp) = gamma;
            const Eigen::VectorXd dx = lhs.partialPivLu().solve(Eigen::VectorXd(-dlhs * x));
            CHECK(std::abs(dx(0) - grad.jac(sa.first, sa.second, sp, 4)) <= 1e-10);
        }
    }
}

TEST_CASE("raw and tangent-projected gradients agree on tangent directions") {
    Rng rng(41);
    const TransitionKernel kernel = oracles::random_kernel(3, rng);
    const RewardVector reward = ladder_reward(3);
    const WhittleResult res = whittle_index(kernel, reward, 0.7, 1);
    const IndexGradient grad = solve_and_differentiate(kernel, reward, 0.7, 1, res.values);
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a) {
            const double* row = grad.kernel_jac.data() + (static_cast<std::size_t>(s) * 2 + a) * 3;
            double v[3] = {rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0};
            v[2] = -v[0] - v[1]; // tangent: components sum to zero
            double raw = 0.0, projected = 0.0;
            for (int sp = 0; sp < 3; ++sp) {
                raw += row[sp] * v[sp];
                projected += oracles::project_tangent(row, kernel.row(s, a), 3, sp) * v[sp];
            }
            CHECK(std::abs(raw - projected) <= 1e-6 * std::max(1.0, std::abs(raw)));
        }
}
