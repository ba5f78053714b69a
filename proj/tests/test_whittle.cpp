#include "fixtures.hpp"
#include "oracles.hpp"
#include "rmab/whittle.hpp"

#include <doctest.h>

#include <cmath>

using namespace rmab;

TEST_CASE("value iteration: identical rows make both actions equal at subsidy 0") {
    const SubsidizedValues vals =
        value_iteration(fixtures::identical_action_kernel(), fixtures::binary_reward(), 0.5, 0.0);
    for (int s = 0; s < 2; ++s) CHECK(vals.q(s, 0) == doctest::Approx(vals.q(s, 1)).epsilon(1e-9));
}

TEST_CASE("value iteration on the flip-drift fixture at subsidy 0.25") {
    // Exact fixed point: active wins at state 0, passive at state 1, giving
    // the linear system whose solution is V = (20/23, 45/23).
    const SubsidizedValues vals =
        value_iteration(fixtures::flip_drift_kernel(), fixtures::binary_reward(), 0.5, 0.25);
    CHECK(vals.values[0] == doctest::Approx(20.0 / 23.0).epsilon(1e-8));
    CHECK(vals.values[1] == doctest::Approx(45.0 / 23.0).epsilon(1e-8));
    // and it agrees with the independent sweep
    const auto oracle = oracles::oracle_values(fixtures::flip_drift_kernel(), fixtures::binary_reward(),
                                               0.5, 0.25);
    CHECK(vals.values[0] == doctest::Approx(oracle.v[0]).epsilon(1e-9));
    CHECK(vals.values[1] == doctest::Approx(oracle.v[1]).epsilon(1e-9));
}

TEST_CASE("value iteration: zero reward and zero subsidy give zero values") {
    const SubsidizedValues vals =
        value_iteration(fixtures::flip_drift_kernel(), RewardVector({0.0, 0.0}), 0.5, 0.0);
    CHECK(std::abs(vals.values[0]) < 1e-12);
    CHECK(std::abs(vals.values[1]) < 1e-12);
}

TEST_CASE("whittle index of the flip-drift fixture") {
    const WhittleResult res =
        whittle_index(fixtures::flip_drift_kernel(), fixtures::binary_reward(), 0.5, 0);
    // Exact solution of the indifference system: m = 6/17, passive branch
    // V = (16/17, 36/17).
    CHECK(res.index == doctest::Approx(6.0 / 17.0).epsilon(1e-7));
    CHECK(res.values.values[0] == doctest::Approx(16.0 / 17.0).epsilon(1e-6));
    CHECK(res.values.values[1] == doctest::Approx(36.0 / 17.0).epsilon(1e-6));
    CHECK(std::abs(res.values.q(0, 0) - res.values.q(0, 1)) <= kIndifferenceTol);

    // State 1 has identical action rows, so zero subsidy equalizes.
    const WhittleResult res1 =
        whittle_index(fixtures::flip_drift_kernel(), fixtures::binary_reward(), 0.5, 1);
    CHECK(res1.index == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("whittle index is zero everywhere for identical-action kernels") {
    for (int u = 0; u < 2; ++u) {
        const WhittleResult res =
            whittle_index(fixtures::identical_action_kernel(), fixtures::binary_reward(), 0.9, u);
        CHECK(std::abs(res.index) < 1e-8);
    }
}

TEST_CASE("binary search matches the grid-search scan on a random 3-state kernel") {
    Rng rng(7);
    const TransitionKernel kernel = oracles::random_kernel(3, rng);
    const RewardVector reward = ladder_reward(3);
    for (int u = 0; u < 3; ++u) {
        const double fast = whittle_index(kernel, reward, 0.5, u).index;
        const double slow = oracles::grid_search_whittle(kernel, reward, 0.5, u);
        CHECK(std::abs(fast - slow) <= 1e-3);
    }
}

TEST_CASE("whittle_table") {
    SUBCASE("identical arms produce identical rows") {
        RmabInstance inst;
        inst.arms = {fixtures::flip_drift_kernel(), fixtures::flip_drift_kernel(),
                     fixtures::flip_drift_kernel()};
        inst.reward = fixtures::binary_reward();
        inst.budget = 1;
        inst.horizon = 3;
        inst.discount = 0.5;
        const WhittleTable table = whittle_table(inst, 2);
        for (int u = 0; u < 2; ++u) {
            CHECK(table.index(0, u) == table.index(1, u));
            CHECK(table.index(1, u) == table.index(2, u));
        }
    }
    SUBCASE("single flip-drift arm") {
        RmabInstance inst;
        inst.arms = {fixtures::flip_drift_kernel()};
        inst.reward = fixtures::binary_reward();
        inst.budget = 1;
        inst.horizon = 3;
        inst.discount = 0.5;
        const WhittleTable table = whittle_table(inst);
        CHECK(table.index(0, 0) == doctest::Approx(6.0 / 17.0).epsilon(1e-7));
        CHECK(table.index(0, 1) == doctest::Approx(0.0).epsilon(1e-8));
    }
    SUBCASE("three random arms against the grid oracle") {
        Rng rng(11);
        RmabInstance inst;
        for (int i = 0; i < 3; ++i) inst.arms.push_back(oracles::random_kernel(2, rng));
        inst.reward = ladder_reward(2);
        inst.budget = 1;
        inst.horizon = 3;
        inst.discount = 0.5;
        const WhittleTable table = whittle_table(inst, 3);
        for (int i = 0; i < 3; ++i)
            for (int u = 0; u < 2; ++u) {
                const double oracle =
                    oracles::grid_search_whittle(inst.arms[i], inst.reward, inst.discount, u);
                CHECK(std::abs(table.index(i, u) - oracle) <= 1e-3);
            }
    }
}

TEST_CASE("stored subsidized values reproduce a fresh value iteration") {
    RmabInstance inst;
    Rng rng(5);
    inst.arms = {oracles::random_kernel(4, rng)};
    inst.reward = ladder_reward(4);
    inst.budget = 1;
    inst.horizon = 3;
    inst.discount = 0.8;
    const WhittleTable table = whittle_table(inst);
    for (int u = 0; u < 4; ++u) {
        const SubsidizedValues& stored = table.values(0, u);
        const SubsidizedValues fresh =
            value_iteration(inst.arms[0], inst.reward, inst.discount, stored.subsidy);
        for (int s = 0; s < 4; ++s)
            CHECK(stored.values[s] == doctest::Approx(fresh.values[s]).epsilon(1e-8));
    }
}

TEST_CASE("action-indifference gap is monotone in the subsidy on random kernels") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 2 + static_cast<int>(rng.uniform_int(3));
        const TransitionKernel kernel = oracles::random_kernel(m, rng);
        const RewardVector reward = ladder_reward(m);
        const double gamma = 0.7;
        const int u = static_cast<int>(rng.uniform_int(m));
        const double span = reward.span() / (1.0 - gamma);
        double m1 = rng.uniform(-span, span);
        double m2 = rng.uniform(-span, span);
        if (m1 > m2) std::swap(m1, m2);
        const SubsidizedValues v1 = value_iteration(kernel, reward, gamma, m1);
        const SubsidizedValues v2 = value_iteration(kernel, reward, gamma, m2);
        const double gap1 = v1.q(u, 0) - v1.q(u, 1);
        const double gap2 = v2.q(u, 0) - v2.q(u, 1);
        CHECK(gap2 >= gap1 - 1e-7);
    }
}

TEST_CASE("binary search and grid oracle agree after a constant reward shift") {
    Rng rng(17);
    const TransitionKernel kernel = oracles::random_kernel(2, rng);
    RewardVector reward = ladder_reward(2);
    for (double& r : reward.values) r += 2.0;
    for (int u = 0; u < 2; ++u) {
        const double fast = whittle_index(kernel, reward, 0.5, u).index;
        const double slow = oracles::grid_search_whittle(kernel, reward, 0.5, u);
        CHECK(std::abs(fast - slow) <= 1e-3);
    }
}

TEST_CASE("constant rewards collapse the bracket to an index of zero") {
    const WhittleResult res =
        whittle_index(fixtures::flip_drift_kernel(), RewardVector({0.3, 0.3}), 0.5, 0);
    CHECK(res.index == 0.0);
}

TEST_CASE("value iteration rejects gamma outside (0,1)") {
    CHECK_THROWS_AS(value_iteration(fixtures::flip_drift_kernel(), fixtures::binary_reward(), 1.0, 0.0),
                    std::invalid_argument);
}
