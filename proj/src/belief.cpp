#include "rmab/belief.hpp"

#include <array>
#include <stdexcept>

#include <json.hpp>

namespace rmab {

std::string BeliefChain::annotation_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (int c = 0; c < num_chain_states(); ++c)
        arr.push_back({{"id", c}, {"omega", omega_of(c)}, {"d", d_of(c)}});
    return arr.dump();
}

BeliefChain expand_belief_chain(const TransitionKernel& kernel, const RewardVector& reward,
                                int horizon) {
    if (kernel.num_states != 2)
        throw std::invalid_argument("expand_belief_chain: collapsing bandits implemented for 2 states only");
    if (horizon < 1) throw std::invalid_argument("expand_belief_chain: horizon must be >= 1");

    BeliefChain chain;
    chain.horizon = horizon;
    const int s_count = 2 * horizon;
    chain.beliefs.assign(static_cast<std::size_t>(s_count) * 2, 0.0);
    chain.kernel = TransitionKernel(s_count);
    chain.reward.values.assign(s_count, 0.0);

    for (int omega = 0; omega < 2; ++omega) {
        std::array<double, 2> b{omega == 0 ? 1.0 : 0.0, omega == 1 ? 1.0 : 0.0};
        for (int d = 1; d <= horizon; ++d) {
            // one passive propagation per elapsed step
            const std::array<double, 2> nb{b[0] * kernel(0, 0, 0) + b[1] * kernel(1, 0, 0),
                                           b[0] * kernel(0, 0, 1) + b[1] * kernel(1, 0, 1)};
            b = nb;
            const int c = chain.id(omega, d);
            chain.beliefs[static_cast<std::size_t>(c) * 2] = b[0];
            chain.beliefs[static_cast<std::size_t>(c) * 2 + 1] = b[1];
            chain.reward.values[c] = b[0] * reward.values[0] + b[1] * reward.values[1];

            chain.kernel.at(c, 0, chain.id(omega, std::min(d + 1, horizon))) = 1.0;
            for (int sp = 0; sp < 2; ++sp) {
                const double mass = b[0] * kernel(0, 1, sp) + b[1] * kernel(1, 1, sp);
                chain.kernel.at(c, 1, chain.id(sp, 1)) += mass;
            }
        }
    }
    return chain;
}

BeliefWhittleResult belief_whittle(const TransitionKernel& kernel, const RewardVector& reward,
                                   double gamma, int horizon) {
    BeliefWhittleResult result;
    result.chain = expand_belief_chain(kernel, reward, horizon);
    const BeliefChain& chain = result.chain;
    const int s_count = chain.num_chain_states();
    result.indices.assign(s_count, 0.0);
    result.jacobian.assign(static_cast<std::size_t>(s_count) * 8, 0.0);

    // Powers of the passive matrix, needed for the product rule
    // d(P^d)/dP[x][y] = sum_{j<d} P^j E_xy P^{d-1-j}.
    std::vector<std::array<double, 4>> pow(horizon + 1);
    pow[0] = {1.0, 0.0, 0.0, 1.0};
    for (int d = 1; d <= horizon; ++d) {
        const auto& prev = pow[d - 1];
        pow[d] = {prev[0] * kernel(0, 0, 0) + prev[1] * kernel(1, 0, 0),
                  prev[0] * kernel(0, 0, 1) + prev[1] * kernel(1, 0, 1),
                  prev[2] * kernel(0, 0, 0) + prev[3] * kernel(1, 0, 0),
                  prev[2] * kernel(0, 0, 1) + prev[3] * kernel(1, 0, 1)};
    }
    auto pw = [&](int d, int r, int c) { return pow[d][r * 2 + c]; };

    for (int u = 0; u < s_count; ++u) {
        const WhittleResult wr = whittle_index(chain.kernel, chain.reward, gamma, u);
        result.indices[u] = wr.index;
        const IndexGradient ig = solve_and_differentiate(chain.kernel, chain.reward, gamma, u, wr.values);

        double* jac = result.jacobian.data() + static_cast<std::size_t>(u) * 8;
        auto jac_at = [&](int s, int a, int sp) -> double& { return jac[s * 4 + a * 2 + sp]; };

        for (int omega = 0; omega < 2; ++omega) {
            for (int d = 1; d <= chain.horizon; ++d) {
                const int c = chain.id(omega, d);
                const double b0 = chain.belief(c, 0);
                const double b1 = chain.belief(c, 1);

                // Active kernel entries enter the chain's active rows directly.
                for (int x = 0; x < 2; ++x) {
                    const double bx = x == 0 ? b0 : b1;
                    for (int y = 0; y < 2; ++y)
                        jac_at(x, 1, y) += ig.jac(c, 1, chain.id(y, 1), s_count) * bx;
                }

                // Passive entries act through the belief b = e_omega P_passive^d,
                // which feeds both the chain reward and the active split.
                for (int x = 0; x < 2; ++x) {
                    for (int y = 0; y < 2; ++y) {
                        double db0 = 0.0, db1 = 0.0; // d belief / d P_passive(x, y)
                        for (int j = 0; j < d; ++j) {
                            const double reach = pw(j, omega, x); // (e_omega P^j)_x
                            db0 += reach * pw(d - 1 - j, y, 0);
                            db1 += reach * pw(d - 1 - j, y, 1);
                        }
                        double total = ig.reward_jac[c] * (db0 * reward.values[0] + db1 * reward.values[1]);
                        for (int sp = 0; sp < 2; ++sp) {
                            const double dmass = db0 * kernel(0, 1, sp) + db1 * kernel(1, 1, sp);
                            total += ig.jac(c, 1, chain.id(sp, 1), s_count) * dmass;
                        }
                        jac_at(x, 0, y) += total;
                    }
                }
            }
        }
    }
    return result;
}

} // namespace rmab
