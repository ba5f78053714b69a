#include "rmab/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rmab {

double RewardVector::span() const {
    if (values.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *hi - *lo;
}

RewardVector ladder_reward(int num_states) {
    std::vector<double> v(num_states);
    for (int i = 0; i < num_states; ++i)
        v[i] = num_states > 1 ? static_cast<double>(i) / (num_states - 1) : 0.0;
    return RewardVector(std::move(v));
}

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

} // namespace

std::vector<std::string> validate_instance(const RmabInstance& inst) {
    std::vector<std::string> violations;
    auto add = [&](const std::string& msg) { violations.push_back(msg); };

    const int n = inst.num_arms();
    if (n == 0) add("arms: instance has no arms");
    const int m = inst.num_states();
    if (m < 2) add("num_states: need at least 2 states, got " + std::to_string(m));

    if (inst.budget < 1 || inst.budget > n)
        add("budget: " + std::to_string(inst.budget) + " outside [1, " + std::to_string(n) +
            "] (budget exceeds arms or is non-positive)");
    if (inst.horizon < 1) add("horizon: must be positive, got " + std::to_string(inst.horizon));
    if (!(inst.discount > 0.0 && inst.discount < 1.0))
        add("discount: " + fmt(inst.discount) + " outside (0, 1)");

    if (inst.reward.size() != m)
        add("reward: size " + std::to_string(inst.reward.size()) + " != num_states " + std::to_string(m));
    for (int s = 0; s < inst.reward.size(); ++s)
        if (!std::isfinite(inst.reward.values[s]))
            add("reward[" + std::to_string(s) + "]: not finite");

    for (int i = 0; i < n; ++i) {
        const TransitionKernel& k = inst.arms[i];
        const std::string arm = "arms[" + std::to_string(i) + "]";
        if (k.num_states != m) {
            add(arm + ": num_states " + std::to_string(k.num_states) + " != " + std::to_string(m));
            continue;
        }
        if (k.probs.size() != static_cast<std::size_t>(m) * kNumActions * m) {
            add(arm + ": probs storage size mismatch");
            continue;
        }
        for (int s = 0; s < m; ++s) {
            for (int a = 0; a < kNumActions; ++a) {
                double sum = 0.0;
                bool entry_bad = false;
                for (int sp = 0; sp < m; ++sp) {
                    const double p = k(s, a, sp);
                    if (!(p >= 0.0 && p <= 1.0) || !std::isfinite(p)) {
                        add(arm + ".probs[" + std::to_string(s) + "][" + std::to_string(a) + "][" +
                            std::to_string(sp) + "]: entry " + fmt(p) + " outside [0, 1]");
                        entry_bad = true;
                    }
                    sum += p;
                }
                if (!entry_bad && std::abs(sum - 1.0) > kRowSumTol)
                    add(arm + ".probs[" + std::to_string(s) + "][" + std::to_string(a) +
                        "]: row sums to " + fmt(sum) + " (expected 1 within 1e-9)");
            }
        }
    }
    return violations;
}

std::vector<std::string> validate_trajectory(const Trajectory& traj, const RmabInstance& inst) {
    std::vector<std::string> violations;
    const int m = inst.num_states();
    if (traj.num_arms != inst.num_arms())
        violations.push_back("num_arms: " + std::to_string(traj.num_arms) + " != instance " +
                             std::to_string(inst.num_arms()));
    for (int t = 0; t < traj.horizon; ++t) {
        int pulled = 0;
        for (int i = 0; i < traj.num_arms; ++i) {
            const int s = traj.state(t, i);
            if (s < 0 || s >= m)
                violations.push_back("states[" + std::to_string(t) + "][" + std::to_string(i) +
                                     "]: " + std::to_string(s) + " outside [0, " + std::to_string(m) + ")");
            const int a = traj.action(t, i);
            if (a != 0 && a != 1)
                violations.push_back("actions[" + std::to_string(t) + "][" + std::to_string(i) +
                                     "]: must be 0 or 1");
            pulled += a;
            const double b = traj.behavior_prob(t, i);
            if (!(b > 0.0 && b <= 1.0))
                violations.push_back("behavior_probs[" + std::to_string(t) + "][" + std::to_string(i) +
                                     "]: " + fmt(b) + " outside (0, 1]");
            if (s >= 0 && s < m && std::abs(traj.reward(t, i) - inst.reward.values[s]) > 1e-9)
                violations.push_back("rewards[" + std::to_string(t) + "][" + std::to_string(i) +
                                     "]: " + fmt(traj.reward(t, i)) + " != reward of state " +
                                     std::to_string(s));
        }
        if (pulled > inst.budget)
            violations.push_back("actions[" + std::to_string(t) + "]: " + std::to_string(pulled) +
                                 " pulls exceed budget " + std::to_string(inst.budget));
    }
    return violations;
}

double discounted_return(const Trajectory& traj, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("discounted_return: gamma outside (0, 1]");
    double total = 0.0;
    double disc = 1.0;
    for (int t = 0; t < traj.horizon; ++t) {
        double step = 0.0;
        for (int i = 0; i < traj.num_arms; ++i) step += traj.reward(t, i);
        total += disc * step;
        disc *= gamma;
    }
    return total;
}

} // namespace rmab
