#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oracles {

using rmab::RewardVector;
using rmab::TransitionKernel;

rmab::TransitionKernel random_kernel(int num_states, rmab::Rng& rng) {
    TransitionKernel k(num_states);
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < 2; ++a) {
            double* row = k.row(s, a);
            if (num_states == 1) {
                row[0] = 1.0;
                continue;
            }
            std::vector<double> cuts(num_states - 1);
            for (double& c : cuts) c = rng.uniform();
            std::sort(cuts.begin(), cuts.end());
            double prev = 0.0;
            for (int i = 0; i < num_states - 1; ++i) {
                row[i] = cuts[i] - prev;
                prev = cuts[i];
            }
            row[num_states - 1] = 1.0 - prev;
        }
    }
    return k;
}

namespace {

double sweep(const TransitionKernel& kernel, const RewardVector& reward, double gamma, double subsidy,
             std::vector<double>& v, std::vector<double>& q0, std::vector<double>& q1, double tol) {
    const int m = kernel.num_states;
    for (long it = 0; it < 4000000; ++it) {
        double residual = 0.0;
        for (int s = 0; s < m; ++s) {
            double a0 = 0.0, a1 = 0.0;
            for (int sp = 0; sp < m; ++sp) {
                a0 += kernel(s, 0, sp) * v[sp];
                a1 += kernel(s, 1, sp) * v[sp];
            }
            q0[s] = subsidy + reward.values[s] + gamma * a0;
            q1[s] = reward.values[s] + gamma * a1;
        }
        for (int s = 0; s < m; ++s) {
            const double vn = std::max(q0[s], q1[s]);
            residual = std::max(residual, std::abs(vn - v[s]));
            v[s] = vn;
        }
        if (residual <= tol) return residual;
    }
    throw std::runtime_error("oracle value iteration failed to converge");
}

} // namespace

OracleValues oracle_values(const TransitionKernel& kernel, const RewardVector& reward, double gamma,
                           double subsidy, double tol) {
    OracleValues out;
    out.v.assign(kernel.num_states, 0.0);
    out.q0.assign(kernel.num_states, 0.0);
    out.q1.assign(kernel.num_states, 0.0);
    sweep(kernel, reward, gamma, subsidy, out.v, out.q0, out.q1, tol);
    return out;
}

double grid_search_whittle(const TransitionKernel& kernel, const RewardVector& reward, double gamma,
                           int target_state, double step) {
    const double span = reward.span();
    const double lo = -span / (1.0 - gamma);
    const double hi = span / (1.0 - gamma);

    std::vector<double> v(kernel.num_states, 0.0), q0(kernel.num_states), q1(kernel.num_states);
    double prev_m = lo;
    bool have_negative = false;
    for (double m = lo;; m += step) {
        if (m > hi + step) break;
        sweep(kernel, reward, gamma, m, v, q0, q1, 1e-10); // warm start from the previous grid point
        const double gap = q0[target_state] - q1[target_state];
        if (gap < 0.0) {
            have_negative = true;
            prev_m = m;
        } else {
            if (!have_negative) return m; // crossing at (or before) the bracket edge
            return 0.5 * (prev_m + m);
        }
    }
    throw std::runtime_error("grid_search_whittle: no sign change inside the bracket");
}

std::vector<double> pgd_transport_topk(const std::vector<double>& scores, int k, double epsilon) {
    const int n = static_cast<int>(scores.size());
    // Same standardization and anchors as the library construction.
    double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    const double denom = std::sqrt(var / n) + 1e-8;
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = (scores[i] - mean) / denom;
    const double y_sel = *std::max_element(z.begin(), z.end());
    const double y_rej = *std::min_element(z.begin(), z.end());

    std::vector<double> c_sel(n), c_rej(n);
    for (int i = 0; i < n; ++i) {
        c_sel[i] = (z[i] - y_sel) * (z[i] - y_sel);
        c_rej[i] = (z[i] - y_rej) * (z[i] - y_rej);
    }

    // Parameterize the plan by its selected column g (row masses fix the
    // rejected column); project onto { sum g = k/N, 0 < g < 1/N } after every
    // gradient step.
    const double mu = 1.0 / n;
    const double target = static_cast<double>(k) / n;
    std::vector<double> g(n, target / n);
    const double floor = 1e-12;

    double step_size = 0.05 * mu;
    for (int it = 0; it < 20000; ++it) {
        for (int i = 0; i < n; ++i) {
            const double grad =
                c_sel[i] - c_rej[i] + epsilon * (std::log(g[i]) - std::log(mu - g[i]));
            g[i] -= step_size * grad;
        }
        // Alternate the hyperplane shift and box clipping a few times.
        for (int round = 0; round < 8; ++round) {
            double excess = (std::accumulate(g.begin(), g.end(), 0.0) - target) / n;
            for (double& x : g) x = std::min(mu - floor, std::max(floor, x - excess));
        }
        if (it % 2000 == 1999) step_size *= 0.7;
    }
    std::vector<double> probs(n);
    for (int i = 0; i < n; ++i) probs[i] = g[i] * n;
    return probs;
}

double exact_joint_value(const std::vector<TransitionKernel>& kernels, const RewardVector& reward,
                         int horizon, double gamma, const JointPolicy& policy,
                         const std::vector<int>* initial_state) {
    const int n = static_cast<int>(kernels.size());
    const int m = kernels.front().num_states;
    int joint = 1;
    for (int i = 0; i < n; ++i) joint *= m;

    auto decode = [&](int code) {
        std::vector<int> s(n);
        for (int i = 0; i < n; ++i) {
            s[i] = code % m;
            code /= m;
        }
        return s;
    };

    std::vector<double> dist(joint, 0.0);
    if (initial_state) {
        int code = 0, base = 1;
        for (int i = 0; i < n; ++i) {
            code += (*initial_state)[i] * base;
            base *= m;
        }
        dist[code] = 1.0;
    } else {
        std::fill(dist.begin(), dist.end(), 1.0 / joint);
    }

    double value = 0.0;
    double disc = 1.0;
    std::vector<double> next(joint);
    for (int t = 0; t < horizon; ++t) {
        for (int code = 0; code < joint; ++code) {
            if (dist[code] == 0.0) continue;
            const std::vector<int> s = decode(code);
            for (int i = 0; i < n; ++i) value += disc * dist[code] * reward.values[s[i]];
        }
        std::fill(next.begin(), next.end(), 0.0);
        for (int code = 0; code < joint; ++code) {
            if (dist[code] == 0.0) continue;
            const std::vector<int> s = decode(code);
            for (const auto& [p_act, actions] : policy(s)) {
                // enumerate joint successors
                std::vector<int> sp(n, 0);
                for (;;) {
                    double p = dist[code] * p_act;
                    int code_sp = 0, base = 1;
                    for (int i = 0; i < n; ++i) {
                        p *= kernels[i](s[i], actions[i], sp[i]);
                        code_sp += sp[i] * base;
                        base *= m;
                    }
                    if (p != 0.0) next[code_sp] += p;
                    int carry = 0;
                    for (; carry < n; ++carry) {
                        if (++sp[carry] < m) break;
                        sp[carry] = 0;
                    }
                    if (carry == n) break;
                }
            }
        }
        dist.swap(next);
        disc *= gamma;
    }
    return value;
}

JointPolicy strict_joint_policy(const rmab::WhittleTable& table, int budget) {
    return [&table, budget](const std::vector<int>& s) {
        const rmab::PolicyOutput out = rmab::strict_policy(table, s, budget);
        std::vector<int> actions(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) actions[i] = out.pull_probs[i] > 0.5 ? 1 : 0;
        return std::vector<std::pair<double, std::vector<int>>>{{1.0, actions}};
    };
}

JointPolicy soft_budget1_joint_policy(const rmab::WhittleTable& table,
                                      const rmab::SoftTopKConfig& cfg) {
    return [&table, cfg](const std::vector<int>& s) {
        const rmab::PolicyOutput out = rmab::soft_policy(table, s, 1, cfg);
        std::vector<std::pair<double, std::vector<int>>> mix;
        for (std::size_t i = 0; i < s.size(); ++i) {
            std::vector<int> actions(s.size(), 0);
            actions[i] = 1;
            mix.emplace_back(out.pull_probs[i], actions); // sums to budget = 1
        }
        return mix;
    };
}

double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

double fd_renormalized(const TransitionKernel& kernel, int s, int a, int sp, double h,
                       const std::function<double(const TransitionKernel&)>& f) {
    auto perturbed = [&](double delta) {
        TransitionKernel k = kernel;
        k.at(s, a, sp) += delta;
        double total = 0.0;
        for (int j = 0; j < k.num_states; ++j) total += k(s, a, j);
        for (int j = 0; j < k.num_states; ++j) k.at(s, a, j) /= total;
        return f(k);
    };
    return (perturbed(h) - perturbed(-h)) / (2.0 * h);
}

double project_tangent(const double* grad_row, const double* prob_row, int m, int sp) {
    double weighted = 0.0;
    for (int j = 0; j < m; ++j) weighted += grad_row[j] * prob_row[j];
    return grad_row[sp] - weighted;
}

} // namespace oracles
