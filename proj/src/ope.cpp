#include "rmab/ope.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace rmab {

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["variant"] = variant;
    j["value"] = value;
    j["std_error"] = std_error;
    j["horizon"] = horizon;
    j["num_arms"] = num_arms;
    j["mean_weights"] = mean_weights;
    return j.dump(2);
}

namespace {

void check_behavior_probs(const Trajectory& traj) {
    for (double b : traj.behavior_probs)
        if (!(b > 0.0))
            throw std::runtime_error("cwpdis: unsupported behavior action (probability <= 0)");
}

double target_action_prob(double pull_prob, int action) {
    return action == 1 ? pull_prob : 1.0 - pull_prob;
}

} // namespace

EvalReport cwpdis_eval(const std::vector<std::vector<double>>& pull_probs,
                       const std::vector<Trajectory>& trajs, double gamma,
                       std::vector<std::vector<double>>* grad) {
    if (trajs.empty()) throw std::invalid_argument("cwpdis_eval: no trajectories");
    if (trajs.size() == 1)
        throw std::runtime_error(
            "cwpdis_eval: a single trajectory cancels the estimator; use cwpdis_eval_single");
    if (pull_probs.size() != trajs.size())
        throw std::invalid_argument("cwpdis_eval: pull_probs / trajectory count mismatch");

    const int horizon = trajs.front().horizon;
    const int n = trajs.front().num_arms;
    const std::size_t cells = static_cast<std::size_t>(horizon) * n;
    const int num_trajs = static_cast<int>(trajs.size());

    for (int j = 0; j < num_trajs; ++j) {
        if (trajs[j].horizon != horizon || trajs[j].num_arms != n)
            throw std::invalid_argument("cwpdis_eval: trajectories disagree on shape");
        if (pull_probs[j].size() != cells)
            throw std::invalid_argument("cwpdis_eval: pull_probs shape mismatch");
        check_behavior_probs(trajs[j]);
    }

    // Running log importance weights, then per-(t,i) means across trajectories.
    std::vector<std::vector<double>> rho(num_trajs, std::vector<double>(cells, 0.0));
    for (int j = 0; j < num_trajs; ++j) {
        const Trajectory& tr = trajs[j];
        for (int i = 0; i < n; ++i) {
            double log_rho = 0.0;
            for (int t = 0; t < horizon; ++t) {
                const std::size_t c = tr.idx(t, i);
                const double q = target_action_prob(pull_probs[j][c], tr.actions[c]);
                log_rho += std::log(q) - std::log(tr.behavior_probs[c]);
                rho[j][c] = std::exp(log_rho);
            }
        }
    }

    EvalReport report;
    report.variant = "cwpdis";
    report.horizon = horizon;
    report.num_arms = n;
    report.mean_weights.assign(cells, 0.0);

    std::vector<double> num(cells, 0.0);
    for (int j = 0; j < num_trajs; ++j)
        for (std::size_t c = 0; c < cells; ++c) {
            num[c] += trajs[j].rewards[c] * rho[j][c];
            report.mean_weights[c] += rho[j][c];
        }
    for (std::size_t c = 0; c < cells; ++c) {
        num[c] /= num_trajs;
        report.mean_weights[c] /= num_trajs;
    }

    double value = 0.0;
    double disc = 1.0;
    for (int t = 0; t < horizon; ++t) {
        for (int i = 0; i < n; ++i) {
            const std::size_t c = static_cast<std::size_t>(t) * n + i;
            if (report.mean_weights[c] > 0.0) value += disc * num[c] / report.mean_weights[c];
        }
        disc *= gamma;
    }
    report.value = value;

    if (grad) {
        // d value / d pull_prob[j][t0][i] factors as c_{t0} * suffix sum of the
        // per-step sensitivities of every later rho along the same arm.
        grad->assign(num_trajs, std::vector<double>(cells, 0.0));
        for (int j = 0; j < num_trajs; ++j) {
            const Trajectory& tr = trajs[j];
            for (int i = 0; i < n; ++i) {
                double suffix = 0.0;
                for (int t = horizon - 1; t >= 0; --t) {
                    const std::size_t c = tr.idx(t, i);
                    const double w = report.mean_weights[c];
                    if (w > 0.0) {
                        const double dv_drho =
                            std::pow(gamma, t) * (tr.rewards[c] * w - num[c]) / (num_trajs * w * w);
                        suffix += dv_drho * rho[j][c];
                    }
                    const double p = pull_probs[j][c];
                    const double c_step = tr.actions[c] == 1 ? 1.0 / p : -1.0 / (1.0 - p);
                    (*grad)[j][c] = suffix == 0.0 ? 0.0 : c_step * suffix;
                }
            }
        }
    }
    return report;
}

EvalReport cwpdis_eval_single(const std::vector<double>& pull_probs, const Trajectory& traj,
                              double gamma, std::vector<double>* grad) {
    const int horizon = traj.horizon;
    const int n = traj.num_arms;
    const std::size_t cells = static_cast<std::size_t>(horizon) * n;
    if (pull_probs.size() != cells)
        throw std::invalid_argument("cwpdis_eval_single: pull_probs shape mismatch");
    check_behavior_probs(traj);

    EvalReport report;
    report.variant = "single-trajectory";
    report.horizon = horizon;
    report.num_arms = n;
    report.mean_weights.assign(cells, 0.0);
    if (grad) grad->assign(cells, 0.0);

    double value = 0.0;
    for (int i = 0; i < n; ++i) {
        double mean_w = 0.0;
        for (int t = 0; t < horizon; ++t) {
            const std::size_t c = traj.idx(t, i);
            report.mean_weights[c] =
                target_action_prob(pull_probs[c], traj.actions[c]) / traj.behavior_probs[c];
            mean_w += report.mean_weights[c];
        }
        mean_w /= horizon;
        if (!(mean_w > 0.0)) continue; // the target never takes any logged action for this arm

        double weighted_reward = 0.0;
        double disc = 1.0;
        for (int t = 0; t < horizon; ++t) {
            const std::size_t c = traj.idx(t, i);
            weighted_reward += disc * traj.rewards[c] * report.mean_weights[c];
            disc *= gamma;
        }
        value += weighted_reward / mean_w;

        if (grad) {
            for (int t = 0; t < horizon; ++t) {
                const std::size_t c = traj.idx(t, i);
                // d rho'_{t} / d pull_prob = +-1 / behavior_prob
                const double drho = (traj.actions[c] == 1 ? 1.0 : -1.0) / traj.behavior_probs[c];
                const double dv_drho = std::pow(gamma, t) * traj.rewards[c] / mean_w -
                                       weighted_reward / (horizon * mean_w * mean_w);
                (*grad)[c] = dv_drho * drho;
            }
        }
    }
    report.value = value;
    return report;
}

EvalReport simulate_eval(const std::vector<TransitionKernel>& kernels, const RewardVector& reward,
                         int horizon, double gamma, const WhittlePolicy& policy, int episodes,
                         const Rng& base_rng, const std::vector<int>* initial_state) {
    const int n = static_cast<int>(kernels.size());
    const int m = kernels.empty() ? 0 : kernels.front().num_states;
    if (episodes < 1) throw std::invalid_argument("simulate_eval: episodes must be >= 1");

    double sum = 0.0, sum_sq = 0.0;
    std::vector<int> state(n), next(n);
    for (int ep = 0; ep < episodes; ++ep) {
        Rng rng = base_rng.split(static_cast<std::uint64_t>(ep));
        if (initial_state) {
            state = *initial_state;
        } else {
            for (int i = 0; i < n; ++i) state[i] = static_cast<int>(rng.uniform_int(m));
        }
        double ret = 0.0;
        double disc = 1.0;
        for (int t = 0; t < horizon; ++t) {
            for (int i = 0; i < n; ++i) ret += disc * reward.values[state[i]];
            const std::vector<int> actions = policy.act(state, rng);
            for (int i = 0; i < n; ++i) {
                const double* row = kernels[i].row(state[i], actions[i]);
                double target = rng.uniform();
                int sp = m - 1;
                for (int cand = 0; cand < m; ++cand) {
                    target -= row[cand];
                    if (target < 0.0) {
                        sp = cand;
                        break;
                    }
                }
                next[i] = sp;
            }
            state.swap(next);
            disc *= gamma;
        }
        sum += ret;
        sum_sq += ret * ret;
    }

    EvalReport report;
    report.variant = "simulation";
    report.horizon = horizon;
    report.num_arms = n;
    report.value = sum / episodes;
    if (episodes > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / episodes) / (episodes - 1));
        report.std_error = std::sqrt(var / episodes);
    }
    return report;
}

EmpiricalKernels empirical_kernels(const std::vector<Trajectory>& trajs, int num_states) {
    if (trajs.empty()) throw std::invalid_argument("empirical_kernels: no trajectories");
    const int n = trajs.front().num_arms;
    const int m = num_states;

    EmpiricalKernels out;
    out.kernels.assign(n, TransitionKernel(m));
    out.missing.assign(n, std::vector<int>(static_cast<std::size_t>(m) * kNumActions, 0));

    for (const Trajectory& tr : trajs) {
        if (tr.num_arms != n) throw std::invalid_argument("empirical_kernels: arm count mismatch");
        for (int t = 0; t + 1 < tr.horizon; ++t)
            for (int i = 0; i < n; ++i)
                out.kernels[i].at(tr.state(t, i), tr.action(t, i), tr.state(t + 1, i)) += 1.0;
    }

    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < m; ++s) {
            for (int a = 0; a < kNumActions; ++a) {
                double* row = out.kernels[i].row(s, a);
                const double total = std::accumulate(row, row + m, 0.0);
                if (total > 0.0) {
                    for (int sp = 0; sp < m; ++sp) row[sp] /= total;
                } else {
                    out.missing[i][static_cast<std::size_t>(s) * kNumActions + a] = 1;
                    for (int sp = 0; sp < m; ++sp) row[sp] = 1.0 / m;
                }
            }
        }
    }
    return out;
}

} // namespace rmab
