#include "rmab/training.hpp"

#include "rmab/parallel.hpp"
#include "rmab/whittle_diff.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace rmab {

namespace {

void check_finite(double x, const char* stage) {
    if (!std::isfinite(x)) throw NumericError(std::string(stage) + ": non-finite value encountered");
}

void check_finite(const GradientSet& g, const char* stage) {
    for (const auto* v : {&g.w1, &g.b1, &g.w2, &g.b2})
        for (double x : *v) check_finite(x, stage);
}

std::vector<int> joint_state_at(const Trajectory& tr, int t) {
    std::vector<int> s(tr.num_arms);
    for (int i = 0; i < tr.num_arms; ++i) s[i] = tr.state(t, i);
    return s;
}

// Pull probabilities of the target policy at every observed state, using a
// caller-provided per-state policy evaluation.
template <typename PolicyFn>
std::vector<std::vector<double>> policy_probs_on(const std::vector<Trajectory>& trajs, PolicyFn&& fn) {
    std::vector<std::vector<double>> out(trajs.size());
    for (std::size_t j = 0; j < trajs.size(); ++j) {
        const Trajectory& tr = trajs[j];
        out[j].resize(static_cast<std::size_t>(tr.horizon) * tr.num_arms);
        for (int t = 0; t < tr.horizon; ++t) {
            const std::vector<double> probs = fn(joint_state_at(tr, t));
            for (int i = 0; i < tr.num_arms; ++i) out[j][tr.idx(t, i)] = probs[i];
        }
    }
    return out;
}

} // namespace

double policy_is_eval(const std::vector<std::vector<double>>& pull_probs,
                      const std::vector<Trajectory>& trajs, double gamma, EvalVariant variant) {
    if (trajs.size() == 1 || variant == EvalVariant::kSingleTrajectory) {
        double total = 0.0;
        for (std::size_t j = 0; j < trajs.size(); ++j)
            total += cwpdis_eval_single(pull_probs[j], trajs[j], gamma).value;
        return total / static_cast<double>(trajs.size());
    }
    return cwpdis_eval(pull_probs, trajs, gamma).value;
}

std::string TrainLog::to_csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "epoch,split,nll,is_eval,sim_eval,ms_per_step,is_eval_soft\n";
    for (const auto& r : rows)
        os << r.epoch << ',' << r.split << ',' << r.nll << ',' << r.is_eval << ',' << r.sim_eval << ','
           << r.ms_per_step << ',' << r.is_eval_soft << '\n';
    return os.str();
}

std::string TrainLog::summary_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows)
        j.push_back({{"epoch", r.epoch},
                     {"split", r.split},
                     {"nll", r.nll},
                     {"is_eval", r.is_eval},
                     {"is_eval_soft", r.is_eval_soft},
                     {"sim_eval", r.sim_eval},
                     {"ms_per_step", r.ms_per_step}});
    return j.dump(2);
}

SplitIndices split_dataset(int num_instances, std::uint64_t seed) {
    std::vector<int> ids(num_instances);
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng = Rng(seed).split(0x5117ULL); // dedicated stream for the shuffle
    for (int i = num_instances - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
        std::swap(ids[i], ids[j]);
    }
    SplitIndices split;
    const int train_end = static_cast<int>(num_instances * 0.7);
    const int val_end = train_end + static_cast<int>(num_instances * 0.1);
    for (int i = 0; i < num_instances; ++i) {
        if (i < train_end)
            split.train.push_back(ids[i]);
        else if (i < val_end || (val_end == train_end && i == train_end))
            split.validation.push_back(ids[i]);
        else
            split.test.push_back(ids[i]);
    }
    if (split.test.empty() && !split.train.empty()) {
        split.test.push_back(split.train.back());
        split.train.pop_back();
    }
    return split;
}

Metrics evaluate_kernels(const RmabInstance& inst, const std::vector<TransitionKernel>& predicted,
                         const std::vector<Trajectory>& trajs, const TrainConfig& cfg) {
    const double gamma = cfg.discount_for(inst);
    Metrics metrics;
    metrics.nll = nll_loss(predicted, trajs).first;

    RmabInstance predicted_inst = inst;
    predicted_inst.arms = predicted;
    const WhittleTable table = whittle_table(predicted_inst, cfg.threads);

    const auto strict_probs = policy_probs_on(
        trajs, [&](const std::vector<int>& s) { return strict_policy(table, s, inst.budget).pull_probs; });
    metrics.is_eval = policy_is_eval(strict_probs, trajs, gamma, cfg.variant);

    const auto soft_probs = policy_probs_on(trajs, [&](const std::vector<int>& s) {
        return soft_policy(table, s, inst.budget, cfg.topk).pull_probs;
    });
    metrics.is_eval_soft = policy_is_eval(soft_probs, trajs, gamma, cfg.variant);

    const EmpiricalKernels empirical = empirical_kernels(trajs, inst.num_states());
    WhittlePolicy policy;
    policy.kind = PolicyKind::kStrict;
    policy.table = &table;
    policy.budget = inst.budget;
    policy.num_arms = inst.num_arms();
    metrics.sim_eval = simulate_eval(empirical.kernels, inst.reward, inst.horizon, gamma, policy,
                                     cfg.sim_episodes, Rng(cfg.seed).split(0xe7a1), nullptr)
                           .value;
    return metrics;
}

Metrics evaluate_instance(const RmabInstance& inst, const std::vector<std::vector<double>>& features,
                          const std::vector<Trajectory>& trajs, const PredictorModel& model,
                          const TrainConfig& cfg) {
    return evaluate_kernels(inst, model.predict(features), trajs, cfg);
}

Metrics evaluate_model(const Dataset& dataset, const std::vector<int>& subset,
                       const PredictorModel& model, const TrainConfig& cfg) {
    Metrics total;
    if (subset.empty()) return total;
    std::vector<Metrics> per(subset.size());
    parallel_for(static_cast<int>(subset.size()), cfg.threads, [&](int pos) {
        const int id = subset[pos];
        TrainConfig inner = cfg;
        inner.threads = 1; // parallelism lives at the instance level here
        per[pos] = evaluate_instance(dataset.instances[id], dataset.features[id],
                                     dataset.trajectories[id], model, inner);
    });
    for (const Metrics& m : per) {
        total.nll += m.nll;
        total.is_eval += m.is_eval;
        total.is_eval_soft += m.is_eval_soft;
        total.sim_eval += m.sim_eval;
    }
    const double inv = 1.0 / static_cast<double>(subset.size());
    total.nll *= inv;
    total.is_eval *= inv;
    total.is_eval_soft *= inv;
    total.sim_eval *= inv;
    return total;
}

DfGradient df_whittle_gradient(const RmabInstance& inst,
                               const std::vector<std::vector<double>>& features,
                               const std::vector<Trajectory>& trajs, const PredictorModel& model,
                               const TrainConfig& cfg, Rng* dropout_rng) {
    const double gamma = cfg.discount_for(inst);
    const int n = inst.num_arms();
    const int m = model.cfg.num_states;

    const ForwardCache cache =
        model.forward(features, cfg.dropout_enabled && dropout_rng != nullptr, dropout_rng);
    for (const auto& k : cache.kernels)
        for (double p : k.probs) check_finite(p, "df-whittle/predict");

    RmabInstance predicted_inst = inst;
    predicted_inst.arms = cache.kernels;
    const WhittleTable table = whittle_table(predicted_inst, cfg.threads);
    for (double w : table.indices) check_finite(w, "df-whittle/whittle");

    // Soft policy at every observed state, keeping transport states.
    std::vector<std::vector<SoftTopKState>> states(trajs.size());
    std::vector<std::vector<double>> pull_probs(trajs.size());
    for (std::size_t j = 0; j < trajs.size(); ++j) {
        const Trajectory& tr = trajs[j];
        states[j].reserve(tr.horizon);
        pull_probs[j].resize(static_cast<std::size_t>(tr.horizon) * n);
        for (int t = 0; t < tr.horizon; ++t) {
            states[j].push_back(soft_policy_state(table, joint_state_at(tr, t), inst.budget, cfg.topk));
            for (int i = 0; i < n; ++i) {
                const double p = states[j].back().probs[i];
                check_finite(p, "df-whittle/policy");
                pull_probs[j][tr.idx(t, i)] = p;
            }
        }
    }

    DfGradient result;
    std::vector<std::vector<double>> dvalue_dprobs;
    const bool single = trajs.size() == 1 || cfg.variant == EvalVariant::kSingleTrajectory;
    if (single) {
        dvalue_dprobs.resize(trajs.size());
        double total = 0.0;
        for (std::size_t j = 0; j < trajs.size(); ++j) {
            std::vector<double> g;
            total += cwpdis_eval_single(pull_probs[j], trajs[j], gamma, &g).value;
            const double scale = 1.0 / static_cast<double>(trajs.size());
            for (double& x : g) x *= scale;
            dvalue_dprobs[j] = std::move(g);
        }
        result.eval_value = total / static_cast<double>(trajs.size());
    } else {
        result.eval_value = cwpdis_eval(pull_probs, trajs, gamma, &dvalue_dprobs).value;
    }
    check_finite(result.eval_value, "df-whittle/eval");

    // dEval/dW accumulated across every (trajectory, step) occurrence.
    std::vector<double> dvalue_dindex(static_cast<std::size_t>(n) * m, 0.0);
    for (std::size_t j = 0; j < trajs.size(); ++j) {
        const Trajectory& tr = trajs[j];
        for (int t = 0; t < tr.horizon; ++t) {
            std::vector<double> upstream(n);
            for (int i = 0; i < n; ++i) upstream[i] = dvalue_dprobs[j][tr.idx(t, i)];
            const std::vector<double> dscores = soft_topk_backward(states[j][t], upstream);
            for (int i = 0; i < n; ++i) {
                check_finite(dscores[i], "df-whittle/topk-backward");
                dvalue_dindex[static_cast<std::size_t>(i) * m + tr.state(t, i)] += dscores[i];
            }
        }
    }

    const WhittleJacobian jac = whittle_jacobian(predicted_inst, table, cfg.threads);

    std::vector<std::vector<double>> dvalue_dkernel(n);
    const std::size_t cells = static_cast<std::size_t>(m) * kNumActions * m;
    for (int i = 0; i < n; ++i) {
        dvalue_dkernel[i].assign(cells, 0.0);
        for (int u = 0; u < m; ++u) {
            const double coeff = dvalue_dindex[static_cast<std::size_t>(i) * m + u];
            if (coeff == 0.0) continue;
            const double* block = jac.grads.data() + jac.block(i, u);
            for (std::size_t c = 0; c < cells; ++c) dvalue_dkernel[i][c] += coeff * block[c];
        }
        for (double x : dvalue_dkernel[i]) check_finite(x, "df-whittle/jacobian");
    }

    result.grad = model.backprop(features, cache, dvalue_dkernel);
    check_finite(result.grad, "df-whittle/backprop");
    return result;
}

namespace {

struct EpochLogger {
    const Dataset& dataset;
    const SplitIndices& split;
    const TrainConfig& cfg;
    TrainLog log;

    void record(int epoch, const PredictorModel& model, double ms_per_step) {
        for (const auto& [name, subset] :
             {std::pair<const char*, const std::vector<int>*>{"train", &split.train},
              {"validation", &split.validation}}) {
            const Metrics m = evaluate_model(dataset, *subset, model, cfg);
            log.rows.push_back({epoch, name, m.nll, m.is_eval, m.is_eval_soft, m.sim_eval,
                                ms_per_step});
        }
    }

    bool due(int epoch, int total_epochs) const {
        return epoch == 0 || epoch == total_epochs || epoch % std::max(1, cfg.eval_every) == 0;
    }
};

double validation_metric(const TrainLog& log, int epoch, bool maximize_soft_is) {
    for (const auto& r : log.rows)
        if (r.epoch == epoch && r.split == "validation")
            return maximize_soft_is ? r.is_eval_soft : -r.nll;
    return -std::numeric_limits<double>::infinity();
}

} // namespace

std::pair<PredictorModel, TrainLog> train_two_stage(const Dataset& dataset, const SplitIndices& split,
                                                    PredictorModel model, const TrainConfig& cfg) {
    EpochLogger logger{dataset, split, cfg};
    Rng dropout_rng = Rng(cfg.seed).split(0xd20ULL);

    logger.record(0, model, 0.0);
    PredictorModel best = model;
    double best_metric = validation_metric(logger.log, 0, false);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double total_ms = 0.0;
        for (int id : split.train) {
            const auto start = std::chrono::steady_clock::now();
            const ForwardCache cache =
                model.forward(dataset.features[id], cfg.dropout_enabled, &dropout_rng);
            auto [loss, dkernels] = nll_loss(cache.kernels, dataset.trajectories[id]);
            check_finite(loss, "two-stage/loss");
            const GradientSet grad = model.backprop(dataset.features[id], cache, dkernels);
            check_finite(grad, "two-stage/backprop");
            model.apply_gradient(grad, -cfg.learning_rate);
            total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                  start)
                            .count();
        }
        if (logger.due(epoch, cfg.epochs)) {
            logger.record(epoch, model, total_ms / std::max<std::size_t>(1, split.train.size()));
            const double metric = validation_metric(logger.log, epoch, false);
            if (metric > best_metric) {
                best_metric = metric;
                best = model;
            }
        }
    }
    return {split.validation.empty() ? model : best, logger.log};
}

std::pair<PredictorModel, TrainLog> train_df_whittle(const Dataset& dataset, const SplitIndices& split,
                                                     PredictorModel model, const TrainConfig& cfg) {
    EpochLogger logger{dataset, split, cfg};
    Rng dropout_rng = Rng(cfg.seed).split(0xd20ULL);

    logger.record(0, model, 0.0);
    PredictorModel best = model;
    double best_metric = validation_metric(logger.log, 0, true);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double total_ms = 0.0;
        for (int id : split.train) {
            const auto start = std::chrono::steady_clock::now();
            const DfGradient step =
                df_whittle_gradient(dataset.instances[id], dataset.features[id],
                                    dataset.trajectories[id], model, cfg,
                                    cfg.dropout_enabled ? &dropout_rng : nullptr);
            model.apply_gradient(step.grad, cfg.learning_rate); // ascent
            total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                  start)
                            .count();
        }
        if (logger.due(epoch, cfg.epochs)) {
            logger.record(epoch, model, total_ms / std::max<std::size_t>(1, split.train.size()));
            const double metric = validation_metric(logger.log, epoch, true);
            if (metric > best_metric) {
                best_metric = metric;
                best = model;
            }
        }
    }
    return {split.validation.empty() ? model : best, logger.log};
}

} // namespace rmab
