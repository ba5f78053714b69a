#pragma once

#include "rmab/datagen.hpp"
#include "rmab/ope.hpp"
#include "rmab/predictor.hpp"
#include "rmab/soft_topk.hpp"

#include <string>
#include <utility>
#include <vector>

namespace rmab {

enum class TrainMethod { kTwoStage, kDfWhittle };
enum class EvalVariant { kCwpdis, kSingleTrajectory };

struct TrainConfig {
    TrainMethod method = TrainMethod::kTwoStage;
    int epochs = 50;
    double learning_rate = 0.01;
    SoftTopKConfig topk;
    double gamma = 0.0; // <= 0 means: use each instance's own discount
    std::uint64_t seed = 0;
    EvalVariant variant = EvalVariant::kCwpdis;
    int sim_episodes = 200;
    int eval_every = 1; // metric rows at epoch 0, every k-th epoch, and the last
    int threads = 1;
    bool dropout_enabled = false;

    double discount_for(const RmabInstance& inst) const {
        return gamma > 0.0 ? gamma : inst.discount;
    }
};

// One row per (epoch, split). is_eval reports the strict policy (deployment
// view); is_eval_soft the soft policy that training actually ascends.
// ms_per_step is wall clock and excluded from determinism guarantees.
struct TrainLogRow {
    int epoch = 0;
    std::string split;
    double nll = 0.0;
    double is_eval = 0.0;
    double is_eval_soft = 0.0;
    double sim_eval = 0.0;
    double ms_per_step = 0.0;
};

struct TrainLog {
    std::vector<TrainLogRow> rows;

    std::string to_csv() const;
    std::string summary_json() const;
};

struct SplitIndices {
    std::vector<int> train, validation, test;
};

// 70/10/20 split by instance after a seeded shuffle.
SplitIndices split_dataset(int num_instances, std::uint64_t seed);

struct Metrics {
    double nll = 0.0;
    double is_eval = 0.0;      // strict policy
    double is_eval_soft = 0.0; // soft policy
    double sim_eval = 0.0;     // strict policy against empirical kernels
};

// Importance-sampling value of fixed per-(trajectory, step, arm) pull
// probabilities under the configured estimator variant; single-trajectory
// inputs always use the non-multiplicative variant.
double policy_is_eval(const std::vector<std::vector<double>>& pull_probs,
                      const std::vector<Trajectory>& trajs, double gamma, EvalVariant variant);

// Pure evaluation of one instance / a subset mean; no weight mutation.
// evaluate_kernels scores an explicit kernel prediction (e.g. a truth oracle).
Metrics evaluate_kernels(const RmabInstance& inst, const std::vector<TransitionKernel>& predicted,
                         const std::vector<Trajectory>& trajs, const TrainConfig& cfg);
Metrics evaluate_instance(const RmabInstance& inst, const std::vector<std::vector<double>>& features,
                          const std::vector<Trajectory>& trajs, const PredictorModel& model,
                          const TrainConfig& cfg);
Metrics evaluate_model(const Dataset& dataset, const std::vector<int>& subset,
                       const PredictorModel& model, const TrainConfig& cfg);

struct DfGradient {
    double eval_value = 0.0;
    GradientSet grad;
};

// One forward + backward pass of the decision-focused chain on a single
// instance: predict -> Whittle table -> soft policy at every observed state
// -> importance-sampling evaluation, then the backward chain
// dEval/dpi -> dpi/dW -> dW/dP -> dP/dw. No weight update is applied.
DfGradient df_whittle_gradient(const RmabInstance& inst,
                               const std::vector<std::vector<double>>& features,
                               const std::vector<Trajectory>& trajs, const PredictorModel& model,
                               const TrainConfig& cfg, Rng* dropout_rng = nullptr);

// Gradient descent on the predictive loss, one update per training instance
// per epoch. Returns the validation-best model (lowest NLL) and the full log.
std::pair<PredictorModel, TrainLog> train_two_stage(const Dataset& dataset, const SplitIndices& split,
                                                    PredictorModel model, const TrainConfig& cfg);

// Gradient ascent on the importance-sampling evaluation through the
// differentiable Whittle policy. Returns the validation-best model (highest
// soft IS evaluation) and the full log.
std::pair<PredictorModel, TrainLog> train_df_whittle(const Dataset& dataset, const SplitIndices& split,
                                                     PredictorModel model, const TrainConfig& cfg);

} // namespace rmab
