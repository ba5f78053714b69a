#pragma once

#include "rmab/rng.hpp"
#include "rmab/types.hpp"

#include <string>
#include <vector>

namespace rmab {

struct PredictorConfig {
    int input_dim = 16;
    int hidden_dim = 64;
    int num_states = 2;
    double dropout = 0.2; // applied on the hidden layer in training mode only

    int output_dim() const { return num_states * kNumActions * num_states; }
};

// Gradients with the same shapes as the weights.
struct GradientSet {
    std::vector<double> w1, b1, w2, b2;

    void accumulate(const GradientSet& other, double scale = 1.0);
    double max_abs() const;
};

// Per-arm forward activations kept for backprop.
struct ForwardCache {
    std::vector<std::vector<double>> hidden;      // post-ReLU (and dropout) per arm
    std::vector<std::vector<double>> hidden_slope; // d hidden / d preactivation per unit
    std::vector<TransitionKernel> kernels;
};

// Feature -> transition-probability model: one hidden layer with ReLU, then
// M*2 independent softmax heads of width M, one per (state, action) row.
class PredictorModel {
  public:
    PredictorConfig cfg;
    std::vector<double> w1, b1; // hidden x input, hidden
    std::vector<double> w2, b2; // output x hidden, output

    // Scaled uniform fan-in init (bound 1/sqrt(fan_in)), seeded. Draw order:
    // w1 row-major, b1, w2 row-major, b2.
    static PredictorModel init(const PredictorConfig& cfg, Rng& rng);

    // Deterministic inference (dropout disabled).
    std::vector<TransitionKernel> predict(const std::vector<std::vector<double>>& features) const;

    // Forward keeping activations. In training mode, hidden units are dropped
    // with probability cfg.dropout and survivors scaled by 1/(1-dropout).
    ForwardCache forward(const std::vector<std::vector<double>>& features, bool training,
                         Rng* rng) const;

    // Exact gradient of sum over kernel entries of upstream * entry with
    // respect to every weight. `upstream` has one value per kernel cell in
    // [arm][s][a][s'] layout.
    GradientSet backprop(const std::vector<std::vector<double>>& features, const ForwardCache& cache,
                         const std::vector<std::vector<double>>& upstream) const;

    // w += step * grad (callers pick the sign: descent or ascent).
    void apply_gradient(const GradientSet& grad, double step);

    GradientSet zero_gradient() const;

    std::string to_json() const;
    static PredictorModel from_json(const std::string& text);
};

// Average negative log-likelihood of the logged transitions under the
// predicted kernels:
//   loss = -(1/|T|) sum_tau sum_{t<T-1} sum_i log P_i(s_t, a_t, s_{t+1})
// The per-cell gradient is -count(s,a,s') / (|T| * P(s,a,s')).
std::pair<double, std::vector<std::vector<double>>> nll_loss(const std::vector<TransitionKernel>& kernels,
                                                             const std::vector<Trajectory>& trajs);

} // namespace rmab
