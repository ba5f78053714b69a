#pragma once

#include <vector>

namespace rmab {

struct SoftTopKConfig {
    double epsilon = 0.1;          // entropic regularization temperature
    int max_iters = 200;           // Sinkhorn iteration cap L
    double convergence_tol = 1e-6; // on the budget residual |sum(probs) - k|
};

// Dual state of the converged transport, kept for the backward pass.
struct SoftTopKState {
    std::vector<double> scores;  // raw input
    std::vector<double> z;       // standardized scores
    std::vector<double> gap;     // per-item cost gap D_i = C(i,rejected) - C(i,selected)
    std::vector<double> probs;   // marginal selection probabilities
    double delta = 0.0;          // column potential difference g_sel - g_rej
    double mean = 0.0;
    double stddev = 0.0;
    double epsilon = 0.1;
    int k = 0;
    int argmax = 0; // selected anchor position
    int argmin = 0; // rejected anchor position
    bool converged = false;
    int iterations = 0;
};

// Entropy-regularized transport of N uniform source points located at the
// standardized scores onto two anchors (selected = max score with mass k/N,
// rejected = min score with mass (N-k)/N), solved by Sinkhorn iterations in
// the log domain. Because the target side has just two points, the fixed
// point is characterized by one scalar potential difference; after the
// iteration cap the solution is polished by bisecting that scalar, which
// pins the budget sum(probs) = k to machine precision even where plain
// Sinkhorn stalls.
//
// Scores are standardized (mean subtracted, divided by stddev + 1e-8) before
// transport so epsilon is scale-free; the standardization is part of the
// differentiable graph and the backward pass accounts for it.
SoftTopKState soft_topk_forward(const std::vector<double>& scores, int k, const SoftTopKConfig& cfg);

// Gradient of upstream . probs with respect to the raw scores, obtained by
// implicitly differentiating the transport fixed point (not by unrolling).
// Throws if the forward state is unconverged.
std::vector<double> soft_topk_backward(const SoftTopKState& state, const std::vector<double>& upstream);

} // namespace rmab
