#include "rmab/soft_topk.hpp"

#include "rmab/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rmab {

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(exp(a) + exp(b)) without overflow
double log_add(double a, double b) {
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    if (hi == -std::numeric_limits<double>::infinity()) return hi;
    return hi + std::log1p(std::exp(lo - hi));
}

double budget_residual(const std::vector<double>& gap, double delta, double eps, int k) {
    double sum = 0.0;
    for (double d : gap) sum += stable_sigmoid((delta + d) / eps);
    return sum - k;
}

} // namespace

SoftTopKState soft_topk_forward(const std::vector<double>& scores, int k, const SoftTopKConfig& cfg) {
    const int n = static_cast<int>(scores.size());
    if (k < 1 || k > n) throw std::invalid_argument("soft_topk_forward: k outside [1, N]");
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("soft_topk_forward: epsilon must be > 0");
    if (cfg.max_iters < 1) throw std::invalid_argument("soft_topk_forward: max_iters must be >= 1");
    for (double s : scores)
        if (!std::isfinite(s)) throw std::invalid_argument("soft_topk_forward: non-finite score");

    SoftTopKState st;
    st.scores = scores;
    st.epsilon = cfg.epsilon;
    st.k = k;

    st.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    double var = 0.0;
    for (double s : scores) var += (s - st.mean) * (s - st.mean);
    st.stddev = std::sqrt(var / n);

    st.z.resize(n);
    const double denom = st.stddev + 1e-8;
    for (int i = 0; i < n; ++i) st.z[i] = (scores[i] - st.mean) / denom;

    st.argmax = static_cast<int>(std::max_element(st.z.begin(), st.z.end()) - st.z.begin());
    st.argmin = static_cast<int>(std::min_element(st.z.begin(), st.z.end()) - st.z.begin());
    const double y_sel = st.z[st.argmax];
    const double y_rej = st.z[st.argmin];

    st.gap.resize(n);
    for (int i = 0; i < n; ++i) {
        const double c_rej = (st.z[i] - y_rej) * (st.z[i] - y_rej);
        const double c_sel = (st.z[i] - y_sel) * (st.z[i] - y_sel);
        st.gap[i] = c_rej - c_sel;
    }

    if (k == n) {
        // The rejected column carries no mass; everything is selected.
        st.probs.assign(n, 1.0);
        st.delta = 0.0;
        st.converged = true;
        return st;
    }

    const double eps = cfg.epsilon;
    // Sinkhorn on the two-column transport in the log domain. Within a source
    // row the transported mass splits as sigmoid((delta + gap_i)/eps), so the
    // column update reduces to an update of delta = g_sel - g_rej.
    const double log_nu_sel = std::log(static_cast<double>(k) / n);
    const double log_nu_rej = std::log(static_cast<double>(n - k) / n);
    double delta = 0.0;
    st.converged = false;
    for (int it = 0; it < cfg.max_iters; ++it) {
        st.iterations = it + 1;
        if (std::abs(budget_residual(st.gap, delta, eps, k)) <= cfg.convergence_tol) {
            st.converged = true;
            break;
        }
        // f_i = -eps * log-sum over columns; then g_j matches column masses.
        double lse_sel = -std::numeric_limits<double>::infinity();
        double lse_rej = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            // f_i + log(1/N) with C_i dropped into the gap parameterization:
            // within-row weights are exp((g_sel + gap_i/2)/eps), exp((g_rej - gap_i/2)/eps)
            // up to a common factor; only the difference matters below.
            const double row_lse = log_add(delta / eps + st.gap[i] / (2.0 * eps), -st.gap[i] / (2.0 * eps));
            const double f = -row_lse; // log weight normalizing the row to mass 1/N (constants cancel)
            lse_sel = log_add(lse_sel, f + st.gap[i] / (2.0 * eps));
            lse_rej = log_add(lse_rej, f - st.gap[i] / (2.0 * eps));
        }
        const double g_sel = log_nu_sel - lse_sel;
        const double g_rej = log_nu_rej - lse_rej;
        delta = eps * (g_sel - g_rej);
    }

    if (!st.converged || std::abs(budget_residual(st.gap, delta, eps, k)) > 1e-12) {
        // Exact projection of the column potential: the residual is strictly
        // monotone in delta, so bisection always lands on the fixed point.
        double span = 0.0;
        for (double d : st.gap) span = std::max(span, std::abs(d));
        double lo = -span - 50.0 * eps;
        double hi = span + 50.0 * eps;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (budget_residual(st.gap, mid, eps, k) < 0.0)
                lo = mid;
            else
                hi = mid;
        }
        delta = 0.5 * (lo + hi);
        st.converged = true;
    }

    st.delta = delta;
    st.probs.resize(n);
    for (int i = 0; i < n; ++i) st.probs[i] = stable_sigmoid((delta + st.gap[i]) / eps);
    return st;
}

std::vector<double> soft_topk_backward(const SoftTopKState& st, const std::vector<double>& upstream) {
    if (!st.converged) throw NumericError("soft_topk_backward: backward on unconverged transport");
    const int n = static_cast<int>(st.probs.size());
    if (static_cast<int>(upstream.size()) != n)
        throw std::invalid_argument("soft_topk_backward: upstream size mismatch");

    std::vector<double> dx(n, 0.0);
    if (st.k == n) return dx; // probs pinned at 1 regardless of scores

    const double eps = st.epsilon;
    // Differentiate the fixed point sum_i sigmoid((delta + gap_i)/eps) = k:
    //   dp_i = s_i (ddelta + dgap_i),  ddelta = -sum(s dgap)/sum(s)
    std::vector<double> sens(n);
    double sens_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sens[i] = st.probs[i] * (1.0 - st.probs[i]) / eps;
        sens_sum += sens[i];
    }
    if (!(sens_sum > 0.0)) return dx; // saturated hard-limit regime: locally flat

    double weighted_up = 0.0;
    for (int i = 0; i < n; ++i) weighted_up += upstream[i] * sens[i];
    weighted_up /= sens_sum;

    std::vector<double> dgap(n);
    for (int i = 0; i < n; ++i) dgap[i] = sens[i] * (upstream[i] - weighted_up);

    // gap_i = (z_i - y_rej)^2 - (z_i - y_sel)^2 with anchors at the extreme
    // standardized scores.
    const double y_sel = st.z[st.argmax];
    const double y_rej = st.z[st.argmin];
    std::vector<double> dz(n, 0.0);
    double danchor_sel = 0.0, danchor_rej = 0.0;
    for (int i = 0; i < n; ++i) {
        dz[i] += dgap[i] * (2.0 * (st.z[i] - y_rej) - 2.0 * (st.z[i] - y_sel));
        danchor_sel += dgap[i] * 2.0 * (st.z[i] - y_sel);
        danchor_rej += dgap[i] * (-2.0 * (st.z[i] - y_rej));
    }
    dz[st.argmax] += danchor_sel;
    dz[st.argmin] += danchor_rej;

    // Standardization backward: z_i = (x_i - mean) / (stddev + 1e-8).
    const double denom = st.stddev + 1e-8;
    double dz_sum = 0.0;
    for (int i = 0; i < n; ++i) dz_sum += dz[i];
    double dstd_coeff = 0.0;
    if (st.stddev > 1e-12) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += dz[i] * (st.scores[i] - st.mean);
        dstd_coeff = -acc / (denom * denom);
    }
    for (int i = 0; i < n; ++i) {
        dx[i] = (dz[i] - dz_sum / n) / denom;
        if (st.stddev > 1e-12) dx[i] += dstd_coeff * (st.scores[i] - st.mean) / (n * st.stddev);
    }
    return dx;
}

} // namespace rmab
