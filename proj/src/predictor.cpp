#include "rmab/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace rmab {

void GradientSet::accumulate(const GradientSet& other, double scale) {
    auto add = [scale](std::vector<double>& dst, const std::vector<double>& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
    };
    add(w1, other.w1);
    add(b1, other.b1);
    add(w2, other.w2);
    add(b2, other.b2);
}

double GradientSet::max_abs() const {
    double m = 0.0;
    for (const auto* v : {&w1, &b1, &w2, &b2})
        for (double x : *v) m = std::max(m, std::abs(x));
    return m;
}

PredictorModel PredictorModel::init(const PredictorConfig& cfg, Rng& rng) {
    PredictorModel model;
    model.cfg = cfg;
    const int out = cfg.output_dim();
    model.w1.resize(static_cast<std::size_t>(cfg.hidden_dim) * cfg.input_dim);
    model.b1.resize(cfg.hidden_dim);
    model.w2.resize(static_cast<std::size_t>(out) * cfg.hidden_dim);
    model.b2.resize(out);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(cfg.input_dim));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
    for (double& w : model.w1) w = rng.uniform(-bound1, bound1);
    for (double& w : model.b1) w = rng.uniform(-bound1, bound1);
    for (double& w : model.w2) w = rng.uniform(-bound2, bound2);
    for (double& w : model.b2) w = rng.uniform(-bound2, bound2);
    return model;
}

ForwardCache PredictorModel::forward(const std::vector<std::vector<double>>& features, bool training,
                                     Rng* rng) const {
    const int n = static_cast<int>(features.size());
    const int m = cfg.num_states;
    const int out = cfg.output_dim();
    const bool drop = training && cfg.dropout > 0.0;
    if (drop && rng == nullptr)
        throw std::invalid_argument("predictor forward: dropout requires an rng in training mode");
    const double keep = 1.0 - cfg.dropout;

    ForwardCache cache;
    cache.hidden.resize(n);
    cache.hidden_slope.resize(n);
    cache.kernels.reserve(n);

    for (int arm = 0; arm < n; ++arm) {
        const std::vector<double>& x = features[arm];
        if (static_cast<int>(x.size()) != cfg.input_dim)
            throw std::invalid_argument("predictor forward: feature length != input_dim");

        std::vector<double>& h = cache.hidden[arm];
        std::vector<double>& slope = cache.hidden_slope[arm];
        h.assign(cfg.hidden_dim, 0.0);
        slope.assign(cfg.hidden_dim, 0.0);
        for (int j = 0; j < cfg.hidden_dim; ++j) {
            double pre = b1[j];
            const double* wrow = w1.data() + static_cast<std::size_t>(j) * cfg.input_dim;
            for (int d = 0; d < cfg.input_dim; ++d) pre += wrow[d] * x[d];
            double scale = pre > 0.0 ? 1.0 : 0.0;
            if (drop && scale > 0.0) scale = rng->uniform() < cfg.dropout ? 0.0 : 1.0 / keep;
            h[j] = scale * std::max(pre, 0.0);
            slope[j] = scale;
        }

        std::vector<double> logits(out);
        for (int o = 0; o < out; ++o) {
            double v = b2[o];
            const double* wrow = w2.data() + static_cast<std::size_t>(o) * cfg.hidden_dim;
            for (int j = 0; j < cfg.hidden_dim; ++j) v += wrow[j] * h[j];
            logits[o] = v;
        }

        TransitionKernel kernel(m);
        for (int head = 0; head < m * kNumActions; ++head) {
            const double* l = logits.data() + static_cast<std::size_t>(head) * m;
            double hi = *std::max_element(l, l + m);
            double z = 0.0;
            for (int sp = 0; sp < m; ++sp) z += std::exp(l[sp] - hi);
            for (int sp = 0; sp < m; ++sp)
                kernel.probs[static_cast<std::size_t>(head) * m + sp] = std::exp(l[sp] - hi) / z;
        }
        cache.kernels.push_back(std::move(kernel));
    }
    return cache;
}

std::vector<TransitionKernel> PredictorModel::predict(
    const std::vector<std::vector<double>>& features) const {
    return forward(features, false, nullptr).kernels;
}

GradientSet PredictorModel::zero_gradient() const {
    GradientSet g;
    g.w1.assign(w1.size(), 0.0);
    g.b1.assign(b1.size(), 0.0);
    g.w2.assign(w2.size(), 0.0);
    g.b2.assign(b2.size(), 0.0);
    return g;
}

GradientSet PredictorModel::backprop(const std::vector<std::vector<double>>& features,
                                     const ForwardCache& cache,
                                     const std::vector<std::vector<double>>& upstream) const {
    const int n = static_cast<int>(features.size());
    const int m = cfg.num_states;
    const int out = cfg.output_dim();
    if (static_cast<int>(upstream.size()) != n)
        throw std::invalid_argument("predictor backprop: upstream arm count mismatch");

    GradientSet grad = zero_gradient();
    std::vector<double> dlogits(out), dh(cfg.hidden_dim);

    for (int arm = 0; arm < n; ++arm) {
        const std::vector<double>& up = upstream[arm];
        if (static_cast<int>(up.size()) != out)
            throw std::invalid_argument("predictor backprop: upstream cell count mismatch");
        const TransitionKernel& kernel = cache.kernels[arm];
        const std::vector<double>& h = cache.hidden[arm];
        const std::vector<double>& slope = cache.hidden_slope[arm];
        const std::vector<double>& x = features[arm];

        // Softmax heads: dlogit = p .* (up - <up, p>) per head row.
        for (int head = 0; head < m * kNumActions; ++head) {
            const double* p = kernel.probs.data() + static_cast<std::size_t>(head) * m;
            const double* u = up.data() + static_cast<std::size_t>(head) * m;
            double dot = 0.0;
            for (int sp = 0; sp < m; ++sp) dot += u[sp] * p[sp];
            for (int sp = 0; sp < m; ++sp)
                dlogits[static_cast<std::size_t>(head) * m + sp] = p[sp] * (u[sp] - dot);
        }

        std::fill(dh.begin(), dh.end(), 0.0);
        for (int o = 0; o < out; ++o) {
            const double d = dlogits[o];
            if (d == 0.0) continue;
            double* gw = grad.w2.data() + static_cast<std::size_t>(o) * cfg.hidden_dim;
            const double* wrow = w2.data() + static_cast<std::size_t>(o) * cfg.hidden_dim;
            for (int j = 0; j < cfg.hidden_dim; ++j) {
                gw[j] += d * h[j];
                dh[j] += d * wrow[j];
            }
            grad.b2[o] += d;
        }

        for (int j = 0; j < cfg.hidden_dim; ++j) {
            const double dpre = dh[j] * slope[j];
            if (dpre == 0.0) continue;
            double* gw = grad.w1.data() + static_cast<std::size_t>(j) * cfg.input_dim;
            for (int d = 0; d < cfg.input_dim; ++d) gw[d] += dpre * x[d];
            grad.b1[j] += dpre;
        }
    }
    return grad;
}

void PredictorModel::apply_gradient(const GradientSet& grad, double step) {
    auto axpy = [step](std::vector<double>& w, const std::vector<double>& g) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += step * g[i];
    };
    axpy(w1, grad.w1);
    axpy(b1, grad.b1);
    axpy(w2, grad.w2);
    axpy(b2, grad.b2);
}

std::string PredictorModel::to_json() const {
    nlohmann::json j;
    j["format"] = "rmab-predictor-checkpoint";
    j["version"] = 1;
    j["input_dim"] = cfg.input_dim;
    j["hidden_dim"] = cfg.hidden_dim;
    j["num_states"] = cfg.num_states;
    j["dropout"] = cfg.dropout;
    j["w1"] = w1;
    j["b1"] = b1;
    j["w2"] = w2;
    j["b2"] = b2;
    return j.dump();
}

PredictorModel PredictorModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("checkpoint parse error: ") + e.what());
    }
    if (j.value("format", "") != "rmab-predictor-checkpoint" || j.value("version", 0) != 1)
        throw IoError("checkpoint: unknown format or version");
    PredictorModel model;
    model.cfg.input_dim = j.at("input_dim").get<int>();
    model.cfg.hidden_dim = j.at("hidden_dim").get<int>();
    model.cfg.num_states = j.at("num_states").get<int>();
    model.cfg.dropout = j.at("dropout").get<double>();
    model.w1 = j.at("w1").get<std::vector<double>>();
    model.b1 = j.at("b1").get<std::vector<double>>();
    model.w2 = j.at("w2").get<std::vector<double>>();
    model.b2 = j.at("b2").get<std::vector<double>>();
    const std::size_t out = static_cast<std::size_t>(model.cfg.output_dim());
    if (model.w1.size() != static_cast<std::size_t>(model.cfg.hidden_dim) * model.cfg.input_dim ||
        model.b1.size() != static_cast<std::size_t>(model.cfg.hidden_dim) ||
        model.w2.size() != out * model.cfg.hidden_dim || model.b2.size() != out)
        throw IoError("checkpoint: weight shapes disagree with dims");
    return model;
}

std::pair<double, std::vector<std::vector<double>>> nll_loss(const std::vector<TransitionKernel>& kernels,
                                                             const std::vector<Trajectory>& trajs) {
    const int n = static_cast<int>(kernels.size());
    if (trajs.empty()) throw std::invalid_argument("nll_loss: no trajectories");
    const int m = kernels.empty() ? 0 : kernels.front().num_states;
    const double inv_count = 1.0 / static_cast<double>(trajs.size());

    std::vector<std::vector<double>> grad(n);
    for (int i = 0; i < n; ++i) grad[i].assign(static_cast<std::size_t>(m) * kNumActions * m, 0.0);

    double loss = 0.0;
    for (const Trajectory& tr : trajs) {
        if (tr.num_arms != n) throw std::invalid_argument("nll_loss: trajectory arm count mismatch");
        for (int t = 0; t + 1 < tr.horizon; ++t) {
            for (int i = 0; i < n; ++i) {
                const int s = tr.state(t, i);
                const int a = tr.action(t, i);
                const int sp = tr.state(t + 1, i);
                const double p = kernels[i](s, a, sp);
                loss -= inv_count * std::log(p);
                grad[i][(static_cast<std::size_t>(s) * kNumActions + a) * m + sp] -= inv_count / p;
            }
        }
    }
    return {loss, std::move(grad)};
}

} // namespace rmab
