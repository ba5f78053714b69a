#include "rmab/datagen.hpp"

#include "rmab/belief.hpp"
#include "rmab/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace rmab {

namespace {

constexpr double kDominanceMargin = 1e-3;
constexpr int kMaxRejections = 10000;

// Uniform sample on the probability simplex via sorted uniform gaps.
void sample_simplex(double* row, int m, Rng& rng) {
    if (m == 1) {
        row[0] = 1.0;
        return;
    }
    std::vector<double> cuts(m - 1);
    for (double& c : cuts) c = rng.uniform();
    std::sort(cuts.begin(), cuts.end());
    double prev = 0.0;
    for (int i = 0; i < m - 1; ++i) {
        row[i] = cuts[i] - prev;
        prev = cuts[i];
    }
    row[m - 1] = 1.0 - prev;
}

double expected_next_reward(const double* row, const RewardVector& reward, int m) {
    double v = 0.0;
    for (int sp = 0; sp < m; ++sp) v += row[sp] * reward.values[sp];
    return v;
}

} // namespace

std::vector<TransitionKernel> generate_kernels(int num_arms, int num_states, const RewardVector& reward,
                                               Rng& rng) {
    std::vector<TransitionKernel> kernels;
    kernels.reserve(num_arms);
    for (int i = 0; i < num_arms; ++i) {
        TransitionKernel k(num_states);
        for (int s = 0; s < num_states; ++s) {
            int attempts = 0;
            for (;;) {
                sample_simplex(k.row(s, 0), num_states, rng);
                sample_simplex(k.row(s, 1), num_states, rng);
                const double passive = expected_next_reward(k.row(s, 0), reward, num_states);
                const double active = expected_next_reward(k.row(s, 1), reward, num_states);
                if (active > passive + kDominanceMargin) break;
                if (++attempts >= kMaxRejections)
                    throw std::runtime_error("generate_kernels: " + std::to_string(kMaxRejections) +
                                             " rejections at arm " + std::to_string(i) + " state " +
                                             std::to_string(s) + "; dominance constraint unsatisfiable");
            }
        }
        kernels.push_back(std::move(k));
    }
    return kernels;
}

namespace {

// Fixed random two-hidden-layer network applied to a flattened kernel.
struct FeatureNet {
    int in_dim, out_dim;
    static constexpr int kHidden = 64;
    std::vector<double> w1, b1, w2, b2, w3, b3;

    FeatureNet(int in, int out, Rng& rng) : in_dim(in), out_dim(out) {
        auto fill = [&rng](std::vector<double>& w, int rows, int cols) {
            w.resize(static_cast<std::size_t>(rows) * cols);
            const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
            for (double& x : w) x = rng.uniform(-bound, bound);
        };
        auto fill_bias = [&rng](std::vector<double>& b, int rows, int fan_in) {
            b.resize(rows);
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (double& x : b) x = rng.uniform(-bound, bound);
        };
        fill(w1, kHidden, in_dim);
        fill_bias(b1, kHidden, in_dim);
        fill(w2, kHidden, kHidden);
        fill_bias(b2, kHidden, kHidden);
        fill(w3, out_dim, kHidden);
        fill_bias(b3, out_dim, kHidden);
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        auto layer = [](const std::vector<double>& w, const std::vector<double>& b,
                        const std::vector<double>& in, bool relu) {
            const int rows = static_cast<int>(b.size());
            const int cols = static_cast<int>(in.size());
            std::vector<double> out(rows);
            for (int r = 0; r < rows; ++r) {
                double v = b[r];
                const double* wr = w.data() + static_cast<std::size_t>(r) * cols;
                for (int c = 0; c < cols; ++c) v += wr[c] * in[c];
                out[r] = relu ? std::max(v, 0.0) : v;
            }
            return out;
        };
        return layer(w3, b3, layer(w2, b2, layer(w1, b1, x, true), true), false);
    }
};

} // namespace

std::vector<std::vector<double>> generate_features(const std::vector<TransitionKernel>& kernels,
                                                   int feature_dim, Rng& rng) {
    if (kernels.empty()) return {};
    const int in_dim = static_cast<int>(kernels.front().probs.size());
    FeatureNet net(in_dim, feature_dim, rng);
    std::vector<std::vector<double>> features;
    features.reserve(kernels.size());
    for (const auto& k : kernels) features.push_back(net.apply(k.probs));
    return features;
}

std::vector<Trajectory> rollout_behavior(const RmabInstance& inst, int count, Rng& rng) {
    const int n = inst.num_arms();
    const int m = inst.num_states();
    const int k = inst.budget;
    const double pull_prob = static_cast<double>(k) / n;

    std::vector<Trajectory> out;
    out.reserve(count);
    std::vector<int> ids(n);
    for (int j = 0; j < count; ++j) {
        Trajectory tr(inst.horizon, n);
        std::vector<int> state(n);
        for (int i = 0; i < n; ++i) state[i] = static_cast<int>(rng.uniform_int(m));
        for (int t = 0; t < inst.horizon; ++t) {
            std::iota(ids.begin(), ids.end(), 0);
            for (int r = 0; r < k; ++r) {
                const int pick = r + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - r)));
                std::swap(ids[r], ids[pick]);
            }
            std::vector<int> action(n, 0);
            for (int r = 0; r < k; ++r) action[ids[r]] = 1;

            for (int i = 0; i < n; ++i) {
                const std::size_t c = tr.idx(t, i);
                tr.states[c] = state[i];
                tr.actions[c] = action[i];
                tr.rewards[c] = inst.reward.values[state[i]];
                tr.behavior_probs[c] = action[i] == 1 ? pull_prob : 1.0 - pull_prob;
            }
            for (int i = 0; i < n; ++i) {
                const double* row = inst.arms[i].row(state[i], action[i]);
                double target = rng.uniform();
                int sp = m - 1;
                for (int cand = 0; cand < m; ++cand) {
                    target -= row[cand];
                    if (target < 0.0) {
                        sp = cand;
                        break;
                    }
                }
                state[i] = sp;
            }
        }
        out.push_back(std::move(tr));
    }
    return out;
}

Dataset generate_dataset(const DatasetSpec& spec) {
    if (spec.observability != "full" && spec.observability != "collapsing")
        throw std::invalid_argument("generate_dataset: observability must be full or collapsing");
    if (spec.observability == "collapsing" && spec.num_states != 2)
        throw std::invalid_argument("generate_dataset: collapsing datasets require 2 states");

    Dataset ds;
    ds.spec = spec;
    const RewardVector reward = ladder_reward(spec.num_states);
    Rng root(spec.seed);

    for (int inst_id = 0; inst_id < spec.num_instances; ++inst_id) {
        Rng inst_rng = root.split(static_cast<std::uint64_t>(inst_id));
        RmabInstance inst;
        inst.reward = reward;
        inst.budget = spec.budget;
        inst.horizon = spec.horizon;
        inst.discount = spec.discount;
        inst.arms = generate_kernels(spec.num_arms, spec.num_states, reward, inst_rng);
        ds.features.push_back(generate_features(inst.arms, spec.feature_dim, inst_rng));
        ds.trajectories.push_back(rollout_behavior(inst, spec.num_trajectories, inst_rng));
        ds.instances.push_back(std::move(inst));
    }
    return ds;
}

std::string spec_to_json(const DatasetSpec& spec) {
    nlohmann::json j;
    j["num_instances"] = spec.num_instances;
    j["num_arms"] = spec.num_arms;
    j["num_states"] = spec.num_states;
    j["budget"] = spec.budget;
    j["horizon"] = spec.horizon;
    j["discount"] = spec.discount;
    j["num_trajectories"] = spec.num_trajectories;
    j["feature_dim"] = spec.feature_dim;
    j["seed"] = spec.seed;
    j["observability"] = spec.observability;
    return j.dump(2);
}

DatasetSpec spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("spec parse error: ") + e.what());
    }
    DatasetSpec spec;
    spec.num_instances = j.at("num_instances").get<int>();
    spec.num_arms = j.at("num_arms").get<int>();
    spec.num_states = j.at("num_states").get<int>();
    spec.budget = j.at("budget").get<int>();
    spec.horizon = j.at("horizon").get<int>();
    spec.discount = j.at("discount").get<double>();
    spec.num_trajectories = j.at("num_trajectories").get<int>();
    spec.feature_dim = j.at("feature_dim").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.observability = j.at("observability").get<std::string>();
    return spec;
}

namespace {

std::string chains_to_json(const RmabInstance& inst, int horizon, double discount) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& arm : inst.arms) {
        const BeliefChain chain = expand_belief_chain(arm, inst.reward, horizon);
        RmabInstance chain_inst;
        chain_inst.arms = {chain.kernel};
        chain_inst.reward = chain.reward;
        chain_inst.budget = 1;
        chain_inst.horizon = horizon;
        chain_inst.discount = discount;
        nlohmann::json entry;
        entry["instance"] = nlohmann::json::parse(instance_to_json(chain_inst));
        entry["annotation"] = nlohmann::json::parse(chain.annotation_json());
        arr.push_back(std::move(entry));
    }
    return arr.dump(2);
}

} // namespace

void write_dataset(const std::string& dir, const Dataset& dataset) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());

    write_file(dir + "/spec.json", spec_to_json(dataset.spec));
    for (int k = 0; k < dataset.spec.num_instances; ++k) {
        const std::string suffix = std::to_string(k) + ".json";
        write_file(dir + "/instance_" + suffix, instance_to_json(dataset.instances[k]));
        write_file(dir + "/features_" + suffix, features_to_json(dataset.features[k]));
        write_file(dir + "/trajectories_" + suffix, trajectories_to_json(dataset.trajectories[k]));
        if (dataset.spec.observability == "collapsing")
            write_file(dir + "/belief_chains_" + suffix,
                       chains_to_json(dataset.instances[k], dataset.spec.horizon,
                                      dataset.spec.discount));
    }
}

Dataset load_dataset(const std::string& dir) {
    Dataset ds;
    ds.spec = spec_from_json(read_file(dir + "/spec.json"));
    for (int k = 0; k < ds.spec.num_instances; ++k) {
        const std::string suffix = std::to_string(k) + ".json";
        ds.instances.push_back(instance_from_json(read_file(dir + "/instance_" + suffix)));
        ds.features.push_back(features_from_json(read_file(dir + "/features_" + suffix)));
        ds.trajectories.push_back(trajectories_from_json(read_file(dir + "/trajectories_" + suffix)));
        const auto problems = validate_instance(ds.instances.back());
        if (!problems.empty())
            throw IoError("dataset instance " + std::to_string(k) + ": " + problems.front());
    }
    return ds;
}

std::uint64_t dataset_hash(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& name : names) {
        h = fnv1a(name, h);
        h = fnv1a(read_file(dir + "/" + name), h);
    }
    return h;
}

} // namespace rmab
