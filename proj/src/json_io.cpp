#include "rmab/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rmab {

using nlohmann::json;

namespace {

json kernel_to_json(const TransitionKernel& k) {
    json arm = json::array();
    for (int s = 0; s < k.num_states; ++s) {
        json per_state = json::array();
        for (int a = 0; a < kNumActions; ++a) {
            json row = json::array();
            for (int sp = 0; sp < k.num_states; ++sp) row.push_back(k(s, a, sp));
            per_state.push_back(std::move(row));
        }
        arm.push_back(std::move(per_state));
    }
    return arm;
}

TransitionKernel kernel_from_json(const json& arm, int num_states, int arm_index) {
    TransitionKernel k(num_states);
    if (static_cast<int>(arm.size()) != num_states)
        throw IoError("arms[" + std::to_string(arm_index) + "]: expected " + std::to_string(num_states) +
                      " states");
    for (int s = 0; s < num_states; ++s) {
        if (static_cast<int>(arm[s].size()) != kNumActions)
            throw IoError("arms[" + std::to_string(arm_index) + "][" + std::to_string(s) +
                          "]: expected 2 actions");
        for (int a = 0; a < kNumActions; ++a) {
            const json& row = arm[s][a];
            if (static_cast<int>(row.size()) != num_states)
                throw IoError("arms[" + std::to_string(arm_index) + "][" + std::to_string(s) + "][" +
                              std::to_string(a) + "]: expected " + std::to_string(num_states) + " entries");
            double sum = 0.0;
            for (int sp = 0; sp < num_states; ++sp) {
                const double p = row[sp].get<double>();
                if (!std::isfinite(p) || p < 0.0)
                    throw IoError("arms[" + std::to_string(arm_index) + "][" + std::to_string(s) + "][" +
                                  std::to_string(a) + "][" + std::to_string(sp) + "]: bad probability");
                k.at(s, a, sp) = p;
                sum += p;
            }
            if (std::abs(sum - 1.0) > kIngestRowSumTol)
                throw IoError("arms[" + std::to_string(arm_index) + "][" + std::to_string(s) + "][" +
                              std::to_string(a) + "]: row sum " + std::to_string(sum) +
                              " further than 1e-6 from 1, rejecting");
            for (int sp = 0; sp < num_states; ++sp) k.at(s, a, sp) /= sum;
        }
    }
    return k;
}

} // namespace

std::string instance_to_json(const RmabInstance& inst) {
    json j;
    j["num_states"] = inst.num_states();
    j["budget"] = inst.budget;
    j["horizon"] = inst.horizon;
    j["discount"] = inst.discount;
    j["reward"] = inst.reward.values;
    json arms = json::array();
    for (const auto& k : inst.arms) arms.push_back(kernel_to_json(k));
    j["arms"] = std::move(arms);
    return j.dump(2);
}

RmabInstance instance_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("instance parse error: ") + e.what());
    }
    RmabInstance inst;
    try {
        const int m = j.at("num_states").get<int>();
        inst.budget = j.at("budget").get<int>();
        inst.horizon = j.at("horizon").get<int>();
        inst.discount = j.at("discount").get<double>();
        inst.reward.values = j.at("reward").get<std::vector<double>>();
        const json& arms = j.at("arms");
        inst.arms.reserve(arms.size());
        for (std::size_t i = 0; i < arms.size(); ++i)
            inst.arms.push_back(kernel_from_json(arms[i], m, static_cast<int>(i)));
    } catch (const json::exception& e) {
        throw IoError(std::string("instance field error: ") + e.what());
    }
    return inst;
}

namespace {

template <typename T>
json grid_to_json(const std::vector<T>& flat, int t, int n) {
    json rows = json::array();
    for (int ti = 0; ti < t; ++ti) {
        json row = json::array();
        for (int i = 0; i < n; ++i) row.push_back(flat[static_cast<std::size_t>(ti) * n + i]);
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename T>
std::vector<T> grid_from_json(const json& rows, int& t, int& n, const char* name) {
    t = static_cast<int>(rows.size());
    std::vector<T> flat;
    for (int ti = 0; ti < t; ++ti) {
        const json& row = rows[ti];
        if (ti == 0) n = static_cast<int>(row.size());
        if (static_cast<int>(row.size()) != n)
            throw IoError(std::string(name) + ": ragged rows");
        for (const auto& v : row) flat.push_back(v.get<T>());
    }
    return flat;
}

} // namespace

std::string trajectories_to_json(const std::vector<Trajectory>& trajs) {
    json arr = json::array();
    for (const auto& tr : trajs) {
        json j;
        j["states"] = grid_to_json(tr.states, tr.horizon, tr.num_arms);
        j["actions"] = grid_to_json(tr.actions, tr.horizon, tr.num_arms);
        j["rewards"] = grid_to_json(tr.rewards, tr.horizon, tr.num_arms);
        j["behavior_probs"] = grid_to_json(tr.behavior_probs, tr.horizon, tr.num_arms);
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

std::vector<Trajectory> trajectories_from_json(const std::string& text) {
    json arr;
    try {
        arr = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("trajectory parse error: ") + e.what());
    }
    std::vector<Trajectory> out;
    for (const auto& j : arr) {
        Trajectory tr;
        int t = 0, n = 0;
        tr.states = grid_from_json<int>(j.at("states"), t, n, "states");
        tr.horizon = t;
        tr.num_arms = n;
        int t2 = 0, n2 = 0;
        tr.actions = grid_from_json<int>(j.at("actions"), t2, n2, "actions");
        tr.rewards = grid_from_json<double>(j.at("rewards"), t2, n2, "rewards");
        tr.behavior_probs = grid_from_json<double>(j.at("behavior_probs"), t2, n2, "behavior_probs");
        if (tr.actions.size() != tr.states.size() || tr.rewards.size() != tr.states.size() ||
            tr.behavior_probs.size() != tr.states.size())
            throw IoError("trajectory: field shapes disagree");
        out.push_back(std::move(tr));
    }
    return out;
}

std::string features_to_json(const std::vector<std::vector<double>>& features) {
    json arr = json::array();
    for (const auto& f : features) arr.push_back(f);
    return arr.dump(2);
}

std::vector<std::vector<double>> features_from_json(const std::string& text) {
    json arr;
    try {
        arr = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("features parse error: ") + e.what());
    }
    std::vector<std::vector<double>> out;
    for (const auto& f : arr) out.push_back(f.get<std::vector<double>>());
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("write failed for " + path);
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace rmab
