#pragma once

#include "rmab/rng.hpp"
#include "rmab/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rmab {

struct DatasetSpec {
    int num_instances = 20;
    int num_arms = 100;      // N
    int num_states = 2;      // M
    int budget = 20;         // K
    int horizon = 10;        // T
    double discount = 0.99;
    int num_trajectories = 10; // |T| per instance
    int feature_dim = 16;
    std::uint64_t seed = 0;
    std::string observability = "full"; // "full" | "collapsing"
};

// Rows sampled uniformly on the simplex (sorted-uniform gaps); per state the
// active row must beat the passive row on expected next-state reward by at
// least 1e-3, rejection-sampled. More than 10^4 rejections at one state means
// the spec is pathological and raises an error.
std::vector<TransitionKernel> generate_kernels(int num_arms, int num_states, const RewardVector& reward,
                                               Rng& rng);

// Frozen random feature network: flattened kernel -> 64 -> 64 -> feature_dim,
// ReLU on the hidden layers, linear output. Weights are drawn once from `rng`
// (per dataset), so identical kernels map to identical features.
std::vector<std::vector<double>> generate_features(const std::vector<TransitionKernel>& kernels,
                                                   int feature_dim, Rng& rng);

// Uniformly random size-K subset of arms pulled at every step; the recorded
// behavior probability of the taken action is K/N for pulled arms and
// 1 - K/N otherwise. Initial states are uniform.
std::vector<Trajectory> rollout_behavior(const RmabInstance& inst, int count, Rng& rng);

struct Dataset {
    DatasetSpec spec;
    std::vector<RmabInstance> instances;
    std::vector<std::vector<std::vector<double>>> features; // [instance][arm][dim]
    std::vector<std::vector<Trajectory>> trajectories;      // [instance][traj]
};

Dataset generate_dataset(const DatasetSpec& spec);

// Directory layout: spec.json, instance_<k>.json, features_<k>.json,
// trajectories_<k>.json; collapsing datasets additionally write
// belief_chains_<k>.json (per-arm chain in the instance format plus an
// annotation block mapping chain ids to (omega, d)).
void write_dataset(const std::string& dir, const Dataset& dataset);
Dataset load_dataset(const std::string& dir);

// FNV-1a over the canonical files, for reproducibility checks.
std::uint64_t dataset_hash(const std::string& dir);

std::string spec_to_json(const DatasetSpec& spec);
DatasetSpec spec_from_json(const std::string& text);

} // namespace rmab
