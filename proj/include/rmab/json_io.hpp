#pragma once

#include "rmab/types.hpp"

#include <string>
#include <vector>

namespace rmab {

// Instance files use the layout
//   { "num_states", "budget", "horizon", "discount", "reward": [..],
//     "arms": [ [ [ [p,..], [p,..] ], .. per state ], .. per arm ] }
// i.e. arm-major, then state, then action, then next-state.
//
// Kernel rows read from disk are re-normalized when their sum is within 1e-6
// of 1 and rejected otherwise; silently normalizing worse data would mask
// generator bugs.
std::string instance_to_json(const RmabInstance& inst);
RmabInstance instance_from_json(const std::string& text);

std::string trajectories_to_json(const std::vector<Trajectory>& trajs);
std::vector<Trajectory> trajectories_from_json(const std::string& text);

std::string features_to_json(const std::vector<std::vector<double>>& features);
std::vector<std::vector<double>> features_from_json(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// FNV-1a over the byte content; used for dataset/artifact hashes.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

} // namespace rmab
