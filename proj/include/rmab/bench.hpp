#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rmab {

inline constexpr double kMatrixExponent = 2.373;

struct BenchPoint {
    std::string scan; // "arms" | "states"
    int num_arms = 0;
    int num_states = 0;
    int reps = 0;
    double mean_ms = 0.0;
    double std_ms = 0.0;
    double ref_ms = 0.0; // c * N * M^(omega+1), c fitted in log space
};

struct BenchReport {
    std::vector<BenchPoint> points;
    double slope_vs_arms = 0.0;   // log-log fit over the arm scan
    double slope_vs_states = 0.0; // log-log fit over the state scan

    std::string to_csv() const;
};

// Times one full decision-focused gradient step (forward + backward chain)
// per grid point on synthetic instances. Dataset generation and model init
// are excluded from the timed region; each point runs one warm-up iteration
// plus `reps` timed repetitions (reps >= 5 enforced).
BenchReport run_bench(const std::vector<int>& arm_grid, int fixed_states,
                      const std::vector<int>& state_grid, int fixed_arms, int reps,
                      std::uint64_t seed, int threads, double discount = 0.9);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace rmab
