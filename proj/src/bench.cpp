#include "rmab/bench.hpp"

#include "rmab/training.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rmab {

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    if (n < 2) throw std::invalid_argument("loglog_slope: need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

double time_gradient_step(int num_arms, int num_states, int reps, std::uint64_t seed, int threads,
                          double discount, double& std_ms) {
    DatasetSpec spec;
    spec.num_instances = 1;
    spec.num_arms = num_arms;
    spec.num_states = num_states;
    spec.budget = std::max(1, num_arms / 5);
    spec.horizon = 10;
    spec.discount = discount;
    spec.num_trajectories = 2;
    spec.feature_dim = 16;
    spec.seed = seed;
    const Dataset ds = generate_dataset(spec);

    PredictorConfig pcfg;
    pcfg.input_dim = spec.feature_dim;
    pcfg.hidden_dim = 64;
    pcfg.num_states = num_states;
    pcfg.dropout = 0.0;
    Rng init_rng(seed ^ 0xbe9c0ULL);
    const PredictorModel model = PredictorModel::init(pcfg, init_rng);

    TrainConfig cfg;
    cfg.threads = threads;
    cfg.gamma = discount;

    std::vector<double> samples;
    samples.reserve(reps);
    for (int r = 0; r < reps + 1; ++r) { // first iteration is warm-up
        const auto start = std::chrono::steady_clock::now();
        df_whittle_gradient(ds.instances[0], ds.features[0], ds.trajectories[0], model, cfg);
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        if (r > 0) samples.push_back(ms);
    }

    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= samples.size();
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    std_ms = samples.size() > 1 ? std::sqrt(var / (samples.size() - 1)) : 0.0;
    return mean;
}

} // namespace

BenchReport run_bench(const std::vector<int>& arm_grid, int fixed_states,
                      const std::vector<int>& state_grid, int fixed_arms, int reps,
                      std::uint64_t seed, int threads, double discount) {
    if (reps < 5) throw std::invalid_argument("run_bench: need at least 5 repetitions per point");

    BenchReport report;
    auto measure = [&](const std::string& scan, int n, int m) {
        BenchPoint pt;
        pt.scan = scan;
        pt.num_arms = n;
        pt.num_states = m;
        pt.reps = reps;
        pt.mean_ms = time_gradient_step(n, m, reps, seed, threads, discount, pt.std_ms);
        report.points.push_back(pt);
    };

    for (int n : arm_grid) measure("arms", n, fixed_states);
    for (int m : state_grid) measure("states", fixed_arms, m);

    // Fit the reference constant in log space over all points.
    double log_c = 0.0;
    for (const auto& pt : report.points)
        log_c += std::log(pt.mean_ms) -
                 std::log(pt.num_arms * std::pow(pt.num_states, kMatrixExponent + 1.0));
    log_c /= report.points.size();
    for (auto& pt : report.points)
        pt.ref_ms = std::exp(log_c) * pt.num_arms * std::pow(pt.num_states, kMatrixExponent + 1.0);

    std::vector<double> xs, ys;
    for (const auto& pt : report.points)
        if (pt.scan == "arms") {
            xs.push_back(pt.num_arms);
            ys.push_back(pt.mean_ms);
        }
    if (xs.size() >= 2) report.slope_vs_arms = loglog_slope(xs, ys);
    xs.clear();
    ys.clear();
    for (const auto& pt : report.points)
        if (pt.scan == "states") {
            xs.push_back(pt.num_states);
            ys.push_back(pt.mean_ms);
        }
    if (xs.size() >= 2) report.slope_vs_states = loglog_slope(xs, ys);
    return report;
}

std::string BenchReport::to_csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "scan,num_arms,num_states,reps,mean_ms,stddev_ms,ref_ms\n";
    for (const auto& pt : points)
        os << pt.scan << ',' << pt.num_arms << ',' << pt.num_states << ',' << pt.reps << ','
           << pt.mean_ms << ',' << pt.std_ms << ',' << pt.ref_ms << '\n';
    os << "slope,vs_arms,,,," << slope_vs_arms << ",\n";
    os << "slope,vs_states,,,," << slope_vs_states << ",\n";
    return os.str();
}

} // namespace rmab
