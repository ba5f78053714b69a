#include "rmab/bench.hpp"
#include "rmab/datagen.hpp"
#include "rmab/json_io.hpp"
#include "rmab/parallel.hpp"
#include "rmab/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<int> parse_grid(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

int cmd_generate(const rmab::DatasetSpec& spec, const std::string& out_dir, bool force) {
    if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force)
        throw rmab::IoError("output directory " + out_dir + " is not empty (use --force to overwrite)");
    const rmab::Dataset ds = rmab::generate_dataset(spec);
    rmab::write_dataset(out_dir, ds);
    std::cout << "dataset " << out_dir << " hash " << std::hex << std::setw(16) << std::setfill('0')
              << rmab::dataset_hash(out_dir) << std::dec << "\n";
    return 0;
}

rmab::TrainConfig make_train_config(const rmab::Dataset& ds, double gamma, std::uint64_t seed,
                                    int epochs, double lr, double epsilon, int topk_iters,
                                    double topk_tol, const std::string& variant, int sim_episodes,
                                    int eval_every, int threads, double dropout) {
    rmab::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.learning_rate = lr;
    cfg.topk.epsilon = epsilon;
    cfg.topk.max_iters = topk_iters;
    cfg.topk.convergence_tol = topk_tol;
    cfg.gamma = gamma;
    cfg.seed = seed;
    cfg.variant = variant == "single-trajectory" ? rmab::EvalVariant::kSingleTrajectory
                                                 : rmab::EvalVariant::kCwpdis;
    cfg.sim_episodes = sim_episodes;
    cfg.eval_every = eval_every;
    cfg.threads = threads;
    cfg.dropout_enabled = dropout > 0.0;
    (void)ds;
    return cfg;
}

int cmd_train(const std::string& dataset_dir, const std::string& method, const std::string& out_dir,
              int hidden_dim, double dropout, const rmab::TrainConfig& cfg) {
    const rmab::Dataset ds = rmab::load_dataset(dataset_dir);
    const rmab::SplitIndices split = rmab::split_dataset(ds.spec.num_instances, cfg.seed);

    rmab::PredictorConfig pcfg;
    pcfg.input_dim = ds.spec.feature_dim;
    pcfg.hidden_dim = hidden_dim;
    pcfg.num_states = ds.instances.empty() ? ds.spec.num_states : ds.instances[0].num_states();
    pcfg.dropout = dropout;
    rmab::Rng init_rng(cfg.seed ^ 0x1217ULL);
    rmab::PredictorModel model = rmab::PredictorModel::init(pcfg, init_rng);

    std::pair<rmab::PredictorModel, rmab::TrainLog> result =
        method == "df-whittle" ? rmab::train_df_whittle(ds, split, std::move(model), cfg)
                               : rmab::train_two_stage(ds, split, std::move(model), cfg);

    fs::create_directories(out_dir);
    rmab::write_file(out_dir + "/checkpoint.json", result.first.to_json());
    rmab::write_file(out_dir + "/trainlog.csv", result.second.to_csv());
    rmab::write_file(out_dir + "/summary.json", result.second.summary_json());
    std::cout << "wrote " << out_dir << "/checkpoint.json, trainlog.csv, summary.json\n";
    return 0;
}

json metrics_json(const rmab::Metrics& m) {
    return json{{"nll", m.nll},
                {"is_eval", m.is_eval},
                {"is_eval_soft", m.is_eval_soft},
                {"sim_eval", m.sim_eval}};
}

int cmd_evaluate(const std::string& dataset_dir, const std::string& checkpoint, bool truth_oracle,
                 const std::string& split_name, const std::string& out_file,
                 const rmab::TrainConfig& cfg) {
    const rmab::Dataset ds = rmab::load_dataset(dataset_dir);
    const rmab::SplitIndices split = rmab::split_dataset(ds.spec.num_instances, cfg.seed);

    std::vector<int> subset;
    if (split_name == "train")
        subset = split.train;
    else if (split_name == "validation")
        subset = split.validation;
    else if (split_name == "test")
        subset = split.test;
    else
        for (int i = 0; i < ds.spec.num_instances; ++i) subset.push_back(i);

    rmab::PredictorModel model;
    if (!truth_oracle) {
        model = rmab::PredictorModel::from_json(rmab::read_file(checkpoint));
        if (model.cfg.input_dim != ds.spec.feature_dim ||
            model.cfg.num_states != ds.instances[0].num_states())
            throw rmab::IoError("checkpoint dimensions disagree with the dataset");
    }

    json per_instance = json::array();
    double sum_nll = 0, sum_is = 0, sum_soft = 0, sum_sim = 0, sq_is = 0, sq_sim = 0;
    double base_na_is = 0, base_na_sim = 0, base_rand_is = 0, base_rand_sim = 0;
    for (int id : subset) {
        const rmab::RmabInstance& inst = ds.instances[id];
        const auto& trajs = ds.trajectories[id];
        const double gamma = cfg.discount_for(inst);
        const rmab::Metrics m =
            truth_oracle ? rmab::evaluate_kernels(inst, inst.arms, trajs, cfg)
                         : rmab::evaluate_instance(inst, ds.features[id], trajs, model, cfg);
        per_instance.push_back(metrics_json(m));
        sum_nll += m.nll;
        sum_is += m.is_eval;
        sum_soft += m.is_eval_soft;
        sum_sim += m.sim_eval;
        sq_is += m.is_eval * m.is_eval;
        sq_sim += m.sim_eval * m.sim_eval;

        // Baseline policies: never pull, and a uniformly random budget subset.
        const int n = inst.num_arms();
        const double rand_prob = static_cast<double>(inst.budget) / n;
        std::vector<std::vector<double>> na_probs(trajs.size()), rand_probs(trajs.size());
        for (std::size_t j = 0; j < trajs.size(); ++j) {
            na_probs[j].assign(static_cast<std::size_t>(trajs[j].horizon) * n, 0.0);
            rand_probs[j].assign(static_cast<std::size_t>(trajs[j].horizon) * n, rand_prob);
        }
        base_na_is += rmab::policy_is_eval(na_probs, trajs, gamma, cfg.variant);
        base_rand_is += rmab::policy_is_eval(rand_probs, trajs, gamma, cfg.variant);

        const rmab::EmpiricalKernels emp = rmab::empirical_kernels(trajs, inst.num_states());
        rmab::WhittlePolicy na_policy;
        na_policy.kind = rmab::PolicyKind::kNoAction;
        na_policy.num_arms = n;
        base_na_sim += rmab::simulate_eval(emp.kernels, inst.reward, inst.horizon, gamma, na_policy,
                                           cfg.sim_episodes, rmab::Rng(cfg.seed).split(0xba5e), nullptr)
                           .value;
        rmab::WhittlePolicy rand_policy;
        rand_policy.kind = rmab::PolicyKind::kRandom;
        rand_policy.budget = inst.budget;
        rand_policy.num_arms = n;
        base_rand_sim += rmab::simulate_eval(emp.kernels, inst.reward, inst.horizon, gamma, rand_policy,
                                             cfg.sim_episodes, rmab::Rng(cfg.seed).split(0xba5f), nullptr)
                             .value;
    }

    const double count = std::max<std::size_t>(1, subset.size());
    auto se = [&](double sq, double sum) {
        if (subset.size() < 2) return 0.0;
        const double var = std::max(0.0, (sq - sum * sum / count) / (count - 1));
        return std::sqrt(var / count);
    };

    json out;
    out["split"] = split_name;
    out["num_instances"] = subset.size();
    out["aggregate"] = {{"nll", sum_nll / count},
                        {"is_eval", sum_is / count},
                        {"is_eval_se", se(sq_is, sum_is)},
                        {"is_eval_soft", sum_soft / count},
                        {"sim_eval", sum_sim / count},
                        {"sim_eval_se", se(sq_sim, sum_sim)}};
    out["baselines"] = {{"no_action", {{"is_eval", base_na_is / count}, {"sim_eval", base_na_sim / count}}},
                        {"random", {{"is_eval", base_rand_is / count}, {"sim_eval", base_rand_sim / count}}}};
    out["per_instance"] = std::move(per_instance);

    const std::string text = out.dump(2);
    if (out_file.empty())
        std::cout << text << "\n";
    else
        rmab::write_file(out_file, text);
    return 0;
}

int cmd_bench(const std::string& arms_csv, int fixed_states, const std::string& states_csv,
              int fixed_arms, int reps, std::uint64_t seed, int threads, double discount,
              const std::string& out_file) {
    const rmab::BenchReport report = rmab::run_bench(parse_grid(arms_csv), fixed_states,
                                                     parse_grid(states_csv), fixed_arms, reps, seed,
                                                     threads, discount);
    const std::string csv = report.to_csv();
    if (out_file.empty())
        std::cout << csv;
    else
        rmab::write_file(out_file, csv);
    std::cout << "slope vs arms: " << report.slope_vs_arms
              << "  slope vs states: " << report.slope_vs_states << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decision-focused learning for restless bandits via differentiable Whittle index policies"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset directory");
    rmab::DatasetSpec spec;
    std::string gen_out = "dataset";
    bool force = false;
    gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
    gen->add_option("--num-instances", spec.num_instances)->capture_default_str();
    gen->add_option("--arms", spec.num_arms, "Arms per instance (N)")->capture_default_str();
    gen->add_option("--states", spec.num_states, "States per arm (M)")->capture_default_str();
    gen->add_option("--budget", spec.budget, "Pulls per step (K)")->capture_default_str();
    gen->add_option("--horizon", spec.horizon, "Steps per trajectory (T)")->capture_default_str();
    gen->add_option("--discount", spec.discount)->capture_default_str();
    gen->add_option("--trajectories", spec.num_trajectories, "Trajectories per instance")
        ->capture_default_str();
    gen->add_option("--feature-dim", spec.feature_dim)->capture_default_str();
    gen->add_option("--seed", spec.seed)->capture_default_str();
    gen->add_option("--observability", spec.observability, "full | collapsing")->capture_default_str();
    gen->add_flag("--force", force, "Overwrite a non-empty output directory");

    // shared train/evaluate options
    std::string dataset_dir, method = "two-stage", train_out = "run", checkpoint, split_name = "test",
                eval_out, variant = "cwpdis";
    int epochs = 50, topk_iters = 200, sim_episodes = 200, eval_every = 1, hidden_dim = 64;
    int threads = rmab::default_threads();
    double lr = 0.01, epsilon = 0.1, topk_tol = 1e-6, gamma = 0.0, dropout = 0.2;
    std::uint64_t seed = 0;
    bool truth_oracle = false;

    auto* train = app.add_subcommand("train", "Train a predictor on a dataset directory");
    train->add_option("dataset", dataset_dir, "Dataset directory")->required();
    train->add_option("--method", method, "two-stage | df-whittle")
        ->check(CLI::IsMember({"two-stage", "df-whittle"}))
        ->capture_default_str();
    train->add_option("--out", train_out, "Output directory")->capture_default_str();
    train->add_option("--epochs", epochs)->capture_default_str();
    train->add_option("--learning-rate", lr)->capture_default_str();
    train->add_option("--epsilon", epsilon, "Soft top-k temperature")->capture_default_str();
    train->add_option("--topk-iters", topk_iters)->capture_default_str();
    train->add_option("--topk-tol", topk_tol)->capture_default_str();
    train->add_option("--gamma", gamma, "Override the instance discount (0 = keep)")
        ->capture_default_str();
    train->add_option("--variant", variant, "cwpdis | single-trajectory")
        ->check(CLI::IsMember({"cwpdis", "single-trajectory"}))
        ->capture_default_str();
    train->add_option("--sim-episodes", sim_episodes)->capture_default_str();
    train->add_option("--eval-every", eval_every, "Metric rows every k epochs")->capture_default_str();
    train->add_option("--hidden-dim", hidden_dim)->capture_default_str();
    train->add_option("--dropout", dropout, "Hidden-layer dropout rate during training")
        ->capture_default_str();
    train->add_option("--seed", seed)->capture_default_str();
    train->add_option("--threads", threads, "Worker cap")->capture_default_str();

    auto* eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset split");
    eval->add_option("dataset", dataset_dir, "Dataset directory")->required();
    eval->add_option("--checkpoint", checkpoint, "Checkpoint JSON file");
    eval->add_flag("--truth-oracle", truth_oracle, "Bypass the network and score the true kernels");
    eval->add_option("--split", split_name, "train | validation | test | all")
        ->check(CLI::IsMember({"train", "validation", "test", "all"}))
        ->capture_default_str();
    eval->add_option("--out", eval_out, "Metrics JSON file (stdout when omitted)");
    eval->add_option("--epsilon", epsilon)->capture_default_str();
    eval->add_option("--gamma", gamma)->capture_default_str();
    eval->add_option("--variant", variant)->check(CLI::IsMember({"cwpdis", "single-trajectory"}))
        ->capture_default_str();
    eval->add_option("--sim-episodes", sim_episodes)->capture_default_str();
    eval->add_option("--seed", seed)->capture_default_str();
    eval->add_option("--threads", threads)->capture_default_str();

    auto* bench = app.add_subcommand("bench", "Time one decision-focused gradient step over a grid");
    std::string arms_csv = "10,20,40,80", states_csv = "2,3,4,5", bench_out;
    int fixed_states = 2, fixed_arms = 10, reps = 5;
    double bench_discount = 0.9;
    bench->add_option("--arms", arms_csv, "Arm grid (comma separated)")->capture_default_str();
    bench->add_option("--fixed-states", fixed_states, "States for the arm scan")->capture_default_str();
    bench->add_option("--states", states_csv, "State grid (comma separated)")->capture_default_str();
    bench->add_option("--fixed-arms", fixed_arms, "Arms for the state scan")->capture_default_str();
    bench->add_option("--reps", reps, "Timed repetitions per point (>= 5)")->capture_default_str();
    bench->add_option("--discount", bench_discount)->capture_default_str();
    bench->add_option("--seed", seed)->capture_default_str();
    bench->add_option("--threads", threads)->capture_default_str();
    bench->add_option("--out", bench_out, "CSV file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (gen->parsed()) return cmd_generate(spec, gen_out, force);
        if (train->parsed()) {
            rmab::Dataset probe; // config only needs the spec-independent fields
            const rmab::TrainConfig cfg =
                make_train_config(probe, gamma, seed, epochs, lr, epsilon, topk_iters, topk_tol,
                                  variant, sim_episodes, eval_every, threads, dropout);
            return cmd_train(dataset_dir, method, train_out, hidden_dim, dropout, cfg);
        }
        if (eval->parsed()) {
            if (!truth_oracle && checkpoint.empty())
                throw std::invalid_argument("evaluate: pass --checkpoint or --truth-oracle");
            rmab::Dataset probe;
            rmab::TrainConfig cfg = make_train_config(probe, gamma, seed, epochs, lr, epsilon,
                                                      topk_iters, topk_tol, variant, sim_episodes,
                                                      eval_every, threads, 0.0);
            return cmd_evaluate(dataset_dir, checkpoint, truth_oracle, split_name, eval_out, cfg);
        }
        if (bench->parsed())
            return cmd_bench(arms_csv, fixed_states, states_csv, fixed_arms, reps, seed, threads,
                             bench_discount, bench_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const rmab::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const rmab::NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
