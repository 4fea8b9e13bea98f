#pragma once

#include "nll/config.hpp"
#include "nll/metrics.hpp"
#include "nll/mlp.hpp"
#include "nll/stats.hpp"
#include "nll/synthetic.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nll {

/// Exact column order of every metrics CSV.
inline constexpr const char* kMetricsHeader =
    "epoch,lr,loss,val_acc,test_acc,cons_all,cons_clean,cons_noisy,train_acc_clean,train_acc_noisy";

struct RunResult {
    std::vector<MetricsRecord> records;  // one per metrics stride
    double final_val_accuracy = 0.0;
    double peak_val_accuracy = 0.0;
    double final_test_accuracy = 0.0;
    std::optional<double> final_train_accuracy_noisy;
    std::optional<double> final_consistency_clean;
    std::optional<double> final_consistency_noisy;
    std::uint64_t seed = 0;
    MlpParams params;
};

/// Train / validation / test data after splitting and noise injection.
struct PreparedData {
    NoisyDataset train;
    NoisyDataset validation;
    NoisyDataset test;
};

/// Builds the data for one run: generate (or load), split with the run seed,
/// then inject noise into the training part only.
PreparedData prepare_data(const ExperimentConfig& config);

/// One training run. Writes the metrics CSV to config.output when set,
/// flushing after every record.
RunResult run_experiment(const ExperimentConfig& config);

/// run_experiment for a config with a clean/noisy loss pair.
RunResult run_mixed_loss(const ExperimentConfig& config);

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRecord& record);
/// Parses a metrics CSV written by run_experiment. Throws CsvError with the
/// offending line number on a bad header, field count, or value.
std::vector<MetricsRecord> read_metrics_csv(std::istream& in);

struct ReplicatedResult {
    MeanStd final_test;
    MeanStd peak_val;
    std::vector<RunResult> runs;  // in seed order
};

/// Output path for one seed of a replicated run: "<stem>_seed<k><ext>".
std::string seed_output_path(const std::string& output, std::uint64_t seed);

/// Runs `config` once per seed (init, data order, split, noise all follow the
/// seed). `jobs` > 1 runs seeds on worker threads; results stay in seed order.
ReplicatedResult run_replicated(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds,
                                int jobs = 1);

struct SweepRow {
    int stage = 1;
    NoiseSetting noise;
    double learning_rate = 0.0;
    double weight_decay = 0.0;
    std::string param_name;
    double param_value = 0.0;
    double peak_val_accuracy = 0.0;
    double final_val_accuracy = 0.0;
    double final_test_accuracy = 0.0;
};

struct SweepResult {
    double best_learning_rate = 0.0;
    double best_weight_decay = 0.0;
    std::vector<double> best_param;  // per grid.noise_settings entry
    std::vector<SweepRow> rows;      // stage 1 then stage 2, in grid order
    std::size_t runs_executed = 0;   // training runs actually performed
};

/// Two-stage search: (lr, wd) at the stage-1 noise setting, then the loss's
/// primary hyperparameter per noise setting at the winning (lr, wd). Selection
/// by peak validation accuracy; ties go to the smaller lr, wd, then parameter.
SweepResult run_sweep(const SweepGrid& grid, const ExperimentConfig& base, int jobs = 1);

void write_sweep_csv(std::ostream& out, const SweepResult& result);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace nll
