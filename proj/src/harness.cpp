#include "nll/harness.hpp"

#include "nll/csv.hpp"
#include "nll/rng.hpp"
#include "nll/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

namespace nll {

namespace {

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config) {
    const std::uint64_t run_seed = config.train.seed;
    NoisyDataset pool;
    NoisyDataset test;
    if (config.data.csv_path.empty()) {
        const auto mixture = make_mixture(config.data.classes, config.data.dim, config.data.separation,
                                          config.data.sigma, config.data.seed);
        pool = sample_mixture(mixture, config.data.per_class, config.data.seed);
        test = sample_mixture(mixture, config.data.test_per_class,
                              derive_seed(config.data.seed, {stream::kTestSamples}));
    } else {
        pool = read_dataset_csv(config.data.csv_path);
        if (!config.data.test_csv_path.empty()) {
            test = read_dataset_csv(config.data.test_csv_path, pool.num_classes);
        } else {
            // Fixed held-out test portion, independent of the run seed.
            auto held = split(pool, config.validation_fraction, derive_seed(config.data.seed, {stream::kTestSamples}));
            pool = std::move(held.train);
            test = std::move(held.validation);
        }
        if (test.has_true_labels()) test = test.clean_copy();
    }
    if (!pool.has_true_labels()) {
        pool.true_labels = pool.observed;
        pool.refresh_flags();
    }

    auto parts = split(pool, config.validation_fraction, run_seed);
    PreparedData out{std::move(parts.train), std::move(parts.validation), std::move(test)};
    if (config.noise.rate > 0.0) {
        // Noise always starts from the true labels of the training portion.
        out.train.observed = out.train.true_labels;
        NoiseSpec noise = config.noise;
        inject_noise(out.train, noise.transition(out.train.num_classes), noise.seed);
    }
    out.train.refresh_flags();
    return out;
}

void write_metrics_header(std::ostream& out) { out << kMetricsHeader << '\n'; }

void write_metrics_row(std::ostream& out, const MetricsRecord& r) {
    out << r.epoch << ',' << format_double(r.learning_rate) << ',' << format_double(r.loss_value) << ','
        << format_double(r.val_accuracy) << ',' << format_double(r.test_accuracy) << ','
        << format_double(r.train_consistency_all) << ',' << opt_field(r.train_consistency_clean) << ','
        << opt_field(r.train_consistency_noisy) << ',' << opt_field(r.train_accuracy_clean) << ','
        << opt_field(r.train_accuracy_noisy) << '\n';
}

std::vector<MetricsRecord> read_metrics_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw CsvError(1, "empty metrics file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kMetricsHeader) throw CsvError(1, "unexpected metrics header");
    auto opt = [&](const std::string& f) -> std::optional<double> {
        if (f == "NA") return std::nullopt;
        return parse_csv_double(f, line_no);
    };
    std::vector<MetricsRecord> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 10) throw CsvError(line_no, "expected 10 fields, got " + std::to_string(f.size()));
        MetricsRecord r;
        r.epoch = static_cast<int>(parse_csv_int(f[0], line_no));
        r.learning_rate = parse_csv_double(f[1], line_no);
        r.loss_value = parse_csv_double(f[2], line_no);
        r.val_accuracy = parse_csv_double(f[3], line_no);
        r.test_accuracy = parse_csv_double(f[4], line_no);
        r.train_consistency_all = parse_csv_double(f[5], line_no);
        r.train_consistency_clean = opt(f[6]);
        r.train_consistency_noisy = opt(f[7]);
        r.train_accuracy_clean = opt(f[8]);
        r.train_accuracy_noisy = opt(f[9]);
        out.push_back(r);
    }
    return out;
}

RunResult run_experiment(const ExperimentConfig& config_in) {
    ExperimentConfig config = config_in;
    config.sync_views();
    config.validate();
    const PreparedData data = prepare_data(config);
    const auto losses = config.losses();
    if (config.mixed() && data.train.is_noisy.size() != data.train.size())
        throw DomainError("mixed clean/noisy loss mode needs noisy flags on the training set");

    TrainView view;
    view.dim = data.train.dim;
    view.features = data.train.features;
    view.labels = data.train.observed;
    if (config.mixed()) view.loss_index = data.train.is_noisy;

    std::vector<std::size_t> sizes{data.train.dim};
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(data.train.num_classes);

    RunResult result;
    result.seed = config.train.seed;
    result.params = init_params(sizes, config.train.seed);
    OptimizerState state = OptimizerState::for_params(result.params);
    const auto feature_std = data.train.feature_std();
    const AugmentSpec train_aug = config.augment_spec(feature_std);
    const AugmentSpec measure_aug = AugmentSpec::from_strength(AugmentStrength::FULL, feature_std);
    const Eigen::MatrixXd val_x = feature_matrix(data.validation);
    const Eigen::MatrixXd test_x = feature_matrix(data.test);

    std::ofstream csv;
    if (!config.output.empty()) {
        const auto parent = std::filesystem::path(config.output).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        csv.open(config.output, std::ios::binary | std::ios::trunc);
        if (!csv) throw std::runtime_error("cannot open '" + config.output + "' for writing");
        write_metrics_header(csv);
        csv.flush();
    }

    auto acc = [](const MlpParams& p, const Eigen::MatrixXd& x, const std::vector<int>& labels) {
        const auto pred = predict_classes(p, x);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
        return static_cast<double>(hits) / static_cast<double>(pred.size());
    };

    for (int epoch = 0; epoch < config.train.epochs; ++epoch) {
        const auto stats = train_epoch(result.params, state, view, train_aug, losses, config.train, epoch);
        if ((epoch + 1) % config.metrics_stride != 0) continue;
        MetricsRecord rec;
        rec.epoch = epoch + 1;
        rec.learning_rate = stats.learning_rate;
        rec.loss_value = stats.mean_loss;
        rec.val_accuracy = acc(result.params, val_x, data.validation.observed);
        rec.test_accuracy = acc(result.params, test_x, data.test.observed);
        const std::uint64_t mseed = derive_seed(config.train.seed, {stream::kConsistency, static_cast<std::uint64_t>(epoch)});
        const auto cons = subset_consistency(result.params, data.train, measure_aug, mseed);
        const double n = static_cast<double>(cons.n_clean + cons.n_noisy);
        rec.train_consistency_all = (static_cast<double>(cons.n_clean) * cons.clean.value_or(0.0) +
                                     static_cast<double>(cons.n_noisy) * cons.noisy.value_or(0.0)) / n;
        rec.train_consistency_clean = cons.clean;
        rec.train_consistency_noisy = cons.noisy;
        const auto sub = subset_accuracy(result.params, data.train);
        rec.train_accuracy_clean = sub.clean;
        rec.train_accuracy_noisy = sub.noisy;
        result.peak_val_accuracy = std::max(result.peak_val_accuracy, rec.val_accuracy);
        result.records.push_back(rec);
        if (csv.is_open()) {
            write_metrics_row(csv, rec);
            csv.flush();
        }
    }

    result.final_val_accuracy = acc(result.params, val_x, data.validation.observed);
    result.final_test_accuracy = acc(result.params, test_x, data.test.observed);
    result.peak_val_accuracy = std::max(result.peak_val_accuracy, result.final_val_accuracy);
    if (!result.records.empty()) {
        const auto& last = result.records.back();
        result.final_train_accuracy_noisy = last.train_accuracy_noisy;
        result.final_consistency_clean = last.train_consistency_clean;
        result.final_consistency_noisy = last.train_consistency_noisy;
    }
    return result;
}

RunResult run_mixed_loss(const ExperimentConfig& config) {
    if (!config.mixed()) throw DomainError("run_mixed_loss needs both a clean and a noisy loss");
    if (!config.data.csv_path.empty()) {
        // Synthetic data always carries true labels; a CSV pool is checked here.
        const auto pool = read_dataset_csv(config.data.csv_path);
        if (!pool.has_true_labels()) throw DomainError("mixed-loss mode needs true labels in the dataset");
    }
    return run_experiment(config);
}

std::string seed_output_path(const std::string& output, std::uint64_t seed) {
    if (output.empty()) return {};
    const std::filesystem::path p(output);
    auto name = p.stem().string() + "_seed" + std::to_string(seed) + p.extension().string();
    return (p.parent_path() / name).string();
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    for (std::size_t w = 0; w < count; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

ReplicatedResult run_replicated(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds, int jobs) {
    if (seeds.size() < 2) throw DomainError("run_replicated needs at least 2 seeds");
    ReplicatedResult out;
    out.runs.resize(seeds.size());
    parallel_for(seeds.size(), jobs, [&](std::size_t i) {
        ExperimentConfig c = config;
        c.train.seed = seeds[i];
        c.noise.seed = seeds[i];
        c.output = seed_output_path(config.output, seeds[i]);
        out.runs[i] = run_experiment(c);
    });
    std::vector<double> test, peak;
    for (const auto& r : out.runs) {
        test.push_back(r.final_test_accuracy);
        peak.push_back(r.peak_val_accuracy);
    }
    out.final_test = mean_std(test);
    out.peak_val = mean_std(peak);
    return out;
}

SweepResult run_sweep(const SweepGrid& grid, const ExperimentConfig& base, int jobs) {
    grid.validate();
    const bool has_param = !base.loss.primary_param_name().empty();
    const std::vector<double> method_values = has_param ? grid.method_values : std::vector<double>{0.0};

    auto configure = [&](const NoiseSetting& noise, double lr, double wd, std::optional<double> param) {
        ExperimentConfig c = base;
        c.output.clear();
        c.noise.kind = noise.kind;
        c.noise.rate = noise.rate;
        c.train.learning_rate = lr;
        c.train.weight_decay = wd;
        if (param && has_param) c.loss.set_primary_param(*param);
        return c;
    };
    std::atomic<std::size_t> runs{0};
    auto run_rows = [&](std::vector<SweepRow>& rows, const std::vector<ExperimentConfig>& configs) {
        parallel_for(configs.size(), jobs, [&](std::size_t i) {
            const auto r = run_experiment(configs[i]);
            ++runs;
            rows[i].peak_val_accuracy = r.peak_val_accuracy;
            rows[i].final_val_accuracy = r.final_val_accuracy;
            rows[i].final_test_accuracy = r.final_test_accuracy;
        });
    };
    // Higher peak validation accuracy wins; ties go to smaller lr, wd, param.
    auto better = [](const SweepRow& a, const SweepRow& b) {
        if (a.peak_val_accuracy != b.peak_val_accuracy) return a.peak_val_accuracy > b.peak_val_accuracy;
        if (a.learning_rate != b.learning_rate) return a.learning_rate < b.learning_rate;
        if (a.weight_decay != b.weight_decay) return a.weight_decay < b.weight_decay;
        return a.param_value < b.param_value;
    };

    SweepResult result;
    std::vector<SweepRow> stage1;
    std::vector<ExperimentConfig> configs;
    for (double lr : grid.learning_rates)
        for (double wd : grid.weight_decays) {
            SweepRow row;
            row.stage = 1;
            row.noise = grid.stage1_noise;
            row.learning_rate = lr;
            row.weight_decay = wd;
            row.param_name = std::string(base.loss.primary_param_name());
            row.param_value = base.loss.primary_param();
            stage1.push_back(row);
            configs.push_back(configure(grid.stage1_noise, lr, wd, std::nullopt));
        }
    run_rows(stage1, configs);
    const SweepRow* best1 = &stage1.front();
    for (const auto& r : stage1)
        if (better(r, *best1)) best1 = &r;
    result.best_learning_rate = best1->learning_rate;
    result.best_weight_decay = best1->weight_decay;

    std::vector<SweepRow> stage2;
    configs.clear();
    for (const auto& noise : grid.noise_settings)
        for (double v : method_values) {
            SweepRow row;
            row.stage = 2;
            row.noise = noise;
            row.learning_rate = result.best_learning_rate;
            row.weight_decay = result.best_weight_decay;
            row.param_name = std::string(base.loss.primary_param_name());
            row.param_value = has_param ? v : 0.0;
            stage2.push_back(row);
            configs.push_back(configure(noise, result.best_learning_rate, result.best_weight_decay, v));
        }
    run_rows(stage2, configs);
    for (std::size_t s = 0; s < grid.noise_settings.size(); ++s) {
        const SweepRow* best = &stage2[s * method_values.size()];
        for (std::size_t j = 0; j < method_values.size(); ++j) {
            const auto& r = stage2[s * method_values.size() + j];
            if (better(r, *best)) best = &r;
        }
        result.best_param.push_back(best->param_value);
    }
    result.runs_executed = runs.load();
    result.rows = std::move(stage1);
    result.rows.insert(result.rows.end(), stage2.begin(), stage2.end());
    return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "stage,noise_kind,noise_rate,lr,weight_decay,param_name,param_value,peak_val_acc,final_val_acc,final_test_acc\n";
    for (const auto& r : result.rows) {
        out << r.stage << ',' << to_string(r.noise.kind) << ',' << format_double(r.noise.rate) << ','
            << format_double(r.learning_rate) << ',' << format_double(r.weight_decay) << ','
            << (r.param_name.empty() ? "none" : r.param_name) << ',' << format_double(r.param_value) << ','
            << format_double(r.peak_val_accuracy) << ',' << format_double(r.final_val_accuracy) << ','
            << format_double(r.final_test_accuracy) << '\n';
    }
}

}  // namespace nll
