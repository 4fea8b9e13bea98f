#include "nll/config.hpp"
#include "nll/csv.hpp"
#include "nll/harness.hpp"
#include "nll/noise.hpp"
#include "nll/synthetic.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace nll;

namespace {

/// Flag values keyed by config key, layered over --config and --set.
struct Overrides {
    std::string config_path;
    std::vector<std::string> sets;  // raw "key=value"
    std::map<std::string, std::string> flags;

    void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option_function<std::string>(flag, [this, key](const std::string& v) { flags[key] = v; }, help);
    }

    KeyValues resolve() const {
        KeyValues kv;
        if (!config_path.empty()) kv = KeyValues::parse_file(config_path);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError(s, "--set expects key=value");
            kv.set(s.substr(0, eq), s.substr(eq + 1));
        }
        for (const auto& [k, v] : flags) kv.set(k, v);
        if (!kv.has("train.seed"))
            if (const char* env = std::getenv("NLL_SEED")) kv.set("train.seed", env);
        return kv;
    }
};

void add_data_flags(CLI::App* app, Overrides& o) {
    o.bind(app, "--data", "data.csv", "training pool CSV (default: synthetic mixture)");
    o.bind(app, "--test-data", "data.test_csv", "clean test CSV for --data");
    o.bind(app, "--classes", "data.classes", "synthetic classes");
    o.bind(app, "--per-class", "data.per_class", "synthetic pool size per class");
    o.bind(app, "--test-per-class", "data.test_per_class", "synthetic test size per class");
    o.bind(app, "--dim", "data.dim", "synthetic input dimension");
    o.bind(app, "--separation", "data.separation", "distance of class means from the origin");
    o.bind(app, "--sigma", "data.sigma", "cluster standard deviation");
    o.bind(app, "--data-seed", "data.seed", "seed of the synthetic pool");
    o.bind(app, "--validation-fraction", "validation_fraction", "held-out fraction of the pool");
}

void add_noise_flags(CLI::App* app, Overrides& o) {
    o.bind(app, "--noise-kind", "noise.kind", "symmetric | asymmetric_map | asymmetric_cycle");
    o.bind(app, "--noise-rate", "noise.rate", "noise rate eta");
    o.bind(app, "--noise-map", "noise.map", "class map for asymmetric_map, e.g. 9:1,2:0");
    o.bind(app, "--noise-groups", "noise.groups", "groups for asymmetric_cycle, e.g. '0 1 2;3 4'");
}

void add_train_flags(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config_path, "key = value config file; flags override it");
    app->add_option("--set", o.sets, "extra key=value setting (repeatable)");
    add_data_flags(app, o);
    add_noise_flags(app, o);
    o.bind(app, "--loss", "loss.kind", "ce | js | gjs | js-mean | gce | sce | bs | ls");
    o.bind(app, "--noisy-loss", "loss.noisy_kind", "loss for noisy examples (mixed mode)");
    o.bind(app, "--pi", "loss.pi", "JS/GJS weight pi");
    o.bind(app, "--q", "loss.q", "GCE exponent");
    o.bind(app, "--alpha", "loss.alpha", "SCE alpha");
    o.bind(app, "--beta", "loss.beta", "SCE beta or bootstrap beta");
    o.bind(app, "--sce-a", "loss.A", "SCE log-zero clamp A");
    o.bind(app, "--epsilon", "loss.epsilon", "label smoothing epsilon");
    o.bind(app, "--seed", "train.seed", "run seed (falls back to NLL_SEED)");
    o.bind(app, "--epochs", "train.epochs", "training epochs");
    o.bind(app, "--lr", "train.lr", "base learning rate");
    o.bind(app, "--weight-decay", "train.weight_decay", "L2 weight decay");
    o.bind(app, "--momentum", "train.momentum", "Nesterov momentum");
    o.bind(app, "--batch-size", "train.batch_size", "minibatch size");
    o.bind(app, "--hidden", "train.hidden", "hidden layer sizes, e.g. 64,64");
    o.bind(app, "--identical-views", "train.identical_views", "feed one augmentation as both views");
    o.bind(app, "--augment", "augment.strength", "none | weak | full");
    o.bind(app, "--metrics-stride", "metrics.stride", "record metrics every N epochs");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(' ');
        item = item.substr(b, e - b + 1);
        T v{};
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size())
            throw ConfigError(key, "cannot parse '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
}

std::string fmt(double v) { return format_double(v); }

/// Runs one config per seed; output paths get a per-seed suffix.
std::vector<RunResult> run_seeds(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds, int jobs) {
    if (seeds.size() == 1) {
        ExperimentConfig c = config;
        c.train.seed = c.noise.seed = seeds[0];
        return {run_experiment(c)};
    }
    return run_replicated(config, seeds, jobs).runs;
}

MeanStd field_stats(const std::vector<RunResult>& runs, double RunResult::*field) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.*field);
    return mean_std(v);
}

std::ofstream open_output(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

// ---- subcommands ----

int cmd_gen_data(const Overrides& o, const std::string& out_path) {
    auto kv = o.resolve();
    const auto c = ExperimentConfig::from_key_values(kv);
    const auto data = generate_synthetic(c.data.classes, c.data.per_class, c.data.dim, c.data.separation,
                                         c.data.sigma, c.data.seed);
    auto out = open_output(out_path);
    write_dataset_csv(out, data);
    if (!out.flush()) throw std::runtime_error("failed writing '" + out_path + "'");
    std::cout << "rows=" << data.size() << " out=" << out_path << '\n';
    return 0;
}

int cmd_inject_noise(const Overrides& o, const std::string& in_path, const std::string& out_path,
                     const std::string& transition_path) {
    const auto kv = o.resolve();
    const auto c = ExperimentConfig::from_key_values(kv);
    NoisyDataset data = read_dataset_csv(in_path);
    if (data.has_true_labels()) {
        data = data.clean_copy();
    } else {
        data.true_labels = data.observed;
        data.refresh_flags();
    }
    const auto T = c.noise.transition(data.num_classes);
    inject_noise(data, T, c.train.seed);
    auto out = open_output(out_path);
    write_dataset_csv(out, data);
    if (!out.flush()) throw std::runtime_error("failed writing '" + out_path + "'");
    if (!transition_path.empty()) {
        auto t = open_output(transition_path);
        write_transition_csv(t, T);
    }
    const auto s = noise_stats(data);
    std::cout << "flipped=" << s.flipped << " total=" << s.total << " noise_fraction=" << fmt(s.overall) << '\n';
    return 0;
}

int cmd_train(const Overrides& o, const std::string& checkpoint) {
    const auto c = ExperimentConfig::from_key_values(o.resolve());
    const auto r = c.mixed() ? run_mixed_loss(c) : run_experiment(c);
    if (!checkpoint.empty()) save_checkpoint(checkpoint, r.params);
    std::cout << "final_test_acc=" << fmt(r.final_test_accuracy) << " peak_val_acc=" << fmt(r.peak_val_accuracy)
              << '\n';
    return 0;
}

int cmd_replicate(const Overrides& o, const std::string& seeds_text, int jobs, const std::string& summary) {
    const auto c = ExperimentConfig::from_key_values(o.resolve());
    const auto seeds = parse_list<std::uint64_t>("seeds", seeds_text);
    if (seeds.size() < 2) throw ConfigError("seeds", "replicate needs at least 2 seeds");
    const auto rep = run_replicated(c, seeds, jobs);
    if (!summary.empty()) {
        auto out = open_output(summary);
        out << "seed,final_test_acc,peak_val_acc,final_val_acc\n";
        for (const auto& r : rep.runs)
            out << r.seed << ',' << fmt(r.final_test_accuracy) << ',' << fmt(r.peak_val_accuracy) << ','
                << fmt(r.final_val_accuracy) << '\n';
    }
    for (const auto& r : rep.runs)
        std::cout << "seed=" << r.seed << " final_test_acc=" << fmt(r.final_test_accuracy)
                  << " peak_val_acc=" << fmt(r.peak_val_accuracy) << '\n';
    std::cout << "final_test_mean=" << fmt(rep.final_test.mean) << " final_test_std=" << fmt(rep.final_test.std)
              << " peak_val_mean=" << fmt(rep.peak_val.mean) << " peak_val_std=" << fmt(rep.peak_val.std) << '\n';
    return 0;
}

struct SweepFlags {
    std::string lrs, wds, values, noise_settings, stage1_noise, out;
    int jobs = 1;
};

int cmd_sweep(const Overrides& o, const SweepFlags& f) {
    auto kv = o.resolve();
    if (!f.lrs.empty()) kv.set("sweep.lrs", f.lrs);
    if (!f.wds.empty()) kv.set("sweep.wds", f.wds);
    if (!f.values.empty()) kv.set("sweep.method_values", f.values);
    if (!f.noise_settings.empty()) kv.set("sweep.noise_settings", f.noise_settings);
    if (!f.stage1_noise.empty()) kv.set("sweep.stage1_noise", f.stage1_noise);
    const auto c = ExperimentConfig::from_key_values(kv);
    const auto grid = SweepGrid::from_key_values(kv);
    const auto r = run_sweep(grid, c, f.jobs);
    if (f.out.empty()) {
        write_sweep_csv(std::cout, r);
    } else {
        auto out = open_output(f.out);
        write_sweep_csv(out, r);
    }
    std::cout << "best_lr=" << fmt(r.best_learning_rate) << " best_wd=" << fmt(r.best_weight_decay)
              << " best_param=";
    for (std::size_t i = 0; i < r.best_param.size(); ++i) std::cout << (i ? ";" : "") << fmt(r.best_param[i]);
    std::cout << " runs=" << r.runs_executed << '\n';
    return 0;
}

struct AblationFlags {
    std::string mode, out, seeds = "1,2,3,4,5", pis = "0.1,0.5,0.9";
    int jobs = 1;
};

int cmd_ablation(const Overrides& o, const AblationFlags& f) {
    auto kv = o.resolve();
    const auto base = ExperimentConfig::from_key_values(kv);
    const auto seeds = parse_list<std::uint64_t>("seeds", f.seeds);
    auto out = open_output(f.out);
    std::size_t rows = 0;

    auto summary_row = [&](const std::string& name, const ExperimentConfig& c) {
        const auto runs = run_seeds(c, seeds, f.jobs);
        const auto test = field_stats(runs, &RunResult::final_test_accuracy);
        const auto val = field_stats(runs, &RunResult::final_val_accuracy);
        const auto peak = field_stats(runs, &RunResult::peak_val_accuracy);
        out << name << ',' << fmt(test.mean) << ',' << fmt(test.std) << ',' << fmt(val.mean) << ','
            << fmt(val.std) << ',' << fmt(peak.mean) << ',' << runs.size() << '\n';
        std::cout << "row=" << name << " final_test_mean=" << fmt(test.mean) << " final_test_std=" << fmt(test.std)
                  << '\n';
        ++rows;
    };
    const char* header = "row,final_test_mean,final_test_std,final_val_mean,final_val_std,peak_val_mean,seeds\n";

    if (f.mode == "no-consistency") {
        out << header;
        const double pi = base.loss.pi;
        const std::pair<const char*, LossSpec> variants[] = {
            {"JS(y;p1)", LossSpec::js(pi)},
            {"JS(y;m)", LossSpec::js_mean_ablation(pi)},
            {"GJS", LossSpec::gjs(pi)},
        };
        for (const auto& [name, loss] : variants) {
            ExperimentConfig c = base;
            c.loss = loss;
            c.noisy_loss.reset();
            c.output.clear();
            c.sync_views();
            summary_row(name, c);
        }
    } else if (f.mode == "augment-strength") {
        out << header;
        for (AugmentStrength s : {AugmentStrength::FULL, AugmentStrength::WEAK, AugmentStrength::NONE}) {
            ExperimentConfig c = base;
            c.augment_strength = s;
            c.output.clear();
            summary_row(std::string(to_string(s)), c);
        }
    } else if (f.mode == "mixed-loss") {
        const auto pis = parse_list<double>("pis", f.pis);
        out << "clean_loss,noisy_loss";
        for (double pi : pis) out << ",pi=" << fmt(pi);
        out << '\n';
        const std::pair<LossKind, LossKind> pairs[] = {
            {LossKind::JS, LossKind::JS},
            {LossKind::GJS, LossKind::JS},
            {LossKind::JS, LossKind::GJS},
            {LossKind::GJS, LossKind::GJS},
        };
        for (const auto& [clean, noisy] : pairs) {
            out << to_string(clean) << ',' << to_string(noisy);
            std::cout << "row=" << to_string(clean) << '/' << to_string(noisy);
            for (double pi : pis) {
                ExperimentConfig c = base;
                c.loss = clean == LossKind::JS ? LossSpec::js(pi) : LossSpec::gjs(pi);
                c.noisy_loss = noisy == LossKind::JS ? LossSpec::js(pi) : LossSpec::gjs(pi);
                c.output.clear();
                c.sync_views();
                const auto runs = run_seeds(c, seeds, f.jobs);
                const double mean = field_stats(runs, &RunResult::final_test_accuracy).mean;
                out << ',' << fmt(mean);
                std::cout << " pi=" << fmt(pi) << ':' << fmt(mean);
            }
            out << '\n';
            std::cout << '\n';
            ++rows;
        }
    } else {
        throw ConfigError("mode", "unknown ablation mode '" + f.mode + "'");
    }
    if (!out.flush()) throw std::runtime_error("failed writing '" + f.out + "'");
    std::cout << "rows=" << rows << " out=" << f.out << '\n';
    return 0;
}

struct Series {
    std::string label;
    std::vector<MetricsRecord> records;
};

void write_tidy(const fs::path& path, const std::vector<Series>& series,
                const std::vector<std::pair<std::string, std::function<std::optional<double>(const MetricsRecord&)>>>& columns) {
    auto out = open_output(path.string());
    out << "epoch,series,value\n";
    for (const auto& s : series)
        for (const auto& [suffix, get] : columns)
            for (const auto& r : s.records)
                if (const auto v = get(r)) out << r.epoch << ',' << s.label << suffix << ',' << fmt(*v) << '\n';
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& labels_text, const std::string& out_dir) {
    std::vector<std::string> labels;
    if (!labels_text.empty()) {
        std::stringstream ss(labels_text);
        std::string item;
        while (std::getline(ss, item, ',')) labels.push_back(item);
        if (labels.size() != inputs.size()) throw ConfigError("labels", "need one label per metrics file");
    }
    std::vector<Series> series;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        std::ifstream in(inputs[i], std::ios::binary);
        if (!in) throw std::runtime_error("cannot open '" + inputs[i] + "'");
        Series s;
        s.label = labels.empty() ? fs::path(inputs[i]).stem().string() : labels[i];
        try {
            s.records = read_metrics_csv(in);
        } catch (const CsvError& e) {
            throw CsvError(e.line(), inputs[i] + ": " + e.what());
        }
        if (s.records.empty()) throw CsvError(2, inputs[i] + ": no metrics rows");
        series.push_back(std::move(s));
    }

    using Get = std::function<std::optional<double>(const MetricsRecord&)>;
    const fs::path dir(out_dir);
    write_tidy(dir / "fig1_val_acc.csv", series, {{"", Get([](const MetricsRecord& r) { return r.val_accuracy; })}});
    write_tidy(dir / "fig1_consistency.csv", series,
               {{"", Get([](const MetricsRecord& r) { return r.train_consistency_all; })}});
    write_tidy(dir / "fig2_subset_consistency.csv", series,
               {{"/clean", Get([](const MetricsRecord& r) { return r.train_consistency_clean; })},
                {"/noisy", Get([](const MetricsRecord& r) { return r.train_consistency_noisy; })}});
    write_tidy(dir / "fig4_train_acc.csv", series,
               {{"/clean", Get([](const MetricsRecord& r) { return r.train_accuracy_clean; })},
                {"/noisy", Get([](const MetricsRecord& r) { return r.train_accuracy_noisy; })}});

    std::vector<double> finals, peaks;
    for (const auto& s : series) {
        const auto peak = std::max_element(s.records.begin(), s.records.end(),
                                           [](const auto& a, const auto& b) { return a.val_accuracy < b.val_accuracy; });
        const auto& last = s.records.back();
        finals.push_back(last.test_accuracy);
        peaks.push_back(peak->val_accuracy);
        std::cout << "series=" << s.label << " peak_val_acc=" << fmt(peak->val_accuracy) << " peak_epoch=" << peak->epoch
                  << " final_val_acc=" << fmt(last.val_accuracy) << " final_test_acc=" << fmt(last.test_accuracy)
                  << '\n';
    }
    const auto f = mean_std(finals);
    const auto p = mean_std(peaks);
    std::cout << "series=" << series.size() << " final_test_mean=" << fmt(f.mean) << " final_test_std=" << fmt(f.std)
              << " peak_val_mean=" << fmt(p.mean) << " peak_val_std=" << fmt(p.std) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noisy-label training experiments on synthetic or CSV data"};
    app.require_subcommand(1, 1);

    Overrides gen_o;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-data", "write a synthetic Gaussian-mixture dataset CSV");
    gen->add_option("--config", gen_o.config_path, "key = value config file");
    gen->add_option("--set", gen_o.sets, "extra key=value setting");
    gen_o.bind(gen, "--classes", "data.classes", "number of classes");
    gen_o.bind(gen, "--per-class", "data.per_class", "examples per class");
    gen_o.bind(gen, "--dim", "data.dim", "input dimension");
    gen_o.bind(gen, "--separation", "data.separation", "distance of class means from the origin");
    gen_o.bind(gen, "--sigma", "data.sigma", "cluster standard deviation");
    gen_o.bind(gen, "--seed", "data.seed", "generator seed");
    gen->add_option("--out", gen_out, "output CSV")->required();

    Overrides inj_o;
    std::string inj_in, inj_out, inj_t;
    auto* inj = app.add_subcommand("inject-noise", "corrupt the labels of a dataset CSV");
    inj->add_option("--config", inj_o.config_path, "key = value config file");
    inj->add_option("--set", inj_o.sets, "extra key=value setting");
    add_noise_flags(inj, inj_o);
    inj_o.bind(inj, "--seed", "train.seed", "noise seed (falls back to NLL_SEED)");
    inj->add_option("--in", inj_in, "input dataset CSV")->required();
    inj->add_option("--out", inj_out, "output dataset CSV")->required();
    inj->add_option("--transition-out", inj_t, "also write the transition matrix CSV");

    Overrides train_o;
    std::string checkpoint;
    auto* train = app.add_subcommand("train", "train one model and write its metrics CSV");
    add_train_flags(train, train_o);
    train_o.bind(train, "--out", "output", "metrics CSV path");
    train->add_option("--checkpoint", checkpoint, "write final parameters here");

    Overrides rep_o;
    std::string rep_seeds = "1,2,3,4,5", rep_summary;
    int rep_jobs = 1;
    auto* rep = app.add_subcommand("replicate", "repeat a training run over several seeds");
    add_train_flags(rep, rep_o);
    rep_o.bind(rep, "--out", "output", "metrics CSV path; each seed gets a _seed<k> suffix");
    rep->add_option("--seeds", rep_seeds, "comma-separated seeds");
    rep->add_option("--jobs", rep_jobs, "parallel runs")->check(CLI::PositiveNumber);
    rep->add_option("--summary", rep_summary, "per-seed summary CSV");

    Overrides sweep_o;
    SweepFlags sweep_f;
    auto* sweep = app.add_subcommand("sweep", "two-stage hyperparameter search");
    add_train_flags(sweep, sweep_o);
    sweep->add_option("--lrs", sweep_f.lrs, "stage-1 learning rates");
    sweep->add_option("--wds", sweep_f.wds, "stage-1 weight decays");
    sweep->add_option("--values", sweep_f.values, "stage-2 values of the loss hyperparameter");
    sweep->add_option("--noise-settings", sweep_f.noise_settings, "stage-2 noise settings, e.g. symmetric:0.4");
    sweep->add_option("--stage1-noise", sweep_f.stage1_noise, "stage-1 noise setting");
    sweep->add_option("--jobs", sweep_f.jobs, "parallel runs")->check(CLI::PositiveNumber);
    sweep->add_option("--out", sweep_f.out, "sweep CSV (default: standard output)");

    Overrides abl_o;
    AblationFlags abl_f;
    auto* abl = app.add_subcommand("ablation", "loss and augmentation ablation tables");
    add_train_flags(abl, abl_o);
    abl->add_option("--mode", abl_f.mode, "no-consistency | mixed-loss | augment-strength")
        ->required()
        ->check(CLI::IsMember({"no-consistency", "mixed-loss", "augment-strength"}));
    abl->add_option("--out", abl_f.out, "table CSV")->required();
    abl->add_option("--seeds", abl_f.seeds, "comma-separated seeds");
    abl->add_option("--pis", abl_f.pis, "pi columns for mixed-loss mode");
    abl->add_option("--jobs", abl_f.jobs, "parallel runs")->check(CLI::PositiveNumber);

    std::vector<std::string> report_in;
    std::string report_labels, report_dir = ".";
    auto* report = app.add_subcommand("report", "turn metrics CSVs into tidy plot-data CSVs");
    report->add_option("--metrics", report_in, "metrics CSV files")->required();
    report->add_option("--labels", report_labels, "comma-separated series labels, one per file");
    report->add_option("--out-dir", report_dir, "directory for the plot-data CSVs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) return cmd_gen_data(gen_o, gen_out);
        if (*inj) return cmd_inject_noise(inj_o, inj_in, inj_out, inj_t);
        if (*train) return cmd_train(train_o, checkpoint);
        if (*rep) return cmd_replicate(rep_o, rep_seeds, rep_jobs, rep_summary);
        if (*sweep) return cmd_sweep(sweep_o, sweep_f);
        if (*abl) return cmd_ablation(abl_o, abl_f);
        if (*report) return cmd_report(report_in, report_labels, report_dir);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const CsvError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
