#include "pdfool/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "pdfool/svg.hpp"

namespace pdfool {

namespace fs = std::filesystem;

namespace {

struct OutputTracker {
    fs::path dir;
    std::vector<std::string> files;

    explicit OutputTracker(const std::string& out_dir) : dir(out_dir) { fs::create_directories(dir); }

    std::string path(const std::string& relative) {
        const fs::path full = dir / relative;
        fs::create_directories(full.parent_path());
        files.push_back(relative);
        return full.string();
    }

    void finish(const std::string& command, const RunConfig& config,
                const std::vector<std::string>& input_files) const {
        RunManifest manifest;
        manifest.command = command;
        manifest.config = config.resolved();
        for (const auto& file : input_files) manifest.inputs.emplace_back(hash_file(file), file);
        for (const auto& file : files) manifest.outputs.emplace_back(hash_file((dir / file).string()), file);
        manifest.save((dir / "manifest.txt").string());
    }
};

std::vector<std::string> dataset_input_files(const RunConfig& config) {
    std::vector<std::string> inputs;
    if (config.get("data.source") == "csv") {
        inputs.push_back(config.get("data.csv"));
        inputs.push_back(config.get("data.schema"));
    }
    return inputs;
}

void write_report_csv(const std::string& path, const std::vector<FoldOutcome>& outcomes,
                      const AttackSettings& settings) {
    std::ostringstream out;
    out << "fold,feature,threshold,tpr,fidelity,accuracy\n";
    for (const auto& fold : outcomes)
        for (std::size_t t = 0; t < settings.targets.size(); ++t)
            out << fold.fold << ',' << settings.targets[t].feature << ',' << format_double(settings.threshold) << ','
                << format_double(fold.tpr) << ',' << format_double(fold.fidelity) << ','
                << format_double(fold.accuracy[t]) << '\n';
    write_text_file(path, out.str());
}

std::vector<CurveSeries> fold_curve_series(const FoldOutcome& fold) {
    std::vector<CurveSeries> series;
    for (std::size_t t = 0; t < fold.targets.size(); ++t) {
        series.push_back(to_series(fold.test_original[t], "original_test"));
        series.push_back(to_series(fold.test_adversarial[t], "adversarial_test"));
        series.push_back(to_series(fold.insample_adversarial[t], "adversarial_insample"));
        series.push_back(to_series(fold.target_curves[t], "target"));
        series.push_back(to_series(fold.rho_curves[t], "conditional_rho"));
    }
    return series;
}

SvgStyle style_for_series(const std::string& name) {
    if (name.rfind("ice_", 0) == 0) return SvgStyle::ice;
    if (name.rfind("original", 0) == 0) return SvgStyle::pd_original;
    if (name.rfind("adversarial", 0) == 0) return SvgStyle::pd_adversarial;
    if (name == "target") return SvgStyle::pd_target;
    if (name == "conditional_rho") return SvgStyle::pd_rho;
    if (name == "ice_p10" || name == "ice_p90") return SvgStyle::band;
    return SvgStyle::pd_other;
}

}  // namespace

void cmd_simulate(const RunConfig& config, const std::string& out_dir) {
    const SimulationConfig sim = make_sim_config(config);
    const Dataset ds = simulate_correlated_gaussian(sim);  // validates before anything is written
    OutputTracker out(out_dir);
    save_csv(ds, out.path("data.csv"));
    write_text_file(out.path("data.meta"), simulation_metadata(sim));
    save_schema_file(ds.schema, out.path("schema.txt"));
    out.finish("simulate", config, {});
}

void cmd_train(const RunConfig& config, const std::string& out_dir) {
    const Dataset ds = load_dataset(config);
    const MlpTask task = mlp_task_from_name(config.get("model.task"));
    const std::size_t output_width = task == MlpTask::multiclass
                                         ? static_cast<std::size_t>(
                                               1 + *std::max_element(ds.target.begin(), ds.target.end()))
                                         : 1;
    auto mlp_config = make_mlp_config(make_learner_settings(config, "model"), task, output_width,
                                      derive_seed(config.seed("run.seed"), "stage/train"));
    const TrainedMlp model = train_mlp(ds, mlp_config);

    OutputTracker out(out_dir);
    model.save(out.path("f.model"));
    std::ostringstream log;
    log << "epoch,train_loss,valid_loss\n";
    for (std::size_t e = 0; e < model.training_log().size(); ++e)
        log << e << ',' << format_double(model.training_log()[e].first) << ','
            << format_double(model.training_log()[e].second) << '\n';
    write_text_file(out.path("training_log.csv"), log.str());
    out.finish("train", config, dataset_input_files(config));
}

void cmd_attack(const RunConfig& config, const std::string& out_dir) {
    const AttackSettings settings = make_attack_settings(config);
    const Dataset ds = load_dataset(config);
    for (const auto& target : settings.targets) ds.feature_index(target.feature);  // config errors before any write

    const FoldSplit split = kfold_split(ds, settings.folds, derive_seed(settings.seed, "attack/folds"));
    OutputTracker out(out_dir);
    std::vector<FoldOutcome> outcomes;
    for (std::size_t fold = 0; fold < settings.folds; ++fold) {
        FoldOutcome outcome = run_attack_fold(ds, split, fold, settings);
        const std::string prefix = "fold" + std::to_string(fold) + "/";

        const auto* f_mlp = dynamic_cast<const TrainedMlp*>(outcome.f.get());
        if (f_mlp) f_mlp->save(out.path(prefix + "f.model"));
        const auto* c_mlp = dynamic_cast<const TrainedMlp*>(outcome.c.model.get());
        if (c_mlp) c_mlp->save(out.path(prefix + "c.model"));
        if (outcome.allocator) {
            const auto* g_mlp = dynamic_cast<const TrainedMlp*>(outcome.allocator->model.get());
            if (g_mlp) g_mlp->save(out.path(prefix + "allocator.model"));
        }
        save_adversarial(*outcome.adversarial, out.path(prefix + "attack_manifest.txt"),
                         settings.external_model.empty() ? "f.model" : settings.external_model, "c.model",
                         "allocator.model");
        write_curves_csv(out.path(prefix + "curves.csv"), fold_curve_series(outcome));
        if (!outcome.warnings.empty()) {
            std::string text;
            for (const auto& w : outcome.warnings) {
                text += w + '\n';
                std::cerr << "warning: fold " << fold << ": " << w << '\n';
            }
            write_text_file(out.path(prefix + "warnings.txt"), text);
        }
        if (config.flag("attack.write_fold_data")) {
            save_csv(subset_rows(ds, split.train_rows(fold)), out.path(prefix + "train.csv"));
            save_csv(subset_rows(ds, split.test_rows(fold)), out.path(prefix + "test.csv"));
        }
        outcomes.push_back(std::move(outcome));
    }
    write_report_csv(out.path("report.csv"), outcomes, settings);

    auto inputs = dataset_input_files(config);
    if (!settings.external_model.empty()) inputs.push_back(settings.external_model);
    out.finish("attack", config, inputs);
}

void cmd_evaluate(const RunConfig& config, const std::string& out_dir) {
    if (!config.has("evaluate.attack_manifest")) throw ConfigError("evaluate needs evaluate.attack_manifest");
    const std::string manifest_path = config.get("evaluate.attack_manifest");
    const AdversarialModel model = load_adversarial(manifest_path);
    const Dataset ds = load_dataset(config);
    if (ds.p() != model.input_dim()) throw DataError("evaluate: data width does not match the attacked model");
    const CurveNorm norm = curve_norm_from_name(config.get("metrics.norm"));

    OutputTracker out(out_dir);
    const auto fidelity = fidelity_report(model, model.original(), ds.rows);

    std::vector<CurveSeries> series;
    std::ostringstream report;
    report << "feature,threshold,tpr,fidelity,accuracy\n";
    for (std::size_t t = 0; t < model.targeted_features().size(); ++t) {
        const auto& comp = model.compensation().for_feature(model.targeted_features()[t]);
        GridSpec grid;
        grid.feature = comp.feature;
        grid.source = GridSource::explicit_values;
        PdCurve target{comp.feature, {}, {}, CurveKind::target};
        for (const auto& e : comp.entries) {
            grid.values.push_back(e.grid_value);
            target.grid.push_back(e.grid_value);
            // The fitted identity (1 - lambda) rho + lambda gamma recovers the
            // desired PD value at every stored grid point.
            target.values.push_back((1.0 - e.lambda) * e.rho + e.lambda * e.gamma);
        }
        const auto permuted = build_permuted_pd_data(ds, grid);
        PdCurve original = compute_pd(model.original(), permuted);
        PdCurve adversarial = compute_pd(model, permuted);
        adversarial.kind = CurveKind::adversarial;
        const double accuracy = accuracy_of_attack(original, adversarial, target, norm);
        report << comp.feature << ',' << format_double(model.extrapolation().threshold) << ','
               << format_double(fidelity.tpr) << ',' << format_double(fidelity.exact_match_fraction) << ','
               << format_double(accuracy) << '\n';
        series.push_back(to_series(original, "original_eval"));
        series.push_back(to_series(adversarial, "adversarial_eval"));
        series.push_back(to_series(target, "target"));
    }
    write_text_file(out.path("report.csv"), report.str());
    write_curves_csv(out.path("curves.csv"), series);

    auto inputs = dataset_input_files(config);
    inputs.push_back(manifest_path);
    out.finish("evaluate", config, inputs);
}

void cmd_sweep(const RunConfig& config, const std::string& out_dir) {
    const SweepSettings settings = make_sweep_settings(config);
    const Dataset ds = load_dataset(config);
    const SweepResult result = threshold_sweep(ds, settings);
    OutputTracker out(out_dir);
    write_sweep_csv(out.path("sweep.csv"), result);
    out.finish("sweep", config, dataset_input_files(config));
}

void cmd_plot(const RunConfig& config, const std::string& out_dir) {
    if (!config.has("plot.curves")) throw ConfigError("plot needs plot.curves");
    auto series = read_curves_csv(config.get("plot.curves"));
    std::vector<std::string> inputs = {config.get("plot.curves")};

    std::vector<CurveSeries> ice;
    if (config.has("plot.ice")) {
        ice = read_curves_csv(config.get("plot.ice"));
        inputs.push_back(config.get("plot.ice"));
    }
    const std::size_t max_ice = config.count("plot.max_ice");

    // Group by feature; panel order follows first appearance in the file.
    std::vector<std::string> features;
    for (const auto& s : series)
        if (std::find(features.begin(), features.end(), s.feature) == features.end()) features.push_back(s.feature);
    for (const auto& s : ice)
        if (std::find(features.begin(), features.end(), s.feature) == features.end()) features.push_back(s.feature);

    std::vector<SvgPanel> panels;
    for (const auto& feature : features) {
        SvgPanel panel;
        panel.title = feature;

        // ICE curves first (background), with 10th/90th percentile overlays.
        std::vector<const CurveSeries*> feature_ice;
        for (const auto& s : ice)
            if (s.feature == feature && s.series.rfind("ice_", 0) == 0) feature_ice.push_back(&s);
        if (!feature_ice.empty()) {
            const std::size_t stride = feature_ice.size() > max_ice && max_ice > 0
                                           ? (feature_ice.size() + max_ice - 1) / max_ice
                                           : 1;
            for (std::size_t i = 0; i < feature_ice.size(); i += stride)
                panel.series.push_back({feature_ice[i]->series, SvgStyle::ice, feature_ice[i]->grid,
                                        feature_ice[i]->values});

            const auto& grid = feature_ice.front()->grid;
            SvgSeries p10{"ice_p10", SvgStyle::band, grid, {}};
            SvgSeries p90{"ice_p90", SvgStyle::band, grid, {}};
            std::vector<double> column(feature_ice.size());
            for (std::size_t g = 0; g < grid.size(); ++g) {
                for (std::size_t i = 0; i < feature_ice.size(); ++i) column[i] = feature_ice[i]->values.at(g);
                std::sort(column.begin(), column.end());
                p10.y.push_back(quantile_type7(column, 0.10));
                p90.y.push_back(quantile_type7(column, 0.90));
            }
            panel.series.push_back(std::move(p10));
            panel.series.push_back(std::move(p90));
        }
        for (const auto& s : series)
            if (s.feature == feature) panel.series.push_back({s.series, style_for_series(s.series), s.grid, s.values});
        panels.push_back(std::move(panel));
    }

    OutputTracker out(out_dir);
    write_text_file(out.path(config.get("plot.name")), render_line_panels(panels));
    out.finish("plot", config, inputs);
}

void run_command(const std::string& command, const RunConfig& config, const std::string& out_dir) {
    if (command == "simulate") return cmd_simulate(config, out_dir);
    if (command == "train") return cmd_train(config, out_dir);
    if (command == "attack") return cmd_attack(config, out_dir);
    if (command == "evaluate") return cmd_evaluate(config, out_dir);
    if (command == "sweep") return cmd_sweep(config, out_dir);
    if (command == "plot") return cmd_plot(config, out_dir);
    throw ConfigError("unknown command '" + command + "'");
}

void cmd_rerun(const std::string& manifest_path, const std::string& out_dir) {
    const RunManifest manifest = RunManifest::load(manifest_path);
    const RunConfig config = RunConfig::from_pairs(manifest.config);
    run_command(manifest.command, config, out_dir);
}

}  // namespace pdfool
