#include "pdfool/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace pdfool {

MlpConfig make_mlp_config(const LearnerSettings& s, MlpTask task, std::size_t output_width, std::uint64_t seed) {
    MlpConfig config;
    config.layer_widths = s.hidden;
    config.layer_widths.push_back(output_width);
    config.task = task;
    config.dropout_rate = s.dropout;
    config.learn_rate = s.learn_rate;
    config.max_epochs = s.max_epochs;
    config.early_stop_patience = s.patience;
    config.validation_fraction = s.validation_fraction;
    config.seed = seed;
    return config;
}

double least_squares_slope(std::span<const double> grid, std::span<const double> values) {
    const std::size_t m = grid.size();
    if (m < 2) throw NumericError("least_squares_slope: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += grid[i];
        my += values[i];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxy += (grid[i] - mx) * (values[i] - my);
        sxx += (grid[i] - mx) * (grid[i] - mx);
    }
    if (sxx == 0.0) throw NumericError("least_squares_slope: degenerate grid");
    return sxy / sxx;
}

FoldOutcome run_attack_fold(const Dataset& data, const FoldSplit& split, std::size_t fold,
                            const AttackSettings& settings) {
    if (settings.targets.empty()) throw ConfigError("attack: no targeted features");
    for (const auto& t : settings.targets) data.feature_index(t.feature);  // fail fast

    FoldOutcome out;
    out.fold = fold;
    const Dataset train = subset_rows(data, split.train_rows(fold));
    const Dataset test = subset_rows(data, split.test_rows(fold));
    const auto fold_tag = std::to_string(fold);

    // Original model f.
    std::shared_ptr<const Predictor> f;
    if (!settings.external_model.empty()) {
        f = std::make_shared<TrainedMlp>(TrainedMlp::load(settings.external_model));
    } else {
        auto config = make_mlp_config(settings.f_learner, settings.f_task, 1,
                                      derive_seed(settings.seed, "attack/f/" + fold_tag));
        f = std::make_shared<TrainedMlp>(train_mlp(train, config));
    }
    out.f = f;
    if (f->input_dim() != data.p()) throw DataError("attack: model input width does not match the data");

    const auto train_preds = predict_batch(*f, train.rows);
    double mean_pred = 0.0, min_pred = train_preds[0], max_pred = train_preds[0];
    for (double v : train_preds) {
        mean_pred += v;
        min_pred = std::min(min_pred, v);
        max_pred = std::max(max_pred, v);
    }
    mean_pred /= static_cast<double>(train_preds.size());

    // Extrapolation classifier c on real vs augmenting rows.
    const std::size_t multiplier =
        settings.multiplier > 0 ? settings.multiplier : default_augmenting_multiplier(train.n());
    const auto augmenting =
        generate_augmenting_sample(train, multiplier, derive_seed(settings.seed, "attack/aug/" + fold_tag));
    auto c_config =
        make_mlp_config(settings.c_learner, MlpTask::binary, 1, derive_seed(settings.seed, "attack/c/" + fold_tag));
    c_config.class_weights = {settings.weight_real, settings.weight_synthetic};
    out.c = train_extrapolation_classifier(train, augmenting, c_config, settings.threshold);

    // Compensation per targeted feature, fitted on the training fold.
    const std::size_t q = settings.targets.size();
    std::vector<GridSpec> grids;
    std::vector<PermutedPdData> fit_permuted;
    for (const auto& spec : settings.targets) {
        grids.push_back(grid_for(train, spec.feature, settings.grid_policy, settings.grid_quantiles));
        fit_permuted.push_back(build_permuted_pd_data(train, grids.back()));
    }
    for (std::size_t t = 0; t < q; ++t) {
        const auto lambda_rho = estimate_lambda_rho(fit_permuted[t], out.c, *f);
        const TargetPd target = resolve_target(settings.targets[t], grids[t], mean_pred);
        const auto kind = train.schema[train.feature_index(target.feature)].kind;
        auto comp = solve_gamma(target, lambda_rho, kind);

        // Compensating outputs may leave the model's observed output range;
        // they are reported, never clipped.
        const double lo = f->is_classifier() ? 0.0 : min_pred;
        const double hi = f->is_classifier() ? 1.0 : max_pred;
        std::string offending;
        for (const auto& e : comp.entries)
            if (e.gamma < lo || e.gamma > hi) offending += (offending.empty() ? "" : ", ") + format_double(e.grid_value);
        if (!offending.empty())
            out.warnings.push_back("feature '" + target.feature + "': compensating outputs outside [" +
                                   format_double(lo) + ", " + format_double(hi) + "] at grid values " + offending);

        out.targets.push_back(target);
        out.comp.features.push_back(std::move(comp));

        PdCurve rho_curve{target.feature, grids[t].values, {}, CurveKind::conditional_rho};
        for (const auto& lr : lambda_rho) rho_curve.values.push_back(lr.rho);
        out.rho_curves.push_back(std::move(rho_curve));
        out.target_curves.push_back(PdCurve{target.feature, target.grid, target.desired, CurveKind::target});
    }

    // Allocator for multi-feature attacks.
    if (q >= 2) {
        auto g_config = make_mlp_config(settings.g_learner, MlpTask::multiclass, q + 1,
                                        derive_seed(settings.seed, "attack/g/" + fold_tag));
        if (settings.allocator_weight_real != 1.0) {
            g_config.class_weights.assign(q + 1, 1.0);
            g_config.class_weights[q] = settings.allocator_weight_real;
        }
        out.allocator = train_allocator(train, fit_permuted, out.c, g_config);
    }

    std::vector<std::string> targeted;
    for (const auto& spec : settings.targets) targeted.push_back(spec.feature);
    if (q == 1)
        out.adversarial = std::make_shared<AdversarialModel>(
            build_adversarial_single(f, out.c, out.comp, targeted[0], train));
    else
        out.adversarial = std::make_shared<AdversarialModel>(
            build_adversarial_multi(f, out.c, *out.allocator, out.comp, targeted, train));

    // In-sample Algorithm-1 evaluation reproduces the target by construction.
    for (std::size_t t = 0; t < q; ++t) {
        const AdversarialModel single = build_adversarial_single(f, out.c, out.comp, targeted[t], train);
        PdCurve curve = compute_pd(single, fit_permuted[t]);
        curve.kind = CurveKind::adversarial;
        out.insample_adversarial.push_back(std::move(curve));
    }

    // Held-out evaluation.
    for (std::size_t t = 0; t < q; ++t) {
        const auto test_permuted = build_permuted_pd_data(test, grids[t]);
        PdCurve original = compute_pd(*f, test_permuted);
        PdCurve adversarial = compute_pd(*out.adversarial, test_permuted);
        adversarial.kind = CurveKind::adversarial;
        out.accuracy.push_back(accuracy_of_attack(original, adversarial, out.target_curves[t], settings.norm));
        out.test_original.push_back(std::move(original));
        out.test_adversarial.push_back(std::move(adversarial));
    }
    const auto fidelity = fidelity_report(*out.adversarial, *f, test.rows);
    out.tpr = fidelity.tpr;
    out.fidelity = fidelity.exact_match_fraction;
    return out;
}

std::vector<FoldOutcome> run_attack_experiment(const Dataset& data, const AttackSettings& settings) {
    const FoldSplit split = kfold_split(data, settings.folds, derive_seed(settings.seed, "attack/folds"));
    std::vector<FoldOutcome> outcomes;
    for (std::size_t fold = 0; fold < settings.folds; ++fold)
        outcomes.push_back(run_attack_fold(data, split, fold, settings));
    return outcomes;
}

}  // namespace pdfool
