#include "pdfool/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pdfool {

namespace {

double curve_distance(std::span<const double> a, std::span<const double> b, CurveNorm norm) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        switch (norm) {
            case CurveNorm::l2: acc += d * d; break;
            case CurveNorm::l1: acc += d; break;
            case CurveNorm::linf: acc = std::max(acc, d); break;
        }
    }
    return norm == CurveNorm::l2 ? std::sqrt(acc) : acc;
}

}  // namespace

std::string curve_norm_name(CurveNorm norm) {
    switch (norm) {
        case CurveNorm::l2: return "l2";
        case CurveNorm::l1: return "l1";
        case CurveNorm::linf: return "linf";
    }
    throw ConfigError("unknown norm");
}

CurveNorm curve_norm_from_name(const std::string& name) {
    if (name == "l2") return CurveNorm::l2;
    if (name == "l1") return CurveNorm::l1;
    if (name == "linf") return CurveNorm::linf;
    throw ConfigError("unknown norm: '" + name + "'");
}

double true_positive_rate(const AdversarialModel& a, const Matrix& test_rows) {
    if (test_rows.rows == 0) throw DataError("true_positive_rate: empty test set");
    std::size_t passed = 0;
    for (std::size_t i = 0; i < test_rows.rows; ++i)
        if (a.route(test_rows.row(i)).kind != RouteKind::compensated) ++passed;
    return static_cast<double>(passed) / static_cast<double>(test_rows.rows);
}

double accuracy_of_attack(const PdCurve& original, const PdCurve& adversarial, const PdCurve& target, CurveNorm norm) {
    if (original.grid != adversarial.grid || original.grid != target.grid)
        throw DataError("accuracy_of_attack: curves must share one grid");
    const double num = curve_distance(adversarial.values, target.values, norm);
    const double den = curve_distance(original.values, target.values, norm);
    if (den == 0.0) {
        if (num == 0.0) return 1.0;
        throw NumericError("accuracy_of_attack: degenerate target (original already equals target everywhere)");
    }
    return 1.0 - num / den;
}

FidelitySummary fidelity_report(const AdversarialModel& a, const Predictor& f, const Matrix& test_rows) {
    if (test_rows.rows == 0) throw DataError("fidelity_report: empty test set");
    std::size_t exact = 0;
    for (std::size_t i = 0; i < test_rows.rows; ++i) {
        const auto row = test_rows.row(i);
        if (a.predict(row) == f.predict(row)) ++exact;
    }
    FidelitySummary summary;
    summary.exact_match_fraction = static_cast<double>(exact) / static_cast<double>(test_rows.rows);
    summary.tpr = true_positive_rate(a, test_rows);
    return summary;
}

std::vector<double> default_sweep_thresholds() {
    return {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
}

std::vector<AttackReport> sweep_fold(const SweepFoldCache& cache, const std::vector<double>& thresholds,
                                     std::size_t fold, const std::string& feature, CurveNorm norm) {
    for (std::size_t t = 1; t < thresholds.size(); ++t)
        if (thresholds[t] <= thresholds[t - 1]) throw ConfigError("sweep: thresholds must be strictly increasing");
    const std::size_t m = cache.grid.size();
    const std::size_t n_fit = cache.fit_prob.cols;
    const std::size_t n_test = cache.test_prob.cols;

    // The held-out original PD does not depend on the threshold.
    PdCurve original{feature, cache.grid, {}, CurveKind::original};
    for (std::size_t g = 0; g < m; ++g) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n_test; ++i) sum += cache.test_pred.at(g, i);
        original.values.push_back(sum / static_cast<double>(n_test));
    }
    const PdCurve target{feature, cache.grid, cache.target, CurveKind::target};

    std::vector<AttackReport> reports;
    for (double threshold : thresholds) {
        AttackReport report;
        report.threshold = threshold;
        report.fold = fold;
        report.feature = feature;

        // Single-feature TPR: fraction of held-out rows below the threshold.
        std::size_t passed = 0;
        for (double prob : cache.test_row_prob)
            if (prob < threshold) ++passed;
        report.tpr = static_cast<double>(passed) / static_cast<double>(cache.test_row_prob.size());

        // Refit lambda/rho/gamma on the cached fitting set at this threshold.
        std::vector<double> gamma(m, 0.0);
        bool unreachable = false;
        std::string failure;
        for (std::size_t g = 0; g < m && !unreachable; ++g) {
            std::size_t flagged = 0;
            double kept = 0.0;
            for (std::size_t i = 0; i < n_fit; ++i) {
                if (cache.fit_prob.at(g, i) >= threshold)
                    ++flagged;
                else
                    kept += cache.fit_pred.at(g, i);
            }
            const double lambda = static_cast<double>(flagged) / static_cast<double>(n_fit);
            if (flagged == 0) {
                unreachable = true;
                failure = "unreachable target at grid value " + format_double(cache.grid[g]);
                break;
            }
            const double rho = flagged == n_fit ? 0.0 : kept / static_cast<double>(n_fit - flagged);
            gamma[g] = (cache.target[g] - (1.0 - lambda) * rho) / lambda;
        }
        if (unreachable) {
            report.failed = true;
            report.failure = failure;
            reports.push_back(std::move(report));
            continue;
        }

        PdCurve adversarial{feature, cache.grid, {}, CurveKind::adversarial};
        for (std::size_t g = 0; g < m; ++g) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n_test; ++i)
                sum += cache.test_prob.at(g, i) >= threshold ? gamma[g] : cache.test_pred.at(g, i);
            adversarial.values.push_back(sum / static_cast<double>(n_test));
        }
        report.accuracy = accuracy_of_attack(original, adversarial, target, norm);
        reports.push_back(std::move(report));
    }
    return reports;
}

SweepResult threshold_sweep(const Dataset& data, const SweepSettings& settings) {
    if (settings.thresholds.empty()) throw ConfigError("sweep: no thresholds");
    for (double t : settings.thresholds)
        if (t <= 0.0 || t >= 1.0) throw ConfigError("sweep: thresholds must lie in (0, 1)");

    const FoldSplit split = kfold_split(data, settings.folds, derive_seed(settings.seed, "sweep/folds"));
    data.feature_index(settings.target.feature);  // fail fast on unknown feature

    SweepResult result;
    result.thresholds = settings.thresholds;
    for (std::size_t fold = 0; fold < settings.folds; ++fold) {
        const Dataset train = subset_rows(data, split.train_rows(fold));
        const Dataset test = subset_rows(data, split.test_rows(fold));

        MlpConfig f_config = settings.f_config;
        f_config.seed = derive_seed(settings.seed, "sweep/f/" + std::to_string(fold));
        const TrainedMlp f = train_mlp(train, f_config);

        const std::size_t multiplier =
            settings.multiplier > 0 ? settings.multiplier : default_augmenting_multiplier(train.n());
        const auto augmenting = generate_augmenting_sample(
            train, multiplier, derive_seed(settings.seed, "sweep/aug/" + std::to_string(fold)));
        MlpConfig c_config = settings.c_config;
        c_config.seed = derive_seed(settings.seed, "sweep/c/" + std::to_string(fold));
        // Threshold on the classifier object is irrelevant here; probabilities
        // are cached once and re-thresholded per sweep point.
        const ExtrapolationClassifier c = train_extrapolation_classifier(train, augmenting, c_config, 0.5);

        const GridSpec grid = grid_for(train, settings.target.feature, settings.grid_policy, settings.grid_quantiles);
        double mean_pred = 0.0;
        {
            const auto preds = predict_batch(f, train.rows);
            for (double v : preds) mean_pred += v;
            mean_pred /= static_cast<double>(preds.size());
        }
        const TargetPd target = resolve_target(settings.target, grid, mean_pred);

        SweepFoldCache cache;
        cache.grid = grid.values;
        cache.target = target.desired;
        const std::size_t m = grid.values.size();
        cache.fit_prob = Matrix(m, train.n());
        cache.fit_pred = Matrix(m, train.n());
        cache.test_prob = Matrix(m, test.n());
        cache.test_pred = Matrix(m, test.n());

        Matrix block;
        const auto fit_permuted = build_permuted_pd_data(train, grid);
        for (std::size_t g = 0; g < m; ++g) {
            fit_permuted.materialize_block(g, block);
            for (std::size_t i = 0; i < train.n(); ++i) {
                cache.fit_prob.at(g, i) = c.probability(block.row(i));
                cache.fit_pred.at(g, i) = f.predict(block.row(i));
            }
        }
        const auto test_permuted = build_permuted_pd_data(test, grid);
        for (std::size_t g = 0; g < m; ++g) {
            test_permuted.materialize_block(g, block);
            for (std::size_t i = 0; i < test.n(); ++i) {
                cache.test_prob.at(g, i) = c.probability(block.row(i));
                cache.test_pred.at(g, i) = f.predict(block.row(i));
            }
        }
        cache.test_row_prob.resize(test.n());
        for (std::size_t i = 0; i < test.n(); ++i) cache.test_row_prob[i] = c.probability(test.rows.row(i));

        auto fold_reports = sweep_fold(cache, settings.thresholds, fold, settings.target.feature, settings.norm);
        result.reports.insert(result.reports.end(), fold_reports.begin(), fold_reports.end());
    }
    return result;
}

void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
    std::ostringstream out;
    out << "threshold,fold,feature,tpr,accuracy,failed\n";
    for (const auto& r : sweep.reports) {
        out << format_double(r.threshold) << ',' << r.fold << ',' << r.feature << ',' << format_double(r.tpr) << ',';
        if (r.failed)
            out << "," << 1 << '\n';
        else
            out << format_double(r.accuracy) << ',' << 0 << '\n';
    }
    write_text_file(path, out.str());
}

}  // namespace pdfool
