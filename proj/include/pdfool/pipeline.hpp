#pragma once

#include <memory>
#include <optional>

#include "pdfool/attack.hpp"
#include "pdfool/data.hpp"
#include "pdfool/explain.hpp"
#include "pdfool/metrics.hpp"
#include "pdfool/mlp.hpp"

namespace pdfool {

struct LearnerSettings {
    std::vector<std::size_t> hidden;  // hidden widths; the output width is set by the role
    double dropout = 0.0;
    double learn_rate = 0.05;
    std::size_t max_epochs = 200;
    std::size_t patience = 8;
    double validation_fraction = 0.1;
};

MlpConfig make_mlp_config(const LearnerSettings& s, MlpTask task, std::size_t output_width, std::uint64_t seed);

struct AttackSettings {
    std::size_t folds = 5;
    std::uint64_t seed = 1;

    LearnerSettings f_learner;
    MlpTask f_task = MlpTask::regression;
    std::string external_model;  // non-empty: load f instead of training

    LearnerSettings c_learner;
    double weight_real = 1.0;       // class weight on real rows when training c
    double weight_synthetic = 1.0;  // class weight on augmenting rows
    double threshold = 0.5;
    std::size_t multiplier = 0;  // 0 = default by training-fold size

    LearnerSettings g_learner;
    double allocator_weight_real = 1.0;  // class weight on the base (real) class

    std::vector<TargetSpec> targets;
    GridPolicy grid_policy = GridPolicy::automatic;
    std::size_t grid_quantiles = 20;
    CurveNorm norm = CurveNorm::l2;
};

struct FoldOutcome {
    std::size_t fold = 0;
    std::shared_ptr<const Predictor> f;
    ExtrapolationClassifier c;
    std::optional<AllocatorClassifier> allocator;
    CompensationTable comp;
    std::vector<TargetPd> targets;
    std::shared_ptr<AdversarialModel> adversarial;

    // Per targeted feature, in target order.
    std::vector<PdCurve> test_original;
    std::vector<PdCurve> test_adversarial;
    std::vector<PdCurve> insample_adversarial;  // Algorithm-1 evaluation on the fitting rows
    std::vector<PdCurve> target_curves;
    std::vector<PdCurve> rho_curves;

    double tpr = 0.0;
    double fidelity = 0.0;
    std::vector<double> accuracy;  // per targeted feature, on the held-out fold
    std::vector<std::string> warnings;
};

FoldOutcome run_attack_fold(const Dataset& data, const FoldSplit& split, std::size_t fold,
                            const AttackSettings& settings);

std::vector<FoldOutcome> run_attack_experiment(const Dataset& data, const AttackSettings& settings);

// Least-squares slope of values over grid points.
double least_squares_slope(std::span<const double> grid, std::span<const double> values);

}  // namespace pdfool
