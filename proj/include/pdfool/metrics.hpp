#pragma once

#include "pdfool/attack.hpp"
#include "pdfool/common.hpp"
#include "pdfool/data.hpp"
#include "pdfool/explain.hpp"

namespace pdfool {

// Fraction of test rows whose prediction passes through to the original
// model, either straight from c(x) or via the allocator's base class.
double true_positive_rate(const AdversarialModel& a, const Matrix& test_rows);

enum class CurveNorm { l2, l1, linf };
std::string curve_norm_name(CurveNorm norm);
CurveNorm curve_norm_from_name(const std::string& name);

// 1 - ||adversarial - target|| / ||original - target|| over grid points.
double accuracy_of_attack(const PdCurve& original, const PdCurve& adversarial, const PdCurve& target,
                          CurveNorm norm = CurveNorm::l2);

struct FidelitySummary {
    double exact_match_fraction = 0.0;  // a(x) == f(x) bit for bit
    double tpr = 0.0;                   // equal by construction; emitted as a cross-check
};

FidelitySummary fidelity_report(const AdversarialModel& a, const Predictor& f, const Matrix& test_rows);

struct AttackReport {
    double threshold = 0.0;
    std::size_t fold = 0;
    std::string feature;
    double tpr = 0.0;
    double accuracy = 0.0;
    bool failed = false;
    std::string failure;
};

struct SweepResult {
    std::vector<double> thresholds;
    std::vector<AttackReport> reports;
};

// Per-fold caches for the single-feature sweep: classifier probabilities and
// original-model predictions are computed once, then re-thresholded.
struct SweepFoldCache {
    std::vector<double> grid;
    std::vector<double> target;
    Matrix fit_prob;        // m x n_train: c probabilities on the fitting permutation set
    Matrix fit_pred;        // m x n_train: f predictions on the same rows
    std::vector<double> test_row_prob;  // c probabilities on the held-out rows
    Matrix test_prob;       // m x n_test
    Matrix test_pred;       // m x n_test
};

std::vector<AttackReport> sweep_fold(const SweepFoldCache& cache, const std::vector<double>& thresholds,
                                     std::size_t fold, const std::string& feature, CurveNorm norm);

struct SweepSettings {
    std::size_t folds = 5;
    std::uint64_t seed = 1;
    MlpConfig f_config;
    MlpConfig c_config;
    std::size_t multiplier = 0;  // 0 = default by n
    TargetSpec target;
    GridPolicy grid_policy = GridPolicy::automatic;
    std::size_t grid_quantiles = 20;
    std::vector<double> thresholds;
    CurveNorm norm = CurveNorm::l2;
};

SweepResult threshold_sweep(const Dataset& data, const SweepSettings& settings);

void write_sweep_csv(const std::string& path, const SweepResult& sweep);

std::vector<double> default_sweep_thresholds();

}  // namespace pdfool
