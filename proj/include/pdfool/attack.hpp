#pragma once

#include <memory>
#include <optional>

#include "pdfool/common.hpp"
#include "pdfool/data.hpp"
#include "pdfool/explain.hpp"
#include "pdfool/mlp.hpp"

namespace pdfool {

// Synthetic rows with every cell drawn independently: categorical cells from
// the schema categories, numeric cells uniformly from the feature's observed
// unique training values. Breaking the joint dependence is what marks these
// rows as extrapolation.
struct AugmentingSample {
    Matrix rows;
    std::size_t multiplier = 0;
    std::uint64_t seed = 0;
};

AugmentingSample generate_augmenting_sample(const Dataset& ds, std::size_t multiplier, std::uint64_t seed);

// Default multiplier: 30 for large datasets, 100 otherwise.
std::size_t default_augmenting_multiplier(std::size_t n);

struct ExtrapolationClassifier {
    std::shared_ptr<const Predictor> model;
    double threshold = 0.5;

    double probability(std::span<const double> row) const { return model->predict(row); }
    // Ties at the threshold resolve to extrapolation.
    int classify(std::span<const double> row) const { return probability(row) >= threshold ? 1 : 0; }
};

ExtrapolationClassifier train_extrapolation_classifier(const Dataset& ds, const AugmentingSample& augmenting,
                                                       const MlpConfig& learner_config, double threshold);

struct TargetPd {
    std::string feature;
    std::vector<double> grid;
    std::vector<double> desired;
};

TargetPd target_flat(const GridSpec& grid, double level);
TargetPd target_linear(const GridSpec& grid, double slope, double intercept);
TargetPd target_explicit(const GridSpec& grid, std::vector<double> values);

// Config-level target description; *_at_mean anchor the curve at the model's
// mean training prediction.
struct TargetSpec {
    enum class Kind { flat, flat_at_mean, linear, linear_at_mean, explicit_values };
    std::string feature;
    Kind kind = Kind::flat_at_mean;
    double level = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> values;
};

TargetPd resolve_target(const TargetSpec& spec, const GridSpec& grid, double mean_prediction);

struct LambdaRho {
    double lambda = 0.0;
    double rho = 0.0;
    bool rho_defined = true;  // false when lambda == 1 (rho is unused downstream)
};

std::vector<LambdaRho> estimate_lambda_rho(const PermutedPdData& permuted, const ExtrapolationClassifier& c,
                                           const Predictor& f);

struct CompensationEntry {
    double grid_value = 0.0;
    double lambda = 0.0;
    double rho = 0.0;
    double gamma = 0.0;
};

struct FeatureCompensation {
    std::string feature;
    FeatureKind kind = FeatureKind::continuous;
    std::vector<CompensationEntry> entries;  // ascending grid value

    // Numeric features interpolate linearly between adjacent grid values and
    // clamp outside the grid range; categorical features require an exact
    // grid match.
    double gamma_at(double x) const;
};

struct CompensationTable {
    std::vector<FeatureCompensation> features;

    bool has(const std::string& feature) const;
    const FeatureCompensation& for_feature(const std::string& feature) const;
};

FeatureCompensation solve_gamma(const TargetPd& target, const std::vector<LambdaRho>& lambda_rho, FeatureKind kind);

struct AllocatorClassifier {
    std::shared_ptr<const Predictor> model;
    std::size_t num_targets = 0;  // classes: 0..num_targets-1 per target, num_targets = real

    // Returns the target slot, or num_targets for the real class.
    std::size_t allocate(std::span<const double> row) const;
};

AllocatorClassifier train_allocator(const Dataset& ds, const std::vector<PermutedPdData>& permuted_sets,
                                    const ExtrapolationClassifier& c, const MlpConfig& learner_config);

enum class RouteKind { original, allocator_no, compensated };

struct Route {
    RouteKind kind = RouteKind::original;
    std::size_t target_slot = 0;  // valid when kind == compensated
};

// The composite a(x): passes rows the classifier sees as real straight to
// the original model, otherwise emits the compensating output of the target
// feature the allocator picks.
class AdversarialModel final : public Predictor {
  public:
    AdversarialModel(std::shared_ptr<const Predictor> original, ExtrapolationClassifier extrapolation,
                     std::optional<AllocatorClassifier> allocator, CompensationTable compensation,
                     std::vector<std::string> targeted, std::vector<std::size_t> targeted_idx);

    std::size_t input_dim() const override { return original_->input_dim(); }
    double predict(std::span<const double> row) const override;
    Route route(std::span<const double> row) const;

    const Predictor& original() const { return *original_; }
    std::shared_ptr<const Predictor> original_ptr() const { return original_; }
    const ExtrapolationClassifier& extrapolation() const { return extrapolation_; }
    const std::optional<AllocatorClassifier>& allocator() const { return allocator_; }
    const CompensationTable& compensation() const { return compensation_; }
    const std::vector<std::string>& targeted_features() const { return targeted_; }
    const std::vector<std::size_t>& targeted_indices() const { return targeted_idx_; }

  private:
    std::shared_ptr<const Predictor> original_;
    ExtrapolationClassifier extrapolation_;
    std::optional<AllocatorClassifier> allocator_;
    CompensationTable compensation_;
    std::vector<std::string> targeted_;
    std::vector<std::size_t> targeted_idx_;
};

AdversarialModel build_adversarial_single(std::shared_ptr<const Predictor> f, ExtrapolationClassifier c,
                                          CompensationTable comp, const std::string& feature, const Dataset& ds);

AdversarialModel build_adversarial_multi(std::shared_ptr<const Predictor> f, ExtrapolationClassifier c,
                                         AllocatorClassifier allocator, CompensationTable comp,
                                         std::vector<std::string> targeted, const Dataset& ds);

std::vector<double> adversarial_predict_batch(const AdversarialModel& a, const Matrix& rows);

// Audit manifest: targeted features, grids, lambda/rho/gamma triples, the
// threshold and the referenced model files, enough to rebuild a(x).
void save_adversarial(const AdversarialModel& a, const std::string& manifest_path, const std::string& original_file,
                      const std::string& classifier_file, const std::string& allocator_file);
AdversarialModel load_adversarial(const std::string& manifest_path);

}  // namespace pdfool
