#pragma once

#include <memory>
#include <utility>

#include "pdfool/common.hpp"
#include "pdfool/data.hpp"

namespace pdfool {

// Anything that maps a feature row to a prediction. Regression models return
// the response; binary classifiers return the class-1 probability.
class Predictor {
  public:
    virtual ~Predictor() = default;
    virtual std::size_t input_dim() const = 0;
    virtual double predict(std::span<const double> row) const = 0;
    virtual bool is_classifier() const { return false; }
    virtual std::vector<double> predict_class_distribution(std::span<const double> row) const;
};

std::vector<double> predict_batch(const Predictor& model, const Matrix& rows);

enum class MlpTask { regression, binary, multiclass };

std::string mlp_task_name(MlpTask task);
MlpTask mlp_task_from_name(const std::string& name);

struct MlpConfig {
    std::vector<std::size_t> layer_widths;  // hidden widths then the output width
    MlpTask task = MlpTask::regression;
    double dropout_rate = 0.0;
    double learn_rate = 0.05;
    std::size_t max_epochs = 200;
    std::size_t early_stop_patience = 8;
    std::vector<double> class_weights;  // classifiers only; empty = unweighted
    std::uint64_t seed = 1;
    double validation_fraction = 0.1;
};

// The bare parameterized network (ReLU hidden layers, head applied in the
// loss). Public so gradient checks can drive loss_and_grad directly against
// finite differences of loss().
struct MlpNetwork {
    MlpTask task = MlpTask::regression;
    std::vector<Matrix> weights;  // layer l: out x in
    std::vector<std::vector<double>> biases;

    static MlpNetwork init(std::size_t input_dim, const std::vector<std::size_t>& widths, MlpTask task, Rng& rng);
    static MlpNetwork zeros_like(const MlpNetwork& shape);

    std::size_t input_dim() const { return weights.front().cols; }
    std::size_t output_dim() const { return weights.back().rows; }
    std::size_t layer_count() const { return weights.size(); }
    std::size_t param_count() const;
    double get_param(std::size_t flat) const;
    void set_param(std::size_t flat, double value);

    // Output-layer pre-activation for one row.
    std::vector<double> forward(std::span<const double> x) const;

    // Pre-activations of every layer for one row (gradient checks use this to
    // keep finite-difference probes away from the ReLU kinks).
    std::vector<std::vector<double>> forward_preactivations(std::span<const double> x) const;

    // Weighted mean loss over a batch; row_weights empty = all ones.
    double loss(const Matrix& x, std::span<const double> y, std::span<const double> row_weights) const;

    // Analytic gradient of loss(); dropout_masks (per hidden layer, batch x
    // width, entries 0 or 1/(1-rate)) scale hidden activations when given.
    double loss_and_grad(const Matrix& x, std::span<const double> y, std::span<const double> row_weights,
                         const std::vector<Matrix>* dropout_masks, MlpNetwork& grad) const;
};

class TrainedMlp final : public Predictor {
  public:
    TrainedMlp(MlpConfig config, MlpNetwork net, std::vector<double> mean, std::vector<double> sd,
               std::vector<std::pair<double, double>> log)
        : config_(std::move(config)), net_(std::move(net)), mean_(std::move(mean)), sd_(std::move(sd)),
          training_log_(std::move(log)) {}

    std::size_t input_dim() const override { return net_.input_dim(); }
    double predict(std::span<const double> row) const override;
    bool is_classifier() const override { return config_.task != MlpTask::regression; }
    std::vector<double> predict_class_distribution(std::span<const double> row) const override;

    const MlpConfig& config() const { return config_; }
    const MlpNetwork& network() const { return net_; }
    const std::vector<double>& input_mean() const { return mean_; }
    const std::vector<double>& input_sd() const { return sd_; }
    const std::vector<std::pair<double, double>>& training_log() const { return training_log_; }

    void save(const std::string& path) const;
    static TrainedMlp load(const std::string& path);

  private:
    std::vector<double> standardized(std::span<const double> row) const;

    MlpConfig config_;
    MlpNetwork net_;
    std::vector<double> mean_;
    std::vector<double> sd_;
    std::vector<std::pair<double, double>> training_log_;  // (train, validation) loss per epoch
};

TrainedMlp train_mlp(const Dataset& dataset, const MlpConfig& config);

double sigmoid(double z);
std::vector<double> softmax(std::span<const double> logits);

}  // namespace pdfool
