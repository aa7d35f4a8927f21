#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pdfool/data.hpp"
#include "pdfool/mlp.hpp"

namespace pdfool_tests {

// Deterministic predictor defined by a plain function of the row.
class LambdaPredictor final : public pdfool::Predictor {
  public:
    LambdaPredictor(std::size_t dim, std::function<double(std::span<const double>)> fn)
        : dim_(dim), fn_(std::move(fn)) {}
    std::size_t input_dim() const override { return dim_; }
    double predict(std::span<const double> row) const override { return fn_(row); }

  private:
    std::size_t dim_;
    std::function<double(std::span<const double>)> fn_;
};

// Binary "classifier" whose class-1 probability is a plain function.
class LambdaBinary final : public pdfool::Predictor {
  public:
    LambdaBinary(std::size_t dim, std::function<double(std::span<const double>)> prob)
        : dim_(dim), prob_(std::move(prob)) {}
    std::size_t input_dim() const override { return dim_; }
    bool is_classifier() const override { return true; }
    double predict(std::span<const double> row) const override { return prob_(row); }
    std::vector<double> predict_class_distribution(std::span<const double> row) const override {
        const double p = prob_(row);
        return {1.0 - p, p};
    }

  private:
    std::size_t dim_;
    std::function<double(std::span<const double>)> prob_;
};

// Multiclass stub returning a fixed-size distribution from a function.
class LambdaMulticlass final : public pdfool::Predictor {
  public:
    LambdaMulticlass(std::size_t dim, std::size_t classes,
                     std::function<std::size_t(std::span<const double>)> pick)
        : dim_(dim), classes_(classes), pick_(std::move(pick)) {}
    std::size_t input_dim() const override { return dim_; }
    bool is_classifier() const override { return true; }
    double predict(std::span<const double> row) const override { return static_cast<double>(pick_(row)); }
    std::vector<double> predict_class_distribution(std::span<const double> row) const override {
        std::vector<double> probs(classes_, 0.0);
        probs[pick_(row)] = 1.0;
        return probs;
    }

  private:
    std::size_t dim_;
    std::size_t classes_;
    std::function<std::size_t(std::span<const double>)> pick_;
};

inline pdfool::Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                                    std::vector<double> target = {}) {
    pdfool::Dataset ds;
    const std::size_t p = rows.front().size();
    for (std::size_t j = 0; j < p; ++j)
        ds.schema.push_back({"x" + std::to_string(j + 1), pdfool::FeatureKind::continuous, {}});
    ds.rows = pdfool::Matrix(rows.size(), p);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < p; ++j) ds.rows.at(i, j) = rows[i][j];
    ds.target = target.empty() ? std::vector<double>(rows.size(), 0.0) : std::move(target);
    return ds;
}

inline std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "pdfool_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace pdfool_tests
