#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pdfool/common.hpp"

namespace pdfool {

enum class FeatureKind { continuous, discrete, categorical };

std::string feature_kind_name(FeatureKind kind);
FeatureKind feature_kind_from_name(const std::string& name);

struct FeatureSchema {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    std::vector<std::string> categories;  // categorical only, order defines the index encoding
};

void validate_schema(const std::vector<FeatureSchema>& schema);

// Tabular dataset. Categorical cells hold the category index; all types are
// immutable after construction by convention.
struct Dataset {
    std::vector<FeatureSchema> schema;
    Matrix rows;  // n x p
    std::vector<double> target;
    std::vector<double> weights;  // optional, empty when absent
    std::string target_name = "y";

    std::size_t n() const { return rows.rows; }
    std::size_t p() const { return rows.cols; }
    std::size_t feature_index(const std::string& name) const;
    std::vector<double> column(std::size_t j) const;
    void validate() const;
};

Dataset subset_rows(const Dataset& ds, const std::vector<std::size_t>& keep);

struct FoldSplit {
    std::size_t k = 0;
    std::vector<std::size_t> fold_of;  // row -> fold index in [0, k)

    std::vector<std::size_t> train_rows(std::size_t fold) const;
    std::vector<std::size_t> test_rows(std::size_t fold) const;
};

struct SimulationConfig {
    std::size_t n_rows = 100000;
    std::size_t n_features = 6;
    double pairwise_correlation = 0.3;
    double noise_sd = 0.5;
    std::vector<double> coefficients;  // empty -> ones with a trailing zero
    std::uint64_t seed = 1;

    std::vector<double> resolved_coefficients() const;
};

Dataset load_csv(const std::string& path, const std::vector<FeatureSchema>& schema, const std::string& target_column);
void save_csv(const Dataset& ds, const std::string& path);

// Schema file: one feature per line, "name kind [cat1,cat2,...]".
std::vector<FeatureSchema> load_schema_file(const std::string& path);
void save_schema_file(const std::vector<FeatureSchema>& schema, const std::string& path);

FoldSplit kfold_split(const Dataset& ds, std::size_t k, std::uint64_t seed);

Dataset simulate_correlated_gaussian(const SimulationConfig& config);
std::string simulation_metadata(const SimulationConfig& config);

struct SpearmanResult {
    std::vector<std::string> features;
    Matrix corr;
};

// Rank correlation matrix over the included features. Categorical features
// must come with an ordinal ordering of their categories or be excluded.
SpearmanResult spearman_correlation_matrix(const Dataset& ds,
                                           const std::map<std::string, std::vector<std::string>>& ordinal_maps = {},
                                           const std::set<std::string>& exclude = {});

// Average ranks (ties averaged) and the plain two-vector rank correlation.
std::vector<double> average_ranks(std::span<const double> values);
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace pdfool
