#pragma once

#include "pdfool/common.hpp"
#include "pdfool/data.hpp"
#include "pdfool/mlp.hpp"

namespace pdfool {

enum class GridSource { all_unique, quantile, explicit_values };

struct GridSpec {
    std::string feature;
    std::vector<double> values;
    GridSource source = GridSource::all_unique;
    std::size_t quantile_count = 0;
};

// all_unique: sorted unique observed values. quantile(q): q evenly spaced
// empirical quantiles (type 7, probabilities (i+0.5)/q), snapped to the
// nearest observed value and deduplicated, so no grid value extrapolates
// within the feature range.
GridSpec select_grid(const Dataset& ds, const std::string& feature, GridSource policy, std::size_t quantile_count = 20);
GridSpec explicit_grid(const Dataset& ds, const std::string& feature, std::vector<double> values);

// automatic: quantile grids for continuous features, all unique observed
// values for discrete and categorical ones.
enum class GridPolicy { automatic, all_unique, quantile };

GridSpec grid_for(const Dataset& ds, const std::string& feature, GridPolicy policy, std::size_t quantiles);

// The conceptual n x m permutation collection for one feature: at grid point
// p every source row has feature j overwritten by v_p. Materialized one grid
// block at a time.
struct PermutedPdData {
    const Dataset* source = nullptr;
    std::size_t feature_idx = 0;
    GridSpec grid;

    std::size_t block_rows() const { return source->n(); }
    std::size_t grid_size() const { return grid.values.size(); }
    std::size_t conceptual_rows() const { return block_rows() * grid_size(); }
    void materialize_block(std::size_t grid_idx, Matrix& out) const;
};

PermutedPdData build_permuted_pd_data(const Dataset& ds, const GridSpec& grid);

enum class CurveKind { original, adversarial, target, conditional_rho };
std::string curve_kind_name(CurveKind kind);

struct PdCurve {
    std::string feature;
    std::vector<double> grid;
    std::vector<double> values;
    CurveKind kind = CurveKind::original;
};

struct IceBundle {
    std::string feature;
    std::vector<double> grid;
    Matrix curves;  // n x m, row i = ICE curve of observation i

    // Column means in ascending row order; equals compute_pd bit for bit.
    PdCurve pd() const;
};

PdCurve compute_pd(const Predictor& model, const PermutedPdData& permuted);
IceBundle compute_ice(const Predictor& model, const PermutedPdData& permuted);

enum class PfiLoss { mse, cross_entropy };

struct PfiResult {
    std::vector<std::string> features;
    Matrix importance;  // repeats x p, loss(shuffled) - loss(baseline)
    struct Summary {
        double p10 = 0.0;
        double median = 0.0;
        double p90 = 0.0;
    };
    std::vector<Summary> summary;
};

PfiResult compute_pfi(const Predictor& model, const Dataset& ds, PfiLoss loss, std::size_t repeats, std::uint64_t seed);

// Type-7 quantile of a sorted sample.
double quantile_type7(std::span<const double> sorted, double prob);

// Curve CSV format: feature,grid_value,series,value.
struct CurveSeries {
    std::string feature;
    std::string series;
    std::vector<double> grid;
    std::vector<double> values;
};

CurveSeries to_series(const PdCurve& curve, const std::string& series_label);
void write_curves_csv(const std::string& path, const std::vector<CurveSeries>& series);
std::vector<CurveSeries> read_curves_csv(const std::string& path);
void write_ice_csv(const std::string& path, const IceBundle& bundle);
void write_pfi_csv(const std::string& path, const PfiResult& pfi);

}  // namespace pdfool
