#include "pdfool/explain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace pdfool {

namespace {

std::vector<double> sorted_unique(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
}

double pfi_loss_value(PfiLoss loss, std::span<const double> preds, std::span<const double> target) {
    double total = 0.0;
    const std::size_t n = preds.size();
    for (std::size_t i = 0; i < n; ++i) {
        switch (loss) {
            case PfiLoss::mse: {
                const double e = preds[i] - target[i];
                total += e * e;
                break;
            }
            case PfiLoss::cross_entropy: {
                const double p = std::clamp(preds[i], 1e-12, 1.0 - 1e-12);
                total += -(target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p));
                break;
            }
        }
    }
    return total / static_cast<double>(n);
}

}  // namespace

double quantile_type7(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw NumericError("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double h = prob * static_cast<double>(sorted.size() - 1);
    const double lo = std::floor(h);
    const std::size_t i = static_cast<std::size_t>(lo);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + (h - lo) * (sorted[i + 1] - sorted[i]);
}

GridSpec select_grid(const Dataset& ds, const std::string& feature, GridSource policy, std::size_t quantile_count) {
    const std::size_t j = ds.feature_index(feature);
    const auto& kind = ds.schema[j].kind;
    GridSpec spec;
    spec.feature = feature;
    spec.source = policy;
    switch (policy) {
        case GridSource::all_unique:
            spec.values = sorted_unique(ds.column(j));
            break;
        case GridSource::quantile: {
            if (kind != FeatureKind::continuous)
                throw DataError("select_grid: quantile policy requires a continuous feature ('" + feature + "')");
            if (quantile_count < 1) throw DataError("select_grid: quantile count must be positive");
            spec.quantile_count = quantile_count;
            const auto observed = sorted_unique(ds.column(j));
            std::vector<double> values;
            for (std::size_t q = 0; q < quantile_count; ++q) {
                const double prob = (static_cast<double>(q) + 0.5) / static_cast<double>(quantile_count);
                const double raw = quantile_type7(observed, prob);
                // Snap to the nearest observed value (ties to the lower one).
                auto it = std::lower_bound(observed.begin(), observed.end(), raw);
                double snapped;
                if (it == observed.begin())
                    snapped = *it;
                else if (it == observed.end())
                    snapped = observed.back();
                else
                    snapped = (raw - *(it - 1) <= *it - raw) ? *(it - 1) : *it;
                values.push_back(snapped);
            }
            spec.values = sorted_unique(std::move(values));
            break;
        }
        case GridSource::explicit_values:
            throw DataError("select_grid: use explicit_grid for explicit values");
    }
    if (spec.values.empty()) throw DataError("select_grid: empty grid for '" + feature + "'");
    return spec;
}

GridSpec grid_for(const Dataset& ds, const std::string& feature, GridPolicy policy, std::size_t quantiles) {
    const auto kind = ds.schema[ds.feature_index(feature)].kind;
    switch (policy) {
        case GridPolicy::all_unique: return select_grid(ds, feature, GridSource::all_unique);
        case GridPolicy::quantile: return select_grid(ds, feature, GridSource::quantile, quantiles);
        case GridPolicy::automatic:
            return kind == FeatureKind::continuous ? select_grid(ds, feature, GridSource::quantile, quantiles)
                                                   : select_grid(ds, feature, GridSource::all_unique);
    }
    throw ConfigError("unknown grid policy");
}

GridSpec explicit_grid(const Dataset& ds, const std::string& feature, std::vector<double> values) {
    const std::size_t j = ds.feature_index(feature);
    if (values.empty()) throw DataError("explicit_grid: empty value list");
    GridSpec spec;
    spec.feature = feature;
    spec.source = GridSource::explicit_values;
    if (ds.schema[j].kind == FeatureKind::categorical) {
        const double m = static_cast<double>(ds.schema[j].categories.size());
        for (double v : values)
            if (v != std::floor(v) || v < 0.0 || v >= m)
                throw DataError("explicit_grid: invalid category index for '" + feature + "'");
        std::sort(values.begin(), values.end());
        if (std::adjacent_find(values.begin(), values.end()) != values.end())
            throw DataError("explicit_grid: duplicate grid values");
    } else {
        for (double v : values)
            if (!std::isfinite(v)) throw DataError("explicit_grid: non-finite grid value");
        std::sort(values.begin(), values.end());
        if (std::adjacent_find(values.begin(), values.end()) != values.end())
            throw DataError("explicit_grid: duplicate grid values");
    }
    spec.values = std::move(values);
    return spec;
}

void PermutedPdData::materialize_block(std::size_t grid_idx, Matrix& out) const {
    const std::size_t n = source->n();
    const std::size_t p = source->p();
    if (out.rows != n || out.cols != p) out = Matrix(n, p);
    std::copy(source->rows.values.begin(), source->rows.values.end(), out.values.begin());
    const double v = grid.values.at(grid_idx);
    for (std::size_t i = 0; i < n; ++i) out.at(i, feature_idx) = v;
}

PermutedPdData build_permuted_pd_data(const Dataset& ds, const GridSpec& grid) {
    PermutedPdData permuted;
    permuted.source = &ds;
    permuted.feature_idx = ds.feature_index(grid.feature);
    permuted.grid = grid;
    return permuted;
}

std::string curve_kind_name(CurveKind kind) {
    switch (kind) {
        case CurveKind::original: return "original";
        case CurveKind::adversarial: return "adversarial";
        case CurveKind::target: return "target";
        case CurveKind::conditional_rho: return "conditional_rho";
    }
    throw DataError("unknown curve kind");
}

PdCurve compute_pd(const Predictor& model, const PermutedPdData& permuted) {
    PdCurve curve;
    curve.feature = permuted.grid.feature;
    curve.grid = permuted.grid.values;
    curve.kind = CurveKind::original;
    const std::size_t n = permuted.block_rows();
    Matrix block;
    for (std::size_t g = 0; g < permuted.grid_size(); ++g) {
        permuted.materialize_block(g, block);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double pred = model.predict(block.row(i));
            if (!std::isfinite(pred))
                throw NumericError("compute_pd: non-finite prediction at grid point " + std::to_string(g) + ", row " +
                                   std::to_string(i));
            sum += pred;
        }
        curve.values.push_back(sum / static_cast<double>(n));
    }
    return curve;
}

IceBundle compute_ice(const Predictor& model, const PermutedPdData& permuted) {
    IceBundle bundle;
    bundle.feature = permuted.grid.feature;
    bundle.grid = permuted.grid.values;
    const std::size_t n = permuted.block_rows();
    const std::size_t m = permuted.grid_size();
    bundle.curves = Matrix(n, m);
    Matrix block;
    for (std::size_t g = 0; g < m; ++g) {
        permuted.materialize_block(g, block);
        for (std::size_t i = 0; i < n; ++i) {
            const double pred = model.predict(block.row(i));
            if (!std::isfinite(pred))
                throw NumericError("compute_ice: non-finite prediction at grid point " + std::to_string(g) + ", row " +
                                   std::to_string(i));
            bundle.curves.at(i, g) = pred;
        }
    }
    return bundle;
}

PdCurve IceBundle::pd() const {
    PdCurve out;
    out.feature = feature;
    out.grid = grid;
    out.kind = CurveKind::original;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double sum = 0.0;
        for (std::size_t i = 0; i < curves.rows; ++i) sum += curves.at(i, g);
        out.values.push_back(sum / static_cast<double>(curves.rows));
    }
    return out;
}

PfiResult compute_pfi(const Predictor& model, const Dataset& ds, PfiLoss loss, std::size_t repeats,
                      std::uint64_t seed) {
    if (repeats < 1) throw DataError("compute_pfi: repeats must be at least 1");
    const std::size_t n = ds.n();
    const std::size_t p = ds.p();

    const auto baseline_preds = predict_batch(model, ds.rows);
    const double baseline = pfi_loss_value(loss, baseline_preds, ds.target);

    PfiResult result;
    for (const auto& f : ds.schema) result.features.push_back(f.name);
    result.importance = Matrix(repeats, p);

    Matrix shuffled = ds.rows;
    std::vector<std::size_t> perm(n);
    for (std::size_t r = 0; r < repeats; ++r) {
        for (std::size_t j = 0; j < p; ++j) {
            // The permutation depends only on (seed, repeat, column), so the
            // importance of a feature is unaffected by the other columns.
            Rng rng(derive_seed(seed, "pfi/" + std::to_string(r) + "/" + std::to_string(j)));
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(perm);
            for (std::size_t i = 0; i < n; ++i) shuffled.at(i, j) = ds.rows.at(perm[i], j);
            const auto preds = predict_batch(model, shuffled);
            result.importance.at(r, j) = pfi_loss_value(loss, preds, ds.target) - baseline;
            for (std::size_t i = 0; i < n; ++i) shuffled.at(i, j) = ds.rows.at(i, j);
        }
    }

    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> column(repeats);
        for (std::size_t r = 0; r < repeats; ++r) column[r] = result.importance.at(r, j);
        std::sort(column.begin(), column.end());
        PfiResult::Summary s;
        s.p10 = quantile_type7(column, 0.10);
        s.median = quantile_type7(column, 0.50);
        s.p90 = quantile_type7(column, 0.90);
        result.summary.push_back(s);
    }
    return result;
}

CurveSeries to_series(const PdCurve& curve, const std::string& series_label) {
    return {curve.feature, series_label, curve.grid, curve.values};
}

void write_curves_csv(const std::string& path, const std::vector<CurveSeries>& series) {
    std::ostringstream out;
    out << "feature,grid_value,series,value\n";
    for (const auto& s : series) {
        if (s.grid.size() != s.values.size()) throw DataError("curve series '" + s.series + "': length mismatch");
        for (std::size_t g = 0; g < s.grid.size(); ++g)
            out << s.feature << ',' << format_double(s.grid[g]) << ',' << s.series << ','
                << format_double(s.values[g]) << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<CurveSeries> read_curves_csv(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty curves file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "feature,grid_value,series,value")
        throw DataError(path + ": line 1: expected header 'feature,grid_value,series,value'");

    std::vector<CurveSeries> series;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) fields.push_back(cell);
        if (fields.size() != 4) throw DataError(path + ": line " + std::to_string(line_no) + ": expected 4 fields");
        double grid_value, value;
        try {
            grid_value = parse_double(fields[1]);
            value = parse_double(fields[3]);
        } catch (const DataError& e) {
            throw DataError(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
        const auto key = std::make_pair(fields[0], fields[2]);
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, series.size());
            series.push_back({fields[0], fields[2], {}, {}});
            it = index.find(key);
        }
        series[it->second].grid.push_back(grid_value);
        series[it->second].values.push_back(value);
    }
    return series;
}

void write_ice_csv(const std::string& path, const IceBundle& bundle) {
    std::ostringstream out;
    out << "feature,grid_value,series,value\n";
    for (std::size_t i = 0; i < bundle.curves.rows; ++i)
        for (std::size_t g = 0; g < bundle.grid.size(); ++g)
            out << bundle.feature << ',' << format_double(bundle.grid[g]) << ",ice_" << i << ','
                << format_double(bundle.curves.at(i, g)) << '\n';
    write_text_file(path, out.str());
}

void write_pfi_csv(const std::string& path, const PfiResult& pfi) {
    std::ostringstream out;
    out << "feature,repeat,importance\n";
    for (std::size_t j = 0; j < pfi.features.size(); ++j)
        for (std::size_t r = 0; r < pfi.importance.rows; ++r)
            out << pfi.features[j] << ',' << r << ',' << format_double(pfi.importance.at(r, j)) << '\n';
    write_text_file(path, out.str());
}

}  // namespace pdfool
