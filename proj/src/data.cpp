#include "pdfool/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace pdfool {

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

// Lower Cholesky factor of a symmetric positive definite matrix.
Matrix cholesky_lower(const Matrix& a) {
    const std::size_t p = a.rows;
    Matrix l(p, p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a.at(i, j);
            for (std::size_t k = 0; k < j; ++k) sum -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (sum <= 0.0) throw NumericError("covariance matrix is not positive definite");
                l.at(i, i) = std::sqrt(sum);
            } else {
                l.at(i, j) = sum / l.at(j, j);
            }
        }
    }
    return l;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw NumericError("correlation undefined for a constant vector");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

std::string feature_kind_name(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::continuous: return "continuous";
        case FeatureKind::discrete: return "discrete";
        case FeatureKind::categorical: return "categorical";
    }
    throw DataError("unknown feature kind");
}

FeatureKind feature_kind_from_name(const std::string& name) {
    if (name == "continuous") return FeatureKind::continuous;
    if (name == "discrete") return FeatureKind::discrete;
    if (name == "categorical") return FeatureKind::categorical;
    throw DataError("unknown feature kind: '" + name + "'");
}

void validate_schema(const std::vector<FeatureSchema>& schema) {
    std::unordered_set<std::string> names;
    for (const auto& f : schema) {
        if (f.name.empty()) throw DataError("schema: empty feature name");
        if (!names.insert(f.name).second) throw DataError("schema: duplicate feature name '" + f.name + "'");
        if (f.kind == FeatureKind::categorical) {
            if (f.categories.empty()) throw DataError("schema: categorical feature '" + f.name + "' needs categories");
            std::unordered_set<std::string> cats;
            for (const auto& c : f.categories)
                if (!cats.insert(c).second) throw DataError("schema: duplicate category '" + c + "' in '" + f.name + "'");
        } else if (!f.categories.empty()) {
            throw DataError("schema: non-categorical feature '" + f.name + "' must not list categories");
        }
    }
}

std::size_t Dataset::feature_index(const std::string& name) const {
    for (std::size_t j = 0; j < schema.size(); ++j)
        if (schema[j].name == name) return j;
    throw DataError("unknown feature: '" + name + "'");
}

std::vector<double> Dataset::column(std::size_t j) const {
    std::vector<double> out(n());
    for (std::size_t i = 0; i < n(); ++i) out[i] = rows.at(i, j);
    return out;
}

void Dataset::validate() const {
    validate_schema(schema);
    if (n() < 1 || p() < 1) throw DataError("dataset must have at least one row and one feature");
    if (schema.size() != p()) throw DataError("schema length does not match column count");
    if (target.size() != n()) throw DataError("target length does not match row count");
    if (!weights.empty() && weights.size() != n()) throw DataError("weights length does not match row count");
    for (std::size_t j = 0; j < p(); ++j) {
        if (schema[j].kind != FeatureKind::categorical) continue;
        const double m = static_cast<double>(schema[j].categories.size());
        for (std::size_t i = 0; i < n(); ++i) {
            const double v = rows.at(i, j);
            if (v < 0.0 || v >= m || v != std::floor(v))
                throw DataError("row " + std::to_string(i) + ", column '" + schema[j].name +
                                "': invalid category index");
        }
    }
}

Dataset subset_rows(const Dataset& ds, const std::vector<std::size_t>& keep) {
    Dataset out;
    out.schema = ds.schema;
    out.target_name = ds.target_name;
    out.rows = Matrix(keep.size(), ds.p());
    out.target.resize(keep.size());
    if (!ds.weights.empty()) out.weights.resize(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const std::size_t src = keep[i];
        for (std::size_t j = 0; j < ds.p(); ++j) out.rows.at(i, j) = ds.rows.at(src, j);
        out.target[i] = ds.target[src];
        if (!ds.weights.empty()) out.weights[i] = ds.weights[src];
    }
    return out;
}

std::vector<std::size_t> FoldSplit::train_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] != fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldSplit::test_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold) out.push_back(i);
    return out;
}

std::vector<double> SimulationConfig::resolved_coefficients() const {
    if (!coefficients.empty()) return coefficients;
    std::vector<double> out(n_features, 1.0);
    if (!out.empty()) out.back() = 0.0;
    return out;
}

Dataset load_csv(const std::string& path, const std::vector<FeatureSchema>& schema, const std::string& target_column) {
    validate_schema(schema);
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError("empty file: " + path);
    const auto header = split_line(strip_cr(header_line), ',');

    std::unordered_map<std::string, std::size_t> col_of;
    for (std::size_t c = 0; c < header.size(); ++c) col_of[header[c]] = c;

    std::vector<std::size_t> feature_cols(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        auto it = col_of.find(schema[j].name);
        if (it == col_of.end()) throw DataError("missing column '" + schema[j].name + "' in " + path);
        feature_cols[j] = it->second;
    }
    auto tit = col_of.find(target_column);
    if (tit == col_of.end()) throw DataError("missing target column '" + target_column + "' in " + path);
    const std::size_t target_col = tit->second;

    // Category name -> index, per categorical feature.
    std::vector<std::unordered_map<std::string, double>> cat_index(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j)
        for (std::size_t c = 0; c < schema[j].categories.size(); ++c)
            cat_index[j][schema[j].categories[c]] = static_cast<double>(c);

    std::vector<double> cells;
    std::vector<double> target;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_line(line, ',');
        if (fields.size() != header.size())
            throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const std::string& cell = fields[feature_cols[j]];
            if (cell.empty())
                throw DataError("row " + std::to_string(row) + ", column '" + schema[j].name + "': missing value");
            if (schema[j].kind == FeatureKind::categorical) {
                auto it = cat_index[j].find(cell);
                if (it == cat_index[j].end())
                    throw DataError("row " + std::to_string(row) + ", column '" + schema[j].name +
                                    "': unknown category '" + cell + "'");
                cells.push_back(it->second);
            } else {
                try {
                    cells.push_back(parse_double(cell));
                } catch (const DataError&) {
                    throw DataError("row " + std::to_string(row) + ", column '" + schema[j].name +
                                    "': unparseable value '" + cell + "'");
                }
            }
        }
        const std::string& tcell = fields[target_col];
        if (tcell.empty()) throw DataError("row " + std::to_string(row) + ", column '" + target_column + "': missing value");
        try {
            target.push_back(parse_double(tcell));
        } catch (const DataError&) {
            throw DataError("row " + std::to_string(row) + ", column '" + target_column + "': unparseable value '" +
                            tcell + "'");
        }
        ++row;
    }
    if (row == 0) throw DataError("no data rows in " + path);

    Dataset ds;
    ds.schema = schema;
    ds.target_name = target_column;
    ds.rows.rows = row;
    ds.rows.cols = schema.size();
    ds.rows.values = std::move(cells);
    ds.target = std::move(target);
    ds.validate();
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ostringstream out;
    for (std::size_t j = 0; j < ds.p(); ++j) out << ds.schema[j].name << ',';
    out << ds.target_name << '\n';
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.p(); ++j) {
            const double v = ds.rows.at(i, j);
            if (ds.schema[j].kind == FeatureKind::categorical)
                out << ds.schema[j].categories[static_cast<std::size_t>(v)];
            else
                out << format_double(v);
            out << ',';
        }
        out << format_double(ds.target[i]) << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<FeatureSchema> load_schema_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file: " + path);
    std::vector<FeatureSchema> schema;
    std::string line;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        FeatureSchema f;
        std::string kind;
        ss >> f.name >> kind;
        if (f.name.empty() || kind.empty()) throw DataError("schema file: malformed line '" + line + "'");
        f.kind = feature_kind_from_name(kind);
        std::string cats;
        ss >> cats;
        if (!cats.empty()) f.categories = split_line(cats, ',');
        schema.push_back(std::move(f));
    }
    validate_schema(schema);
    return schema;
}

void save_schema_file(const std::vector<FeatureSchema>& schema, const std::string& path) {
    std::ostringstream out;
    for (const auto& f : schema) {
        out << f.name << ' ' << feature_kind_name(f.kind);
        if (!f.categories.empty()) {
            out << ' ';
            for (std::size_t c = 0; c < f.categories.size(); ++c) {
                if (c) out << ',';
                out << f.categories[c];
            }
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

FoldSplit kfold_split(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    const std::size_t n = ds.n();
    if (k < 2 || k > n) throw DataError("kfold_split: k must be in [2, n]");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "kfold"));
    rng.shuffle(order);

    FoldSplit split;
    split.k = k;
    split.fold_of.assign(n, 0);
    // First n % k folds take one extra row.
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) split.fold_of[order[pos++]] = f;
    }
    return split;
}

Dataset simulate_correlated_gaussian(const SimulationConfig& config) {
    const std::size_t n = config.n_rows;
    const std::size_t p = config.n_features;
    if (n < 1) throw DataError("simulate: n_rows must be positive");
    if (p < 1) throw DataError("simulate: n_features must be positive");
    const double rho = config.pairwise_correlation;
    if (rho <= -1.0 || rho >= 1.0) throw DataError("simulate: pairwise_correlation must be in (-1, 1)");
    if (p > 1 && rho <= -1.0 / static_cast<double>(p - 1))
        throw NumericError("simulate: implied covariance is not positive definite");
    if (config.noise_sd <= 0.0) throw DataError("simulate: noise_sd must be positive");
    const auto beta = config.resolved_coefficients();
    if (beta.size() != p) throw DataError("simulate: coefficient vector length must equal n_features");

    Matrix sigma(p, p, rho);
    for (std::size_t j = 0; j < p; ++j) sigma.at(j, j) = 1.0;
    const Matrix chol = cholesky_lower(sigma);

    Rng rng(derive_seed(config.seed, "simulate"));
    Dataset ds;
    ds.schema.resize(p);
    for (std::size_t j = 0; j < p; ++j) ds.schema[j] = {"x" + std::to_string(j + 1), FeatureKind::continuous, {}};
    ds.target_name = "y";
    ds.rows = Matrix(n, p);
    ds.target.resize(n);

    std::vector<double> z(p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) z[j] = rng.normal();
        double y = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            double x = 0.0;
            for (std::size_t k = 0; k <= j; ++k) x += chol.at(j, k) * z[k];
            ds.rows.at(i, j) = x;
            y += beta[j] * x;
        }
        ds.target[i] = y + config.noise_sd * rng.normal();
    }
    ds.validate();
    return ds;
}

std::string simulation_metadata(const SimulationConfig& config) {
    std::ostringstream out;
    out << "seed=" << config.seed << '\n';
    out << "n=" << config.n_rows << '\n';
    out << "features=" << config.n_features << '\n';
    out << "correlation=" << format_double(config.pairwise_correlation) << '\n';
    out << "noise_sd=" << format_double(config.noise_sd) << '\n';
    out << "coefficients=";
    const auto beta = config.resolved_coefficients();
    for (std::size_t j = 0; j < beta.size(); ++j) {
        if (j) out << ',';
        out << format_double(beta[j]);
    }
    out << '\n';
    return out.str();
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw DataError("spearman: need two equal-length vectors, n >= 2");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson(ra, rb);
}

SpearmanResult spearman_correlation_matrix(const Dataset& ds,
                                           const std::map<std::string, std::vector<std::string>>& ordinal_maps,
                                           const std::set<std::string>& exclude) {
    std::vector<std::size_t> cols;
    std::vector<std::vector<double>> ranked;
    SpearmanResult result;
    for (std::size_t j = 0; j < ds.p(); ++j) {
        const auto& f = ds.schema[j];
        if (exclude.count(f.name)) continue;
        std::vector<double> values = ds.column(j);
        if (f.kind == FeatureKind::categorical) {
            auto it = ordinal_maps.find(f.name);
            if (it == ordinal_maps.end())
                throw DataError("spearman: categorical feature '" + f.name + "' needs an ordinal map or exclusion");
            // Position in the ordinal ordering replaces the category index.
            std::map<std::string, double> pos;
            for (std::size_t c = 0; c < it->second.size(); ++c) pos[it->second[c]] = static_cast<double>(c);
            for (auto& v : values) {
                const auto& cat = f.categories.at(static_cast<std::size_t>(v));
                auto pit = pos.find(cat);
                if (pit == pos.end())
                    throw DataError("spearman: ordinal map for '" + f.name + "' misses category '" + cat + "'");
                v = pit->second;
            }
        }
        cols.push_back(j);
        ranked.push_back(average_ranks(values));
        result.features.push_back(f.name);
    }
    const std::size_t m = cols.size();
    if (m == 0) throw DataError("spearman: no features left after exclusion");
    result.corr = Matrix(m, m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        result.corr.at(a, a) = 1.0;
        for (std::size_t b = a + 1; b < m; ++b) {
            const double r = pearson(ranked[a], ranked[b]);
            result.corr.at(a, b) = r;
            result.corr.at(b, a) = r;
        }
    }
    return result;
}

}  // namespace pdfool
