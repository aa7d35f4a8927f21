#include "pdfool/attack.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

namespace pdfool {

namespace {

std::vector<std::vector<double>> unique_value_pools(const Dataset& ds) {
    std::vector<std::vector<double>> pools(ds.p());
    for (std::size_t j = 0; j < ds.p(); ++j) {
        if (ds.schema[j].kind == FeatureKind::categorical) {
            pools[j].resize(ds.schema[j].categories.size());
            for (std::size_t c = 0; c < pools[j].size(); ++c) pools[j][c] = static_cast<double>(c);
        } else {
            auto column = ds.column(j);
            std::sort(column.begin(), column.end());
            column.erase(std::unique(column.begin(), column.end()), column.end());
            pools[j] = std::move(column);
        }
    }
    return pools;
}

}  // namespace

std::size_t default_augmenting_multiplier(std::size_t n) { return n >= 50000 ? 30 : 100; }

AugmentingSample generate_augmenting_sample(const Dataset& ds, std::size_t multiplier, std::uint64_t seed) {
    ds.validate();
    if (multiplier < 1) throw DataError("generate_augmenting_sample: multiplier must be at least 1");
    const auto pools = unique_value_pools(ds);
    const std::size_t n_aug = multiplier * ds.n();

    AugmentingSample sample;
    sample.multiplier = multiplier;
    sample.seed = seed;
    sample.rows = Matrix(n_aug, ds.p());
    Rng rng(derive_seed(seed, "augmenting"));
    for (std::size_t i = 0; i < n_aug; ++i)
        for (std::size_t j = 0; j < ds.p(); ++j) sample.rows.at(i, j) = pools[j][rng.index(pools[j].size())];
    return sample;
}

ExtrapolationClassifier train_extrapolation_classifier(const Dataset& ds, const AugmentingSample& augmenting,
                                                       const MlpConfig& learner_config, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw ConfigError("train_extrapolation_classifier: threshold must be in (0, 1)");
    if (augmenting.rows.cols != ds.p())
        throw DataError("train_extrapolation_classifier: augmenting sample width mismatch");

    Dataset combined;
    combined.schema = ds.schema;
    combined.target_name = "is_extrapolation";
    const std::size_t total = ds.n() + augmenting.rows.rows;
    combined.rows = Matrix(total, ds.p());
    std::copy(ds.rows.values.begin(), ds.rows.values.end(), combined.rows.values.begin());
    std::copy(augmenting.rows.values.begin(), augmenting.rows.values.end(),
              combined.rows.values.begin() + static_cast<std::ptrdiff_t>(ds.rows.values.size()));
    combined.target.assign(total, 1.0);
    std::fill(combined.target.begin(), combined.target.begin() + static_cast<std::ptrdiff_t>(ds.n()), 0.0);

    MlpConfig config = learner_config;
    config.task = MlpTask::binary;
    auto model = std::make_shared<TrainedMlp>(train_mlp(combined, config));
    return ExtrapolationClassifier{std::move(model), threshold};
}

TargetPd target_flat(const GridSpec& grid, double level) {
    if (!std::isfinite(level)) throw DataError("target_flat: non-finite level");
    return {grid.feature, grid.values, std::vector<double>(grid.values.size(), level)};
}

TargetPd target_linear(const GridSpec& grid, double slope, double intercept) {
    if (!std::isfinite(slope) || !std::isfinite(intercept)) throw DataError("target_linear: non-finite parameters");
    TargetPd t{grid.feature, grid.values, {}};
    for (double v : grid.values) t.desired.push_back(slope * v + intercept);
    return t;
}

TargetPd target_explicit(const GridSpec& grid, std::vector<double> values) {
    if (values.size() != grid.values.size()) throw DataError("target_explicit: value count must match the grid");
    for (double v : values)
        if (!std::isfinite(v)) throw DataError("target_explicit: non-finite target value");
    return {grid.feature, grid.values, std::move(values)};
}

TargetPd resolve_target(const TargetSpec& spec, const GridSpec& grid, double mean_prediction) {
    switch (spec.kind) {
        case TargetSpec::Kind::flat: return target_flat(grid, spec.level);
        case TargetSpec::Kind::flat_at_mean: return target_flat(grid, mean_prediction);
        case TargetSpec::Kind::linear: return target_linear(grid, spec.slope, spec.intercept);
        case TargetSpec::Kind::linear_at_mean: return target_linear(grid, spec.slope, mean_prediction);
        case TargetSpec::Kind::explicit_values: return target_explicit(grid, spec.values);
    }
    throw ConfigError("unknown target kind");
}

std::vector<LambdaRho> estimate_lambda_rho(const PermutedPdData& permuted, const ExtrapolationClassifier& c,
                                           const Predictor& f) {
    const std::size_t n = permuted.block_rows();
    std::vector<LambdaRho> out;
    out.reserve(permuted.grid_size());
    Matrix block;
    for (std::size_t g = 0; g < permuted.grid_size(); ++g) {
        permuted.materialize_block(g, block);
        std::size_t flagged = 0;
        double kept_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = block.row(i);
            if (c.classify(row) == 1)
                ++flagged;
            else
                kept_sum += f.predict(row);
        }
        LambdaRho lr;
        lr.lambda = static_cast<double>(flagged) / static_cast<double>(n);
        if (flagged == n) {
            lr.rho = 0.0;  // unused: multiplied by (1 - lambda) = 0 downstream
            lr.rho_defined = false;
        } else {
            lr.rho = kept_sum / static_cast<double>(n - flagged);
        }
        out.push_back(lr);
    }
    return out;
}

FeatureCompensation solve_gamma(const TargetPd& target, const std::vector<LambdaRho>& lambda_rho, FeatureKind kind) {
    if (lambda_rho.size() != target.grid.size()) throw DataError("solve_gamma: lambda/rho count must match the grid");
    FeatureCompensation comp;
    comp.feature = target.feature;
    comp.kind = kind;
    for (std::size_t g = 0; g < target.grid.size(); ++g) {
        const auto& lr = lambda_rho[g];
        if (lr.lambda <= 0.0)
            throw NumericError("unreachable target: no permuted row at grid value " + format_double(target.grid[g]) +
                               " of feature '" + target.feature + "' is classified as extrapolation");
        CompensationEntry entry;
        entry.grid_value = target.grid[g];
        entry.lambda = lr.lambda;
        entry.rho = lr.rho;
        entry.gamma = (target.desired[g] - (1.0 - lr.lambda) * lr.rho) / lr.lambda;
        if (!std::isfinite(entry.gamma))
            throw NumericError("solve_gamma: non-finite compensation at grid value " + format_double(target.grid[g]));
        comp.entries.push_back(entry);
    }
    return comp;
}

double FeatureCompensation::gamma_at(double x) const {
    if (entries.empty()) throw DataError("compensation table for '" + feature + "' is empty");
    if (kind == FeatureKind::categorical) {
        for (const auto& e : entries)
            if (e.grid_value == x) return e.gamma;
        throw DataError("category index " + format_double(x) + " is outside the compensation grid of '" + feature +
                        "'");
    }
    if (x <= entries.front().grid_value) return entries.front().gamma;
    if (x >= entries.back().grid_value) return entries.back().gamma;
    // First entry with grid_value >= x; linear interpolation in between.
    std::size_t hi = 1;
    while (entries[hi].grid_value < x) ++hi;
    const auto& a = entries[hi - 1];
    const auto& b = entries[hi];
    if (b.grid_value == a.grid_value) return a.gamma;
    const double t = (x - a.grid_value) / (b.grid_value - a.grid_value);
    return a.gamma + t * (b.gamma - a.gamma);
}

bool CompensationTable::has(const std::string& feature) const {
    for (const auto& f : features)
        if (f.feature == feature) return true;
    return false;
}

const FeatureCompensation& CompensationTable::for_feature(const std::string& feature) const {
    for (const auto& f : features)
        if (f.feature == feature) return f;
    throw DataError("no compensation entries for feature '" + feature + "'");
}

std::size_t AllocatorClassifier::allocate(std::span<const double> row) const {
    const auto probs = model->predict_class_distribution(row);
    if (probs.size() != num_targets + 1) throw DataError("allocator: class count mismatch");
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c)
        if (probs[c] > probs[best]) best = c;
    return best;
}

AllocatorClassifier train_allocator(const Dataset& ds, const std::vector<PermutedPdData>& permuted_sets,
                                    const ExtrapolationClassifier& c, const MlpConfig& learner_config) {
    const std::size_t q = permuted_sets.size();
    if (q < 2) throw ConfigError("train_allocator: need at least 2 targeted features");

    // Real rows labeled q (the base class); flagged permuted rows labeled by
    // the feature whose permutation produced them.
    std::vector<double> cells(ds.rows.values.begin(), ds.rows.values.end());
    std::vector<double> labels(ds.n(), static_cast<double>(q));
    Matrix block;
    for (std::size_t t = 0; t < q; ++t) {
        const auto& permuted = permuted_sets[t];
        std::size_t flagged = 0;
        for (std::size_t g = 0; g < permuted.grid_size(); ++g) {
            permuted.materialize_block(g, block);
            for (std::size_t i = 0; i < block.rows; ++i) {
                const auto row = block.row(i);
                if (c.classify(row) == 0) continue;
                cells.insert(cells.end(), row.begin(), row.end());
                labels.push_back(static_cast<double>(t));
                ++flagged;
            }
        }
        if (flagged == 0)
            throw NumericError("train_allocator: no permuted row of feature '" + permuted.grid.feature +
                               "' is classified as extrapolation; the feature cannot be manipulated");
    }

    Dataset training;
    training.schema = ds.schema;
    training.target_name = "allocation";
    training.rows.rows = labels.size();
    training.rows.cols = ds.p();
    training.rows.values = std::move(cells);
    training.target = std::move(labels);

    MlpConfig config = learner_config;
    config.task = MlpTask::multiclass;
    if (config.layer_widths.empty() || config.layer_widths.back() != q + 1)
        throw ConfigError("train_allocator: output width must be q + 1");
    auto model = std::make_shared<TrainedMlp>(train_mlp(training, config));
    return AllocatorClassifier{std::move(model), q};
}

AdversarialModel::AdversarialModel(std::shared_ptr<const Predictor> original, ExtrapolationClassifier extrapolation,
                                   std::optional<AllocatorClassifier> allocator, CompensationTable compensation,
                                   std::vector<std::string> targeted, std::vector<std::size_t> targeted_idx)
    : original_(std::move(original)), extrapolation_(std::move(extrapolation)), allocator_(std::move(allocator)),
      compensation_(std::move(compensation)), targeted_(std::move(targeted)), targeted_idx_(std::move(targeted_idx)) {
    if (!original_ || !extrapolation_.model) throw ConfigError("adversarial model: missing component");
    if (targeted_.empty() || targeted_.size() != targeted_idx_.size())
        throw ConfigError("adversarial model: bad targeted feature list");
    if (allocator_ && allocator_->num_targets != targeted_.size())
        throw ConfigError("adversarial model: allocator class count mismatch");
    for (const auto& f : targeted_)
        if (!compensation_.has(f)) throw ConfigError("adversarial model: compensation missing for '" + f + "'");
}

Route AdversarialModel::route(std::span<const double> row) const {
    if (extrapolation_.classify(row) == 0) return {RouteKind::original, 0};
    if (!allocator_) return {RouteKind::compensated, 0};
    const std::size_t slot = allocator_->allocate(row);
    if (slot == allocator_->num_targets) return {RouteKind::allocator_no, 0};
    return {RouteKind::compensated, slot};
}

double AdversarialModel::predict(std::span<const double> row) const {
    const Route r = route(row);
    if (r.kind != RouteKind::compensated) return original_->predict(row);
    const auto& comp = compensation_.for_feature(targeted_[r.target_slot]);
    return comp.gamma_at(row[targeted_idx_[r.target_slot]]);
}

AdversarialModel build_adversarial_single(std::shared_ptr<const Predictor> f, ExtrapolationClassifier c,
                                          CompensationTable comp, const std::string& feature, const Dataset& ds) {
    const std::size_t idx = ds.feature_index(feature);
    return AdversarialModel(std::move(f), std::move(c), std::nullopt, std::move(comp), {feature}, {idx});
}

AdversarialModel build_adversarial_multi(std::shared_ptr<const Predictor> f, ExtrapolationClassifier c,
                                         AllocatorClassifier allocator, CompensationTable comp,
                                         std::vector<std::string> targeted, const Dataset& ds) {
    std::vector<std::size_t> idx;
    for (const auto& name : targeted) idx.push_back(ds.feature_index(name));
    return AdversarialModel(std::move(f), std::move(c), std::move(allocator), std::move(comp), std::move(targeted),
                            std::move(idx));
}

std::vector<double> adversarial_predict_batch(const AdversarialModel& a, const Matrix& rows) {
    return predict_batch(a, rows);
}

void save_adversarial(const AdversarialModel& a, const std::string& manifest_path, const std::string& original_file,
                      const std::string& classifier_file, const std::string& allocator_file) {
    std::ostringstream out;
    out << "pdfool-attack 1\n";
    out << "threshold " << format_double(a.extrapolation().threshold) << '\n';
    out << "original " << original_file << '\n';
    out << "classifier " << classifier_file << '\n';
    out << "allocator " << (a.allocator() ? allocator_file : std::string("none")) << '\n';
    out << "targets " << a.targeted_features().size() << '\n';
    for (std::size_t t = 0; t < a.targeted_features().size(); ++t) {
        const auto& comp = a.compensation().for_feature(a.targeted_features()[t]);
        out << "feature " << comp.feature << ' ' << a.targeted_indices()[t] << ' ' << feature_kind_name(comp.kind)
            << ' ' << comp.entries.size() << '\n';
        for (const auto& e : comp.entries)
            out << format_double(e.grid_value) << ' ' << format_double(e.lambda) << ' ' << format_double(e.rho) << ' '
                << format_double(e.gamma) << '\n';
    }
    write_text_file(manifest_path, out.str());
}

AdversarialModel load_adversarial(const std::string& manifest_path) {
    const auto dir = std::filesystem::path(manifest_path).parent_path();
    std::istringstream in(read_text_file(manifest_path));
    std::string word;
    int version = 0;
    in >> word >> version;
    if (word != "pdfool-attack" || version != 1) throw DataError("not an attack manifest: " + manifest_path);

    auto expect = [&](const std::string& tag) {
        in >> word;
        if (word != tag) throw DataError("attack manifest: expected '" + tag + "'");
    };
    expect("threshold");
    std::string token;
    in >> token;
    const double threshold = parse_double(token);
    expect("original");
    std::string original_file;
    in >> original_file;
    expect("classifier");
    std::string classifier_file;
    in >> classifier_file;
    expect("allocator");
    std::string allocator_file;
    in >> allocator_file;
    expect("targets");
    std::size_t q = 0;
    in >> q;
    if (q < 1) throw DataError("attack manifest: no targets");

    CompensationTable comp;
    std::vector<std::string> targeted;
    std::vector<std::size_t> targeted_idx;
    for (std::size_t t = 0; t < q; ++t) {
        expect("feature");
        FeatureCompensation fc;
        std::size_t idx = 0, count = 0;
        std::string kind;
        in >> fc.feature >> idx >> kind >> count;
        fc.kind = feature_kind_from_name(kind);
        for (std::size_t e = 0; e < count; ++e) {
            CompensationEntry entry;
            std::string g, l, r, gm;
            in >> g >> l >> r >> gm;
            entry.grid_value = parse_double(g);
            entry.lambda = parse_double(l);
            entry.rho = parse_double(r);
            entry.gamma = parse_double(gm);
            fc.entries.push_back(entry);
        }
        targeted.push_back(fc.feature);
        targeted_idx.push_back(idx);
        comp.features.push_back(std::move(fc));
    }
    if (!in) throw DataError("attack manifest: truncated: " + manifest_path);

    auto original = std::make_shared<TrainedMlp>(TrainedMlp::load((dir / original_file).string()));
    auto classifier = std::make_shared<TrainedMlp>(TrainedMlp::load((dir / classifier_file).string()));
    ExtrapolationClassifier c{std::move(classifier), threshold};
    std::optional<AllocatorClassifier> allocator;
    if (allocator_file != "none") {
        auto alloc_model = std::make_shared<TrainedMlp>(TrainedMlp::load((dir / allocator_file).string()));
        allocator = AllocatorClassifier{std::move(alloc_model), q};
    }
    return AdversarialModel(std::move(original), std::move(c), std::move(allocator), std::move(comp),
                            std::move(targeted), std::move(targeted_idx));
}

}  // namespace pdfool
