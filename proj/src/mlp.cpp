#include "pdfool/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pdfool {

namespace {

constexpr std::size_t kBatchSize = 128;
// Validation improvements below this relative margin count as a plateau for
// the learning-rate schedule and early stopping.
constexpr double kPlateauRelTolerance = 1e-3;

double relu(double z) { return z > 0.0 ? z : 0.0; }

struct HeadTerms {
    double loss;                  // unweighted per-row loss
    std::vector<double> d_logit;  // d loss / d output pre-activation (unweighted)
};

HeadTerms head_terms(MlpTask task, std::span<const double> logits, double y) {
    HeadTerms t;
    t.d_logit.resize(logits.size());
    switch (task) {
        case MlpTask::regression: {
            const double e = logits[0] - y;
            t.loss = e * e;
            t.d_logit[0] = 2.0 * e;
            break;
        }
        case MlpTask::binary: {
            const double z = logits[0];
            // Stable logistic cross-entropy.
            t.loss = std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
            t.d_logit[0] = sigmoid(z) - y;
            break;
        }
        case MlpTask::multiclass: {
            const auto probs = softmax(logits);
            const std::size_t label = static_cast<std::size_t>(y);
            double zmax = logits[0];
            for (double z : logits) zmax = std::max(zmax, z);
            double sum = 0.0;
            for (double z : logits) sum += std::exp(z - zmax);
            t.loss = zmax + std::log(sum) - logits[label];
            for (std::size_t c = 0; c < logits.size(); ++c) t.d_logit[c] = probs[c] - (c == label ? 1.0 : 0.0);
            break;
        }
    }
    return t;
}

std::size_t class_count(const MlpConfig& config) {
    switch (config.task) {
        case MlpTask::regression: return 0;
        case MlpTask::binary: return 2;
        case MlpTask::multiclass: return config.layer_widths.back();
    }
    return 0;
}

void validate_config(const MlpConfig& config, std::size_t input_dim) {
    if (config.layer_widths.empty()) throw ConfigError("mlp: layer_widths must not be empty");
    for (std::size_t w : config.layer_widths)
        if (w == 0) throw ConfigError("mlp: zero-width layer");
    const std::size_t out = config.layer_widths.back();
    if (config.task == MlpTask::multiclass) {
        if (out < 2) throw ConfigError("mlp: multiclass needs an output width of at least 2");
    } else if (out != 1) {
        throw ConfigError("mlp: regression and binary tasks need an output width of 1");
    }
    if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0) throw ConfigError("mlp: dropout_rate must be in [0, 1)");
    if (config.learn_rate <= 0.0) throw ConfigError("mlp: learn_rate must be positive");
    if (config.max_epochs < 1) throw ConfigError("mlp: max_epochs must be at least 1");
    if (config.validation_fraction <= 0.0 || config.validation_fraction >= 1.0)
        throw ConfigError("mlp: validation_fraction must be in (0, 1)");
    if (!config.class_weights.empty()) {
        if (config.task == MlpTask::regression) throw ConfigError("mlp: class_weights are invalid for regression");
        if (config.class_weights.size() != class_count(config))
            throw ConfigError("mlp: class_weights length must match the class count");
        for (double w : config.class_weights)
            if (!(w > 0.0)) throw ConfigError("mlp: class_weights must be positive");
    }
    if (input_dim == 0) throw ConfigError("mlp: empty input");
}

void check_targets(const Dataset& dataset, const MlpConfig& config) {
    switch (config.task) {
        case MlpTask::regression:
            for (double y : dataset.target)
                if (!std::isfinite(y)) throw DataError("mlp: non-finite regression target");
            return;
        case MlpTask::binary:
            for (double y : dataset.target)
                if (y != 0.0 && y != 1.0) throw DataError("mlp: binary task needs targets in {0, 1}");
            return;
        case MlpTask::multiclass: {
            const double k = static_cast<double>(config.layer_widths.back());
            for (double y : dataset.target)
                if (y != std::floor(y) || y < 0.0 || y >= k)
                    throw DataError("mlp: multiclass targets must be class indices in [0, k)");
            return;
        }
    }
}

}  // namespace

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    double zmax = logits[0];
    for (double z : logits) zmax = std::max(zmax, z);
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
        out[c] = std::exp(logits[c] - zmax);
        sum += out[c];
    }
    for (auto& v : out) v /= sum;
    return out;
}

std::vector<double> Predictor::predict_class_distribution(std::span<const double>) const {
    throw DataError("predict_class_distribution is only available on classifiers");
}

std::vector<double> predict_batch(const Predictor& model, const Matrix& rows) {
    if (rows.rows > 0 && rows.cols != model.input_dim())
        throw DataError("predict_batch: row width does not match the model input dimension");
    std::vector<double> out(rows.rows);
    for (std::size_t i = 0; i < rows.rows; ++i) out[i] = model.predict(rows.row(i));
    return out;
}

std::string mlp_task_name(MlpTask task) {
    switch (task) {
        case MlpTask::regression: return "regression";
        case MlpTask::binary: return "binary";
        case MlpTask::multiclass: return "multiclass";
    }
    throw ConfigError("unknown task");
}

MlpTask mlp_task_from_name(const std::string& name) {
    if (name == "regression") return MlpTask::regression;
    if (name == "binary") return MlpTask::binary;
    if (name == "multiclass") return MlpTask::multiclass;
    throw ConfigError("unknown task: '" + name + "'");
}

MlpNetwork MlpNetwork::init(std::size_t input_dim, const std::vector<std::size_t>& widths, MlpTask task, Rng& rng) {
    MlpNetwork net;
    net.task = task;
    std::size_t fan_in = input_dim;
    for (std::size_t w : widths) {
        Matrix layer(w, fan_in);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + w));
        for (auto& v : layer.values) v = (2.0 * rng.uniform01() - 1.0) * bound;
        net.weights.push_back(std::move(layer));
        net.biases.emplace_back(w, 0.0);
        fan_in = w;
    }
    return net;
}

MlpNetwork MlpNetwork::zeros_like(const MlpNetwork& shape) {
    MlpNetwork net;
    net.task = shape.task;
    for (std::size_t l = 0; l < shape.weights.size(); ++l) {
        net.weights.emplace_back(shape.weights[l].rows, shape.weights[l].cols, 0.0);
        net.biases.emplace_back(shape.biases[l].size(), 0.0);
    }
    return net;
}

std::size_t MlpNetwork::param_count() const {
    std::size_t total = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) total += weights[l].values.size() + biases[l].size();
    return total;
}

double MlpNetwork::get_param(std::size_t flat) const {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (flat < weights[l].values.size()) return weights[l].values[flat];
        flat -= weights[l].values.size();
        if (flat < biases[l].size()) return biases[l][flat];
        flat -= biases[l].size();
    }
    throw NumericError("parameter index out of range");
}

void MlpNetwork::set_param(std::size_t flat, double value) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (flat < weights[l].values.size()) {
            weights[l].values[flat] = value;
            return;
        }
        flat -= weights[l].values.size();
        if (flat < biases[l].size()) {
            biases[l][flat] = value;
            return;
        }
        flat -= biases[l].size();
    }
    throw NumericError("parameter index out of range");
}

std::vector<double> MlpNetwork::forward(std::span<const double> x) const {
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> z;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const Matrix& w = weights[l];
        z.assign(w.rows, 0.0);
        for (std::size_t u = 0; u < w.rows; ++u) {
            double s = biases[l][u];
            const double* wr = w.values.data() + u * w.cols;
            for (std::size_t k = 0; k < w.cols; ++k) s += wr[k] * a[k];
            z[u] = s;
        }
        if (l + 1 < weights.size())
            for (auto& v : z) v = relu(v);
        a = z;
    }
    return a;
}

std::vector<std::vector<double>> MlpNetwork::forward_preactivations(std::span<const double> x) const {
    std::vector<std::vector<double>> pre(weights.size());
    std::vector<double> a(x.begin(), x.end());
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const Matrix& w = weights[l];
        pre[l].assign(w.rows, 0.0);
        for (std::size_t u = 0; u < w.rows; ++u) {
            double s = biases[l][u];
            const double* wr = w.values.data() + u * w.cols;
            for (std::size_t k = 0; k < w.cols; ++k) s += wr[k] * a[k];
            pre[l][u] = s;
        }
        a = pre[l];
        if (l + 1 < weights.size())
            for (auto& v : a) v = relu(v);
    }
    return pre;
}

double MlpNetwork::loss(const Matrix& x, std::span<const double> y, std::span<const double> row_weights) const {
    double total = 0.0;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto logits = forward(x.row(i));
        const double w = row_weights.empty() ? 1.0 : row_weights[i];
        total += w * head_terms(task, logits, y[i]).loss;
        weight_sum += w;
    }
    if (weight_sum <= 0.0) throw NumericError("loss: non-positive weight sum");
    return total / weight_sum;
}

double MlpNetwork::loss_and_grad(const Matrix& x, std::span<const double> y, std::span<const double> row_weights,
                                 const std::vector<Matrix>* dropout_masks, MlpNetwork& grad) const {
    const std::size_t layers = weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        std::fill(grad.weights[l].values.begin(), grad.weights[l].values.end(), 0.0);
        std::fill(grad.biases[l].begin(), grad.biases[l].end(), 0.0);
    }
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) weight_sum += row_weights.empty() ? 1.0 : row_weights[i];
    if (weight_sum <= 0.0) throw NumericError("loss_and_grad: non-positive weight sum");

    double total = 0.0;
    std::vector<std::vector<double>> acts(layers + 1);  // acts[0] = input, acts[l+1] = post-activation of layer l
    std::vector<std::vector<double>> delta(layers);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto row = x.row(i);
        acts[0].assign(row.begin(), row.end());
        for (std::size_t l = 0; l < layers; ++l) {
            const Matrix& w = weights[l];
            auto& out = acts[l + 1];
            out.assign(w.rows, 0.0);
            const auto& in = acts[l];
            for (std::size_t u = 0; u < w.rows; ++u) {
                double s = biases[l][u];
                const double* wr = w.values.data() + u * w.cols;
                for (std::size_t k = 0; k < w.cols; ++k) s += wr[k] * in[k];
                out[u] = s;
            }
            if (l + 1 < layers) {
                for (auto& v : out) v = relu(v);
                if (dropout_masks)
                    for (std::size_t u = 0; u < out.size(); ++u) out[u] *= (*dropout_masks)[l].at(i, u);
            }
        }

        const double w_row = (row_weights.empty() ? 1.0 : row_weights[i]) / weight_sum;
        const auto terms = head_terms(task, acts[layers], y[i]);
        total += w_row * terms.loss;

        delta[layers - 1] = terms.d_logit;
        for (auto& v : delta[layers - 1]) v *= w_row;
        for (std::size_t l = layers; l-- > 0;) {
            const Matrix& w = weights[l];
            const auto& in = acts[l];
            auto& d = delta[l];
            for (std::size_t u = 0; u < w.rows; ++u) {
                const double du = d[u];
                if (du == 0.0) continue;
                double* gw = grad.weights[l].values.data() + u * w.cols;
                for (std::size_t k = 0; k < w.cols; ++k) gw[k] += du * in[k];
                grad.biases[l][u] += du;
            }
            if (l == 0) break;
            auto& dprev = delta[l - 1];
            dprev.assign(w.cols, 0.0);
            for (std::size_t u = 0; u < w.rows; ++u) {
                const double du = d[u];
                if (du == 0.0) continue;
                const double* wr = w.values.data() + u * w.cols;
                for (std::size_t k = 0; k < w.cols; ++k) dprev[k] += wr[k] * du;
            }
            // Through the dropout mask and the ReLU of layer l-1.
            for (std::size_t k = 0; k < w.cols; ++k) {
                if (dropout_masks) dprev[k] *= (*dropout_masks)[l - 1].at(i, k);
                if (acts[l][k] <= 0.0) dprev[k] = 0.0;
            }
        }
    }
    return total;
}

std::vector<double> TrainedMlp::standardized(std::span<const double> row) const {
    if (row.size() != mean_.size()) throw DataError("predict: row width does not match the model input dimension");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean_[j]) / sd_[j];
    return out;
}

double TrainedMlp::predict(std::span<const double> row) const {
    const auto logits = net_.forward(standardized(row));
    switch (config_.task) {
        case MlpTask::regression: return logits[0];
        case MlpTask::binary: return sigmoid(logits[0]);
        case MlpTask::multiclass: {
            std::size_t best = 0;
            for (std::size_t c = 1; c < logits.size(); ++c)
                if (logits[c] > logits[best]) best = c;
            return static_cast<double>(best);
        }
    }
    throw NumericError("unreachable");
}

std::vector<double> TrainedMlp::predict_class_distribution(std::span<const double> row) const {
    const auto logits = net_.forward(standardized(row));
    switch (config_.task) {
        case MlpTask::binary: {
            const double p = sigmoid(logits[0]);
            return {1.0 - p, p};
        }
        case MlpTask::multiclass: return softmax(logits);
        case MlpTask::regression: break;
    }
    throw DataError("predict_class_distribution is only available on classifiers");
}

TrainedMlp train_mlp(const Dataset& dataset, const MlpConfig& config) {
    dataset.validate();
    validate_config(config, dataset.p());
    check_targets(dataset, config);
    const std::size_t n = dataset.n();
    const std::size_t p = dataset.p();
    if (n < 20) throw DataError("train_mlp: need at least 20 rows");

    // Standardization over the full training fold; constant features get sd 1.
    std::vector<double> mean(p, 0.0), sd(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += dataset.rows.at(i, j);
        m /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = dataset.rows.at(i, j) - m;
            var += d * d;
        }
        var /= static_cast<double>(n);
        mean[j] = m;
        sd[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    Rng rng(derive_seed(config.seed, "train_mlp"));
    MlpNetwork net = MlpNetwork::init(p, config.layer_widths, config.task, rng);

    // Validation split carved deterministically from the tail of a shuffle.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::size_t n_valid = static_cast<std::size_t>(config.validation_fraction * static_cast<double>(n));
    n_valid = std::clamp<std::size_t>(n_valid, 1, n - 1);
    const std::size_t n_train = n - n_valid;
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> valid_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

    auto standardize_rows = [&](const std::vector<std::size_t>& idx) {
        Matrix out(idx.size(), p);
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < p; ++j) out.at(i, j) = (dataset.rows.at(idx[i], j) - mean[j]) / sd[j];
        return out;
    };
    auto row_weight = [&](double y) {
        if (config.class_weights.empty()) return 1.0;
        return config.class_weights[static_cast<std::size_t>(y)];
    };

    const Matrix valid_x = standardize_rows(valid_idx);
    std::vector<double> valid_y(n_valid), valid_w(n_valid);
    for (std::size_t i = 0; i < n_valid; ++i) {
        valid_y[i] = dataset.target[valid_idx[i]];
        valid_w[i] = row_weight(valid_y[i]);
    }

    MlpNetwork grad = MlpNetwork::zeros_like(net);
    MlpNetwork velocity = MlpNetwork::zeros_like(net);
    MlpNetwork best = net;
    double best_valid = std::numeric_limits<double>::infinity();
    double best_significant = std::numeric_limits<double>::infinity();
    double lr = config.learn_rate;
    constexpr double kMomentum = 0.9;
    std::size_t plateau = 0;
    std::vector<std::pair<double, double>> log;

    const std::size_t hidden_layers = config.layer_widths.size() - 1;
    std::vector<Matrix> masks(hidden_layers);
    const bool use_dropout = config.dropout_rate > 0.0;
    const double keep = 1.0 - config.dropout_rate;

    Matrix batch_x;
    std::vector<double> batch_y, batch_w;
    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        rng.shuffle(train_idx);
        double train_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n_train; start += kBatchSize) {
            const std::size_t count = std::min(kBatchSize, n_train - start);
            batch_x = Matrix(count, p);
            batch_y.resize(count);
            batch_w.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = train_idx[start + i];
                for (std::size_t j = 0; j < p; ++j) batch_x.at(i, j) = (dataset.rows.at(src, j) - mean[j]) / sd[j];
                batch_y[i] = dataset.target[src];
                batch_w[i] = row_weight(batch_y[i]);
            }
            if (use_dropout) {
                for (std::size_t l = 0; l < hidden_layers; ++l) {
                    masks[l] = Matrix(count, config.layer_widths[l]);
                    for (auto& v : masks[l].values) v = rng.uniform01() >= config.dropout_rate ? 1.0 / keep : 0.0;
                }
            }
            const double batch_loss =
                net.loss_and_grad(batch_x, batch_y, batch_w, use_dropout ? &masks : nullptr, grad);
            if (!std::isfinite(batch_loss))
                throw NumericError("train_mlp: loss diverged at epoch " + std::to_string(epoch));
            train_loss += batch_loss;
            ++batches;
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                for (std::size_t t = 0; t < net.weights[l].values.size(); ++t) {
                    velocity.weights[l].values[t] = kMomentum * velocity.weights[l].values[t] - lr * grad.weights[l].values[t];
                    net.weights[l].values[t] += velocity.weights[l].values[t];
                }
                for (std::size_t t = 0; t < net.biases[l].size(); ++t) {
                    velocity.biases[l][t] = kMomentum * velocity.biases[l][t] - lr * grad.biases[l][t];
                    net.biases[l][t] += velocity.biases[l][t];
                }
            }
        }
        train_loss /= static_cast<double>(batches);
        const double valid_loss = net.loss(valid_x, valid_y, valid_w);
        if (!std::isfinite(valid_loss))
            throw NumericError("train_mlp: validation loss diverged at epoch " + std::to_string(epoch));
        log.emplace_back(train_loss, valid_loss);

        if (valid_loss < best_valid) {
            best_valid = valid_loss;
            best = net;
        }
        if (valid_loss < best_significant * (1.0 - kPlateauRelTolerance)) {
            best_significant = valid_loss;
            plateau = 0;
        } else {
            ++plateau;
            if (plateau >= config.early_stop_patience) break;
            if (plateau % 2 == 0) lr *= 0.5;  // step decay on validation plateau
        }
    }

    return TrainedMlp(config, std::move(best), std::move(mean), std::move(sd), std::move(log));
}

void TrainedMlp::save(const std::string& path) const {
    std::ostringstream out;
    out << "pdfool-mlp 1\n";
    out << "task " << mlp_task_name(config_.task) << '\n';
    out << "widths";
    for (std::size_t w : config_.layer_widths) out << ' ' << w;
    out << '\n';
    out << "input " << input_dim() << '\n';
    out << "mean";
    for (double v : mean_) out << ' ' << format_double(v);
    out << "\nsd";
    for (double v : sd_) out << ' ' << format_double(v);
    out << '\n';
    for (std::size_t l = 0; l < net_.weights.size(); ++l) {
        const Matrix& w = net_.weights[l];
        out << "layer " << l << ' ' << w.rows << ' ' << w.cols << '\n';
        for (std::size_t u = 0; u < w.rows; ++u) {
            for (std::size_t k = 0; k < w.cols; ++k) {
                if (k) out << ' ';
                out << format_double(w.at(u, k));
            }
            out << '\n';
        }
        out << "bias";
        for (double v : net_.biases[l]) out << ' ' << format_double(v);
        out << '\n';
    }
    write_text_file(path, out.str());
}

TrainedMlp TrainedMlp::load(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string word;
    int version = 0;
    in >> word >> version;
    if (word != "pdfool-mlp" || version != 1) throw DataError("not a pdfool model file: " + path);

    MlpConfig config;
    in >> word;
    if (word != "task") throw DataError("model file: expected 'task'");
    in >> word;
    config.task = mlp_task_from_name(word);
    in >> word;
    if (word != "widths") throw DataError("model file: expected 'widths'");
    {
        std::string rest;
        std::getline(in, rest);
        std::istringstream ws(rest);
        std::size_t w;
        while (ws >> w) config.layer_widths.push_back(w);
    }
    std::size_t input = 0;
    in >> word >> input;
    if (word != "input") throw DataError("model file: expected 'input'");

    auto read_vector = [&](const std::string& tag, std::size_t count) {
        in >> word;
        if (word != tag) throw DataError("model file: expected '" + tag + "'");
        std::vector<double> v(count);
        std::string tok;
        for (auto& x : v) {
            in >> tok;
            x = parse_double(tok);
        }
        return v;
    };
    const auto mean = read_vector("mean", input);
    const auto sd = read_vector("sd", input);

    MlpNetwork net;
    net.task = config.task;
    for (std::size_t l = 0; l < config.layer_widths.size(); ++l) {
        std::size_t idx = 0, rows = 0, cols = 0;
        in >> word >> idx >> rows >> cols;
        if (word != "layer" || idx != l) throw DataError("model file: expected layer " + std::to_string(l));
        Matrix w(rows, cols);
        std::string tok;
        for (auto& v : w.values) {
            in >> tok;
            v = parse_double(tok);
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(read_vector("bias", rows));
    }
    if (!in) throw DataError("model file: truncated: " + path);
    return TrainedMlp(std::move(config), std::move(net), std::move(mean), std::move(sd), {});
}

}  // namespace pdfool
