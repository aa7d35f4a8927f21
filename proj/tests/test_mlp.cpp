#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pdfool/data.hpp"
#include "pdfool/mlp.hpp"

using namespace pdfool;

namespace {

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "pdfool_mlp_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

// Central finite differences against the analytic gradient, all parameters.
// The batch is redrawn until every hidden pre-activation clears the ReLU kink
// by a margin the 1e-4 probes cannot cross.
void gradient_check(MlpTask task, const std::vector<std::size_t>& widths, std::vector<double> row_weights) {
    const std::size_t batch = 10;
    const std::size_t input = 4;
    MlpNetwork net;
    Matrix x(batch, input);
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed(42 + attempt, "gradcheck/" + mlp_task_name(task)));
        net = MlpNetwork::init(input, widths, task, rng);
        for (auto& v : x.values) v = rng.normal();
        double margin = 1e9;
        for (std::size_t i = 0; i < batch; ++i) {
            const auto pre = net.forward_preactivations(x.row(i));
            for (std::size_t l = 0; l + 1 < pre.size(); ++l)
                for (double z : pre[l]) margin = std::min(margin, std::abs(z));
        }
        if (margin > 5e-3) break;
        REQUIRE(attempt < 64);
    }
    Rng label_rng(derive_seed(43, "gradcheck-labels/" + mlp_task_name(task)));
    std::vector<double> y(batch);
    for (auto& v : y) {
        switch (task) {
            case MlpTask::regression: v = label_rng.normal(); break;
            case MlpTask::binary: v = label_rng.uniform01() < 0.5 ? 0.0 : 1.0; break;
            case MlpTask::multiclass: v = static_cast<double>(label_rng.index(widths.back())); break;
        }
    }

    MlpNetwork grad = MlpNetwork::zeros_like(net);
    net.loss_and_grad(x, y, row_weights, nullptr, grad);

    const double step = 1e-4;
    for (std::size_t t = 0; t < net.param_count(); ++t) {
        const double saved = net.get_param(t);
        net.set_param(t, saved + step);
        const double up = net.loss(x, y, row_weights);
        net.set_param(t, saved - step);
        const double down = net.loss(x, y, row_weights);
        net.set_param(t, saved);
        const double numeric = (up - down) / (2.0 * step);
        const double analytic = grad.get_param(t);
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        CHECK(std::abs(numeric - analytic) / scale < 1e-3);
    }
}

Dataset linear_dataset(std::size_t n, std::uint64_t seed) {
    // y = 2 * x1, exactly realizable by a single linear layer.
    Rng rng(seed);
    Dataset ds;
    ds.schema = {{"x1", FeatureKind::continuous, {}}};
    ds.rows = Matrix(n, 1);
    ds.target.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.rows.at(i, 0) = rng.normal();
        ds.target[i] = 2.0 * ds.rows.at(i, 0);
    }
    return ds;
}

Dataset xor_dataset() {
    // The 4-point XOR truth table replicated; only a nonlinear model fits it.
    Dataset ds;
    ds.schema = {{"a", FeatureKind::discrete, {}}, {"b", FeatureKind::discrete, {}}};
    const std::size_t copies = 40;
    ds.rows = Matrix(4 * copies, 2);
    ds.target.resize(4 * copies);
    const double table[4][3] = {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
    for (std::size_t i = 0; i < 4 * copies; ++i) {
        ds.rows.at(i, 0) = table[i % 4][0];
        ds.rows.at(i, 1) = table[i % 4][1];
        ds.target[i] = table[i % 4][2];
    }
    return ds;
}

}  // namespace

TEST_CASE("gradient check: regression, binary, multiclass heads") {
    gradient_check(MlpTask::regression, {5, 3, 1}, {});
    gradient_check(MlpTask::binary, {5, 3, 1}, {});
    gradient_check(MlpTask::multiclass, {5, 4, 3}, {});
    // Weighted rows exercise the class-weight path of the loss.
    gradient_check(MlpTask::binary, {6, 1}, {2, 1, 1, 5, 1, 1, 3, 1, 1, 2});
}

TEST_CASE("training is bitwise deterministic given the seed") {
    const Dataset ds = linear_dataset(200, 8);
    MlpConfig config;
    config.layer_widths = {8, 1};
    config.max_epochs = 12;
    config.seed = 31;
    config.dropout_rate = 0.1;
    const TrainedMlp a = train_mlp(ds, config);
    const TrainedMlp b = train_mlp(ds, config);
    REQUIRE(a.network().weights.size() == b.network().weights.size());
    for (std::size_t l = 0; l < a.network().weights.size(); ++l) {
        CHECK(a.network().weights[l].values == b.network().weights[l].values);
        CHECK(a.network().biases[l] == b.network().biases[l]);
    }
}

TEST_CASE("dropout is inactive at inference") {
    const Dataset ds = linear_dataset(120, 9);
    MlpConfig config;
    config.layer_widths = {16, 1};
    config.dropout_rate = 0.4;
    config.max_epochs = 10;
    config.seed = 3;
    const TrainedMlp model = train_mlp(ds, config);
    const std::vector<double> row = {0.37};
    CHECK(model.predict(row) == model.predict(row));
    const auto batch = predict_batch(model, ds.rows);
    const auto batch2 = predict_batch(model, ds.rows);
    CHECK(batch == batch2);
}

TEST_CASE("softmax distributions sum to one") {
    Rng rng(77);
    MlpNetwork net = MlpNetwork::init(5, {7, 4}, MlpTask::multiclass, rng);
    std::vector<double> row(5);
    for (int trial = 0; trial < 1000; ++trial) {
        for (auto& v : row) v = rng.normal() * 3.0;
        const auto probs = softmax(net.forward(row));
        double sum = 0.0;
        for (double p : probs) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("single linear layer recovers y = 2 x1") {
    const Dataset train = linear_dataset(400, 12);
    const Dataset held = linear_dataset(50, 13);
    MlpConfig config;
    config.layer_widths = {1};  // no hidden layer: pure linear fit
    config.learn_rate = 0.02;
    config.max_epochs = 200;
    config.early_stop_patience = 30;
    config.seed = 2;
    const TrainedMlp model = train_mlp(train, config);
    for (std::size_t i = 0; i < held.n(); ++i)
        CHECK(std::abs(model.predict(held.rows.row(i)) - 2.0 * held.rows.at(i, 0)) < 0.05);
}

TEST_CASE("XOR pattern is fit by a hidden layer") {
    const Dataset ds = xor_dataset();
    MlpConfig config;
    config.layer_widths = {8, 1};
    config.task = MlpTask::binary;
    config.learn_rate = 0.2;
    config.max_epochs = 400;
    config.early_stop_patience = 100;
    config.seed = 6;
    const TrainedMlp model = train_mlp(ds, config);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.n(); ++i)
        correct += (model.predict(ds.rows.row(i)) >= 0.5) == (ds.target[i] == 1.0);
    CHECK(static_cast<double>(correct) / static_cast<double>(ds.n()) > 0.95);
}

TEST_CASE("class weights shift the decision behavior") {
    // Imbalanced two-cluster data: 90% class 1 near +1, 10% class 0 near -1,
    // with overlap so the unweighted fit favors class 1.
    Rng rng(55);
    Dataset ds;
    ds.schema = {{"x", FeatureKind::continuous, {}}};
    const std::size_t n = 600;
    ds.rows = Matrix(n, 1);
    ds.target.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool one = i % 10 != 0;
        ds.rows.at(i, 0) = (one ? 1.0 : -1.0) + 1.5 * rng.normal();
        ds.target[i] = one ? 1.0 : 0.0;
    }
    MlpConfig config;
    config.layer_widths = {8, 1};
    config.task = MlpTask::binary;
    config.max_epochs = 60;
    config.early_stop_patience = 10;
    config.seed = 10;
    const TrainedMlp plain = train_mlp(ds, config);
    config.class_weights = {30.0, 1.0};
    const TrainedMlp weighted = train_mlp(ds, config);

    std::size_t plain_zero = 0, weighted_zero = 0;
    for (std::size_t i = 0; i < n; ++i) {
        plain_zero += plain.predict(ds.rows.row(i)) < 0.5;
        weighted_zero += weighted.predict(ds.rows.row(i)) < 0.5;
    }
    CHECK(weighted_zero > plain_zero);
}

TEST_CASE("predict_batch contract") {
    const Dataset ds = linear_dataset(60, 3);
    MlpConfig config;
    config.layer_widths = {4, 1};
    config.max_epochs = 5;
    config.seed = 1;
    const TrainedMlp model = train_mlp(ds, config);

    CHECK(predict_batch(model, Matrix(0, 1)).empty());

    Matrix repeated(3, 1);
    for (int i = 0; i < 3; ++i) repeated.at(i, 0) = 0.7;
    const auto reps = predict_batch(model, repeated);
    CHECK(reps[0] == reps[1]);
    CHECK(reps[1] == reps[2]);

    const auto batch = predict_batch(model, ds.rows);
    for (std::size_t i = 0; i < ds.n(); ++i) CHECK(batch[i] == model.predict(ds.rows.row(i)));

    CHECK_THROWS_AS(predict_batch(model, Matrix(2, 3)), DataError);
}

TEST_CASE("target/task mismatches and config errors") {
    Dataset ds = linear_dataset(50, 4);
    MlpConfig config;
    config.layer_widths = {4, 1};
    config.task = MlpTask::binary;
    CHECK_THROWS_AS(train_mlp(ds, config), DataError);  // targets are not {0,1}

    config.task = MlpTask::regression;
    config.class_weights = {1.0, 2.0};
    CHECK_THROWS_AS(train_mlp(ds, config), ConfigError);

    config.class_weights = {};
    config.layer_widths = {4, 2};
    CHECK_THROWS_AS(train_mlp(ds, config), ConfigError);  // regression needs output width 1

    config.layer_widths = {4, 1};
    config.validation_fraction = 1.5;
    CHECK_THROWS_AS(train_mlp(ds, config), ConfigError);
}

TEST_CASE("divergence raises a numeric error naming the epoch") {
    Dataset ds = linear_dataset(100, 5);
    for (auto& v : ds.target) v *= 1e6;
    MlpConfig config;
    config.layer_widths = {8, 1};
    config.learn_rate = 1e9;
    config.max_epochs = 30;
    config.seed = 1;
    CHECK_THROWS_WITH_AS(train_mlp(ds, config), doctest::Contains("epoch"), NumericError);
}

TEST_CASE("model serialization round-trips predictions bit for bit") {
    SimulationConfig sim;
    sim.n_rows = 300;
    sim.n_features = 3;
    sim.coefficients = {1, -1, 0.5};
    sim.seed = 19;
    const Dataset ds = simulate_correlated_gaussian(sim);

    MlpConfig config;
    config.layer_widths = {10, 6, 1};
    config.max_epochs = 20;
    config.seed = 23;
    const TrainedMlp model = train_mlp(ds, config);
    const std::string path = temp_path("model.txt");
    model.save(path);
    const TrainedMlp back = TrainedMlp::load(path);
    for (std::size_t i = 0; i < ds.n(); ++i) CHECK(back.predict(ds.rows.row(i)) == model.predict(ds.rows.row(i)));

    // Binary head round-trip, distribution included.
    Dataset db = ds;
    for (std::size_t i = 0; i < db.n(); ++i) db.target[i] = db.rows.at(i, 0) > 0 ? 1 : 0;
    MlpConfig cb = config;
    cb.task = MlpTask::binary;
    const TrainedMlp mb = train_mlp(db, cb);
    mb.save(path);
    const TrainedMlp mb_back = TrainedMlp::load(path);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(mb_back.predict(db.rows.row(i)) == mb.predict(db.rows.row(i)));
        CHECK(mb_back.predict_class_distribution(db.rows.row(i)) == mb.predict_class_distribution(db.rows.row(i)));
    }
}

TEST_CASE("constant features standardize to zero signal") {
    Dataset ds = linear_dataset(80, 6);
    ds.schema.push_back({"const", FeatureKind::continuous, {}});
    Matrix rows(80, 2);
    for (std::size_t i = 0; i < 80; ++i) {
        rows.at(i, 0) = ds.rows.at(i, 0);
        rows.at(i, 1) = 5.0;
    }
    ds.rows = rows;
    MlpConfig config;
    config.layer_widths = {4, 1};
    config.max_epochs = 10;
    config.seed = 2;
    const TrainedMlp model = train_mlp(ds, config);
    CHECK(model.input_sd()[1] == 1.0);
    CHECK(model.input_mean()[1] == 5.0);
    // Constant column standardizes to zero, so its value cannot matter.
    CHECK(model.predict(std::vector<double>{0.3, 5.0}) == model.predict(std::vector<double>{0.3, 5.0}));
}
