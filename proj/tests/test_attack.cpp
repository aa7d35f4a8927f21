#include <doctest.h>

#include <cmath>
#include <memory>
#include <set>

#include "pdfool/attack.hpp"
#include "pdfool/metrics.hpp"
#include "support.hpp"

using namespace pdfool;
using namespace pdfool_tests;

namespace {

double sample_correlation(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

ExtrapolationClassifier stub_classifier(std::size_t dim, std::function<double(std::span<const double>)> prob,
                                        double threshold = 0.5) {
    return {std::make_shared<LambdaBinary>(dim, std::move(prob)), threshold};
}

}  // namespace

TEST_CASE("augmenting sample size and value pools") {
    Dataset ds = make_dataset({{1.0, 5.0}, {2.0, 5.0}, {3.0, 7.0}});
    const AugmentingSample sample = generate_augmenting_sample(ds, 30, 1);
    CHECK(sample.rows.rows == 90);

    const std::set<double> pool1 = {1.0, 2.0, 3.0};
    const std::set<double> pool2 = {5.0, 7.0};
    for (std::size_t i = 0; i < sample.rows.rows; ++i) {
        CHECK(pool1.count(sample.rows.at(i, 0)) == 1);
        CHECK(pool2.count(sample.rows.at(i, 1)) == 1);
    }

    const AugmentingSample again = generate_augmenting_sample(ds, 30, 1);
    CHECK(again.rows.values == sample.rows.values);
    CHECK_THROWS_AS(generate_augmenting_sample(ds, 0, 1), DataError);
}

TEST_CASE("augmenting sample: categorical cells draw from all schema categories") {
    Dataset ds;
    ds.schema = {{"color", FeatureKind::categorical, {"r", "g", "b"}}};
    ds.rows = Matrix(4, 1, 0.0);  // only category 0 observed
    ds.target = {0, 0, 0, 0};
    const AugmentingSample sample = generate_augmenting_sample(ds, 100, 2);
    std::set<double> seen(sample.rows.values.begin(), sample.rows.values.end());
    CHECK(seen == std::set<double>{0.0, 1.0, 2.0});
}

TEST_CASE("augmenting sample: single unique column is matched by a uniform draw") {
    // One column with 10 distinct values: frequencies must pass a chi-square
    // test against the uniform pool distribution (df 9, p = 0.01 cutoff 21.67).
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({static_cast<double>(i)});
    Dataset ds = make_dataset(rows);
    const AugmentingSample sample = generate_augmenting_sample(ds, 1000, 3);
    std::vector<double> counts(10, 0.0);
    for (double v : sample.rows.values) counts[static_cast<std::size_t>(v)] += 1.0;
    const double expected = static_cast<double>(sample.rows.rows) / 10.0;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 21.67);
}

TEST_CASE("augmenting sample decorrelates perfectly correlated columns") {
    Rng rng(8);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 500; ++i) {
        const double v = rng.normal();
        rows.push_back({v, 2.0 * v});
    }
    Dataset ds = make_dataset(rows);
    CHECK(std::abs(sample_correlation(ds.column(0), ds.column(1)) - 1.0) < 1e-12);

    const AugmentingSample sample = generate_augmenting_sample(ds, 20, 5);
    REQUIRE(sample.rows.rows == 10000);
    std::vector<double> a(sample.rows.rows), b(sample.rows.rows);
    for (std::size_t i = 0; i < sample.rows.rows; ++i) {
        a[i] = sample.rows.at(i, 0);
        b[i] = sample.rows.at(i, 1);
    }
    CHECK(std::abs(sample_correlation(a, b)) < 0.02);
}

TEST_CASE("default augmenting multiplier follows the dataset size") {
    CHECK(default_augmenting_multiplier(100000) == 30);
    CHECK(default_augmenting_multiplier(50000) == 30);
    CHECK(default_augmenting_multiplier(20000) == 100);
    CHECK(default_augmenting_multiplier(5836) == 100);
}

TEST_CASE("extrapolation classifier on identical classes stays near chance") {
    Rng rng(12);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 400; ++i) rows.push_back({rng.normal(), rng.normal()});
    Dataset ds = make_dataset(rows);
    // Identical copies of X serve as both classes: nothing separates them.
    AugmentingSample copies;
    copies.rows = ds.rows;
    copies.multiplier = 1;
    MlpConfig config;
    config.layer_widths = {8, 1};
    config.max_epochs = 25;
    config.early_stop_patience = 6;
    config.seed = 4;
    const ExtrapolationClassifier c = train_extrapolation_classifier(ds, copies, config, 0.5);

    Rng held_rng(13);
    std::size_t correct = 0;
    const std::size_t trials = 1000;
    for (std::size_t i = 0; i < trials; ++i) {
        const std::vector<double> row = {held_rng.normal(), held_rng.normal()};
        // Each held-out row appears once per class; exactly one copy matches.
        correct += c.classify(row) == 0;
        correct += c.classify(row) == 1;
    }
    const double accuracy = static_cast<double>(correct) / (2 * trials);
    CHECK(accuracy > 0.45);
    CHECK(accuracy < 0.55);
}

TEST_CASE("classifier threshold: ties resolve to extrapolation") {
    const auto c = stub_classifier(1, [](std::span<const double>) { return 0.5; }, 0.5);
    CHECK(c.classify(std::vector<double>{0.0}) == 1);
    const auto c2 = stub_classifier(1, [](std::span<const double>) { return 0.4999; }, 0.5);
    CHECK(c2.classify(std::vector<double>{0.0}) == 0);
    MlpConfig config;
    config.layer_widths = {4, 1};
    CHECK_THROWS_AS(train_extrapolation_classifier(make_dataset({{0.0}}), AugmentingSample{Matrix(1, 1), 1, 0},
                                                   config, 1.5),
                    ConfigError);
}

TEST_CASE("estimate_lambda_rho: stub classifiers") {
    Dataset ds = make_dataset({{1.0, 4.0}, {2.0, 5.0}, {3.0, 6.0}, {4.0, 7.0}});
    LambdaPredictor f(2, [](std::span<const double> r) { return r[1]; });
    const GridSpec grid = explicit_grid(ds, "x1", {10.0});
    const auto permuted = build_permuted_pd_data(ds, grid);

    // c always 0: lambda 0, rho equals the PD value.
    const auto none = estimate_lambda_rho(permuted, stub_classifier(2, [](auto) { return 0.0; }), f);
    CHECK(none[0].lambda == 0.0);
    CHECK(none[0].rho == doctest::Approx((4 + 5 + 6 + 7) / 4.0));
    CHECK(none[0].rho_defined);

    // c always 1: lambda 1, rho unused.
    const auto all = estimate_lambda_rho(permuted, stub_classifier(2, [](auto) { return 1.0; }), f);
    CHECK(all[0].lambda == 1.0);
    CHECK_FALSE(all[0].rho_defined);

    // c flags exactly the row with x2 == 4: lambda 1/4, rho = mean(5, 6, 7).
    const auto one = estimate_lambda_rho(
        permuted, stub_classifier(2, [](std::span<const double> r) { return r[1] == 4.0 ? 1.0 : 0.0; }), f);
    CHECK(one[0].lambda == doctest::Approx(0.25));
    CHECK(one[0].rho == doctest::Approx(6.0));
}

TEST_CASE("solve_gamma: hand-checked compensation") {
    TargetPd target{"x1", {0.0}, {0.5}};
    // lambda 1: gamma equals the target exactly.
    auto comp = solve_gamma(target, {{1.0, 0.0, false}}, FeatureKind::continuous);
    CHECK(comp.entries[0].gamma == 0.5);

    // target 0.5, lambda 0.4, rho 0.6: gamma = (0.5 - 0.6*0.6)/0.4 = 0.35.
    comp = solve_gamma(target, {{0.4, 0.6, true}}, FeatureKind::continuous);
    CHECK(comp.entries[0].gamma == doctest::Approx(0.35).epsilon(1e-12));

    // target equal to rho: gamma = rho for any positive lambda.
    TargetPd already{"x1", {0.0}, {0.6}};
    comp = solve_gamma(already, {{0.7, 0.6, true}}, FeatureKind::continuous);
    CHECK(comp.entries[0].gamma == doctest::Approx(0.6).epsilon(1e-12));

    // lambda 0 is a hard unreachable-target error naming the grid value.
    TargetPd unreachable{"x1", {2.5}, {0.1}};
    CHECK_THROWS_WITH_AS(solve_gamma(unreachable, {{0.0, 0.3, true}}, FeatureKind::continuous),
                         doctest::Contains("2.5"), NumericError);
}

TEST_CASE("compensation identity holds at every grid value") {
    Rng rng(77);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 50; ++i) {
        const double v = rng.normal();
        rows.push_back({v, v + 0.3 * rng.normal()});
    }
    Dataset ds = make_dataset(rows);
    auto f = std::make_shared<LambdaPredictor>(2, [](std::span<const double> r) { return r[0] + 2.0 * r[1]; });
    // Stub classifier keyed on disagreement between the two columns.
    const auto c = stub_classifier(2, [](std::span<const double> r) { return std::abs(r[0] - r[1]) > 0.8 ? 1.0 : 0.0; });
    const GridSpec grid = select_grid(ds, "x1", GridSource::quantile, 7);
    const auto permuted = build_permuted_pd_data(ds, grid);
    const auto lambda_rho = estimate_lambda_rho(permuted, c, *f);
    const TargetPd target = target_linear(grid, -1.0, 0.25);
    const auto comp = solve_gamma(target, lambda_rho, FeatureKind::continuous);
    for (std::size_t g = 0; g < comp.entries.size(); ++g) {
        const auto& e = comp.entries[g];
        CHECK(std::abs((1.0 - e.lambda) * e.rho + e.lambda * e.gamma - target.desired[g]) < 1e-9);
    }
}

TEST_CASE("gamma interpolation: midpoint, clamping, categorical errors") {
    FeatureCompensation comp;
    comp.feature = "x2";
    comp.kind = FeatureKind::continuous;
    comp.entries = {{1.0, 0.5, 0.0, 1.0}, {3.0, 0.5, 0.0, 3.0}, {5.0, 0.5, 0.0, -1.0}};
    CHECK(comp.gamma_at(2.0) == doctest::Approx(2.0));  // midway between gammas 1 and 3
    CHECK(comp.gamma_at(1.0) == 1.0);
    CHECK(comp.gamma_at(0.0) == 1.0);    // clamped below
    CHECK(comp.gamma_at(9.0) == -1.0);   // clamped above
    CHECK(comp.gamma_at(4.0) == doctest::Approx(1.0));  // interpolates 3 -> -1

    FeatureCompensation cat;
    cat.feature = "color";
    cat.kind = FeatureKind::categorical;
    cat.entries = {{0.0, 0.5, 0.0, 2.0}, {2.0, 0.5, 0.0, 4.0}};
    CHECK(cat.gamma_at(2.0) == 4.0);
    CHECK_THROWS_AS(cat.gamma_at(1.0), DataError);
}

TEST_CASE("single-feature adversarial model: passthrough and compensation") {
    Dataset ds = make_dataset({{0.0, 0.0}, {1.0, 1.0}});
    auto f = std::make_shared<LambdaPredictor>(2, [](std::span<const double> r) { return 10.0 * r[0] + r[1]; });
    const auto c = stub_classifier(2, [](std::span<const double> r) { return r[1] > 0.5 ? 1.0 : 0.0; });
    CompensationTable table;
    table.features.push_back({"x1", FeatureKind::continuous, {{0.0, 0.5, 0.0, 42.0}, {1.0, 0.5, 0.0, 43.0}}});
    const AdversarialModel a = build_adversarial_single(f, c, table, "x1", ds);

    // c = 0: bit-exact passthrough.
    const std::vector<double> clean = {0.25, 0.0};
    CHECK(a.predict(clean) == f->predict(clean));
    CHECK(a.route(clean).kind == RouteKind::original);

    // c = 1: table lookup on the targeted feature.
    const std::vector<double> flagged = {1.0, 1.0};
    CHECK(a.predict(flagged) == 43.0);
    CHECK(a.route(flagged).kind == RouteKind::compensated);
}

TEST_CASE("in-sample adversarial PD reproduces the target within 1e-9") {
    Rng rng(88);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 40; ++i) {
        const double v = rng.normal();
        rows.push_back({v, v * 0.8 + 0.2 * rng.normal(), rng.normal()});
    }
    Dataset ds = make_dataset(rows);
    auto f = std::make_shared<LambdaPredictor>(3, [](std::span<const double> r) { return r[0] - r[1] + 0.5 * r[2]; });
    const auto c = stub_classifier(3, [](std::span<const double> r) { return std::abs(r[0] - r[1]) > 0.5 ? 0.9 : 0.1; });
    const GridSpec grid = select_grid(ds, "x1", GridSource::quantile, 9);
    const auto permuted = build_permuted_pd_data(ds, grid);
    const TargetPd target = target_flat(grid, 0.123);
    CompensationTable table;
    table.features.push_back(solve_gamma(target, estimate_lambda_rho(permuted, c, *f), FeatureKind::continuous));
    const AdversarialModel a = build_adversarial_single(f, c, table, "x1", ds);
    const PdCurve adv = compute_pd(a, permuted);
    for (double v : adv.values) CHECK(std::abs(v - 0.123) < 1e-9);
}

TEST_CASE("allocator: separable synthetic blocks") {
    // Class 0 rows look like (big, small), class 1 rows like (small, big);
    // real rows sit near the origin. Blocks are disjoint by construction.
    Rng rng(21);
    std::vector<std::vector<double>> real_rows;
    for (int i = 0; i < 300; ++i) real_rows.push_back({0.2 * rng.normal(), 0.2 * rng.normal()});
    Dataset real = make_dataset(real_rows);

    // Permutation sets: overwrite x1 with far values for target 0, x2 for target 1.
    const GridSpec g1 = explicit_grid(real, "x1", {8.0, 9.0});
    const GridSpec g2 = explicit_grid(real, "x2", {-8.0, -9.0});
    const auto p1 = build_permuted_pd_data(real, g1);
    const auto p2 = build_permuted_pd_data(real, g2);
    const auto c = stub_classifier(2, [](std::span<const double> r) {
        return (std::abs(r[0]) > 4.0 || std::abs(r[1]) > 4.0) ? 1.0 : 0.0;
    });

    MlpConfig config;
    config.layer_widths = {8, 3};
    config.max_epochs = 40;
    config.early_stop_patience = 8;
    config.seed = 5;
    const AllocatorClassifier allocator = train_allocator(real, {p1, p2}, c, config);
    CHECK(allocator.num_targets == 2);

    Rng held(22);
    std::size_t correct = 0, real_as_real = 0;
    const std::size_t trials = 300;
    for (std::size_t i = 0; i < trials; ++i) {
        const std::vector<double> to1 = {8.5, 0.2 * held.normal()};
        const std::vector<double> to2 = {0.2 * held.normal(), -8.5};
        const std::vector<double> real_row = {0.2 * held.normal(), 0.2 * held.normal()};
        correct += allocator.allocate(to1) == 0;
        correct += allocator.allocate(to2) == 1;
        real_as_real += allocator.allocate(real_row) == 2;
    }
    CHECK(static_cast<double>(correct) / (2 * trials) > 0.9);
    CHECK(static_cast<double>(real_as_real) / trials > 0.9);
}

TEST_CASE("allocator: unflagged target feature is an error") {
    Dataset real = make_dataset({{0.0, 0.0}, {0.1, 0.1}, {0.2, 0.2}});
    const GridSpec g1 = explicit_grid(real, "x1", {5.0});
    const GridSpec g2 = explicit_grid(real, "x2", {0.05});
    const auto c = stub_classifier(2, [](std::span<const double> r) { return r[0] > 4.0 ? 1.0 : 0.0; });
    MlpConfig config;
    config.layer_widths = {4, 3};
    CHECK_THROWS_WITH_AS(
        train_allocator(real, {build_permuted_pd_data(real, g1), build_permuted_pd_data(real, g2)}, c, config),
        doctest::Contains("x2"), NumericError);
    CHECK_THROWS_AS(train_allocator(real, {build_permuted_pd_data(real, g1)}, c, config), ConfigError);
}

TEST_CASE("multi-feature routing: allocator escape and interpolation") {
    Dataset ds = make_dataset({{0.0, 0.0}});
    auto f = std::make_shared<LambdaPredictor>(2, [](std::span<const double> r) { return r[0] + r[1]; });
    const auto c = stub_classifier(2, [](std::span<const double> r) { return r[0] < 0 ? 0.0 : 1.0; });
    CompensationTable table;
    table.features.push_back({"x1", FeatureKind::continuous, {{0.0, 0.5, 0.0, 7.0}}});
    table.features.push_back({"x2", FeatureKind::continuous, {{0.0, 0.5, 0.0, 1.0}, {2.0, 0.5, 0.0, 3.0}}});

    // Allocator: slot 2 = real for huge x2, slot 1 = x2 for moderate x2,
    // slot 0 = x1 otherwise.
    auto pick = [](std::span<const double> r) -> std::size_t {
        if (r[1] > 10.0) return 2;
        return r[1] >= -3.0 ? 1 : 0;
    };
    const AllocatorClassifier allocator{std::make_shared<LambdaMulticlass>(2, 3, pick), 2};
    const AdversarialModel a = build_adversarial_multi(f, c, allocator, table, {"x1", "x2"}, ds);

    // c = 0 short-circuits to f.
    CHECK(a.predict(std::vector<double>{-1.0, 99.0}) == f->predict(std::vector<double>{-1.0, 99.0}));
    // c = 1 but allocator says real: revert to f.
    CHECK(a.predict(std::vector<double>{1.0, 99.0}) == f->predict(std::vector<double>{1.0, 99.0}));
    CHECK(a.route(std::vector<double>{1.0, 99.0}).kind == RouteKind::allocator_no);
    // Allocated to x2 with x2 midway between grid values 0 and 2: gamma 2.
    CHECK(a.predict(std::vector<double>{1.0, 1.0}) == doctest::Approx(2.0));
    // Allocated to x2 below the smallest grid value: clamped.
    CHECK(a.route(std::vector<double>{1.0, -0.5}).target_slot == 1);
    CHECK(a.predict(std::vector<double>{1.0, -0.5}) == 1.0);
    // Allocated to x1: the single-entry x1 table answers everywhere.
    CHECK(a.route(std::vector<double>{1.0, -5.0}).target_slot == 0);
    CHECK(a.predict(std::vector<double>{1.0, -5.0}) == 7.0);
}

TEST_CASE("single/multi consistency with an oracle allocator") {
    Rng rng(31);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 30; ++i) rows.push_back({rng.normal(), rng.normal()});
    Dataset ds = make_dataset(rows);
    auto f = std::make_shared<LambdaPredictor>(2, [](std::span<const double> r) { return 3.0 * r[0] - r[1]; });
    const auto c = stub_classifier(2, [](std::span<const double> r) { return r[0] * r[1] < -0.2 ? 1.0 : 0.0; });
    CompensationTable table;
    table.features.push_back({"x1", FeatureKind::continuous, {{-1.0, 0.5, 0.0, 5.0}, {1.0, 0.5, 0.0, 6.0}}});

    const AdversarialModel single = build_adversarial_single(f, c, table, "x1", ds);
    const AllocatorClassifier oracle{
        std::make_shared<LambdaMulticlass>(2, 2, [](std::span<const double>) -> std::size_t { return 0; }), 1};
    const AdversarialModel multi = build_adversarial_multi(f, c, oracle, table, {"x1"}, ds);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const auto row = ds.rows.row(i);
        CHECK(single.predict(row) == multi.predict(row));
    }
}

TEST_CASE("lowering the threshold weakly raises lambda everywhere") {
    Rng rng(41);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 60; ++i) rows.push_back({rng.normal(), rng.normal()});
    Dataset ds = make_dataset(rows);
    LambdaPredictor f(2, [](std::span<const double> r) { return r[0]; });
    // Smooth probability surface.
    auto prob = [](std::span<const double> r) { return 1.0 / (1.0 + std::exp(-(r[0] + r[1]))); };
    const GridSpec grid = select_grid(ds, "x1", GridSource::quantile, 6);
    const auto permuted = build_permuted_pd_data(ds, grid);

    std::vector<double> previous(grid.values.size(), 0.0);
    bool first = true;
    for (double threshold : {0.9, 0.7, 0.5, 0.3, 0.1}) {
        const auto lr = estimate_lambda_rho(permuted, stub_classifier(2, prob, threshold), f);
        if (!first)
            for (std::size_t g = 0; g < lr.size(); ++g) CHECK(lr[g].lambda >= previous[g]);
        for (std::size_t g = 0; g < lr.size(); ++g) previous[g] = lr[g].lambda;
        first = false;
    }
}

TEST_CASE("adversarial batch prediction matches single rows") {
    Rng rng(51);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 25; ++i) rows.push_back({rng.normal(), rng.normal()});
    Dataset ds = make_dataset(rows);
    auto f = std::make_shared<LambdaPredictor>(2, [](std::span<const double> r) { return r[0] * r[1]; });
    const auto c = stub_classifier(2, [](std::span<const double> r) { return r[0] > 0 ? 0.8 : 0.2; });
    CompensationTable table;
    table.features.push_back({"x1", FeatureKind::continuous, {{0.0, 0.5, 0.0, -3.0}}});
    const AdversarialModel a = build_adversarial_single(f, c, table, "x1", ds);

    const auto batch = adversarial_predict_batch(a, ds.rows);
    for (std::size_t i = 0; i < ds.n(); ++i) CHECK(batch[i] == a.predict(ds.rows.row(i)));

    // All-real batch equals the f batch bit for bit.
    const auto c0 = stub_classifier(2, [](std::span<const double>) { return 0.0; });
    const AdversarialModel passthrough = build_adversarial_single(f, c0, table, "x1", ds);
    CHECK(adversarial_predict_batch(passthrough, ds.rows) == predict_batch(*f, ds.rows));
}

TEST_CASE("attack manifest round-trips through files") {
    const std::string dir = temp_dir("attack_manifest");
    SimulationConfig sim;
    sim.n_rows = 150;
    sim.n_features = 3;
    sim.coefficients = {1, 1, 0};
    sim.seed = 61;
    const Dataset ds = simulate_correlated_gaussian(sim);

    MlpConfig f_config;
    f_config.layer_widths = {8, 1};
    f_config.max_epochs = 15;
    f_config.seed = 3;
    auto f = std::make_shared<TrainedMlp>(train_mlp(ds, f_config));

    MlpConfig c_config = f_config;
    c_config.task = MlpTask::binary;
    c_config.seed = 4;
    const auto augmenting = generate_augmenting_sample(ds, 5, 9);
    const ExtrapolationClassifier c = train_extrapolation_classifier(ds, augmenting, c_config, 0.6);

    const GridSpec grid = select_grid(ds, "x1", GridSource::quantile, 5);
    const auto permuted = build_permuted_pd_data(ds, grid);
    const TargetPd target = target_flat(grid, 0.0);
    CompensationTable table;
    table.features.push_back(solve_gamma(target, estimate_lambda_rho(permuted, c, *f), FeatureKind::continuous));
    const AdversarialModel a = build_adversarial_single(f, c, table, "x1", ds);

    f->save(dir + "/f.model");
    std::dynamic_pointer_cast<const TrainedMlp>(c.model)->save(dir + "/c.model");
    save_adversarial(a, dir + "/attack.txt", "f.model", "c.model", "allocator.model");
    const AdversarialModel loaded = load_adversarial(dir + "/attack.txt");

    for (std::size_t i = 0; i < 40; ++i) {
        const auto row = ds.rows.row(i);
        CHECK(loaded.predict(row) == a.predict(row));
    }
    CHECK(loaded.extrapolation().threshold == 0.6);
    CHECK(loaded.targeted_features() == a.targeted_features());
}
