#include <cmath>
#include <vector>

#include <doctest.h>

#include "glovesim/error.hpp"
#include "glovesim/metrics.hpp"
#include "glovesim/rng.hpp"

using namespace glovesim;

TEST_CASE("confusion matrix counts, accuracy and csv layout") {
    const std::vector<int> truth = {0, 1, 1, 2};
    const std::vector<int> pred = {0, 1, 2, 2};
    auto m = make_confusion(truth, pred, 3);
    CHECK(m.total() == 4);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(1, 1) == 1);
    CHECK(m.at(1, 2) == 1);
    CHECK(m.at(2, 2) == 1);
    CHECK(m.accuracy() == doctest::Approx(0.75));
    CHECK(m.to_csv() == "1,0,0\n0,1,1\n0,0,1\n");

    const std::vector<int> bad = {0, 3, 0, 0};
    CHECK_THROWS_AS(make_confusion(truth, bad, 3), param_error);
    const std::vector<int> shorter = {0, 1};
    CHECK_THROWS_AS(make_confusion(truth, shorter, 3), shape_error);
    CHECK_THROWS_AS(make_confusion(truth, pred, 0), param_error);
}

TEST_CASE("uniform displacement gives an exact distance with zero spread") {
    std::vector<std::vector<float>> truth(1, std::vector<float>(45));
    for (int k = 0; k < 45; ++k) truth[0][std::size_t(k)] = float(k);
    auto pred = truth;
    for (int k = 0; k < 15; ++k) {
        pred[0][std::size_t(k * 3 + 0)] += 3.0f;
        pred[0][std::size_t(k * 3 + 2)] += 4.0f;
    }
    const auto stats = average_distance(pred, truth);
    CHECK(std::abs(stats.mean - 5.0) < 1e-9);
    CHECK(std::abs(stats.stddev) < 1e-9);
    for (int k = 0; k < 15; ++k) CHECK(std::abs(stats.per_keypoint[std::size_t(k)] - 5.0) < 1e-9);
}

TEST_CASE("distance statistics match an independent double-precision sum") {
    Rng rng(77);
    const int n = 5;
    std::vector<std::vector<float>> pred(n, std::vector<float>(45)), truth(n, std::vector<float>(45));
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 45; ++k) {
            pred[std::size_t(i)][std::size_t(k)] = float(rng.uniform(-100.0, 100.0));
            truth[std::size_t(i)][std::size_t(k)] = float(rng.uniform(-100.0, 100.0));
        }
    }
    const auto stats = average_distance(pred, truth);

    std::vector<double> all;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 15; ++k) {
            double d2 = 0.0;
            for (int a = 0; a < 3; ++a) {
                const double diff = double(pred[std::size_t(i)][std::size_t(k * 3 + a)]) -
                                    double(truth[std::size_t(i)][std::size_t(k * 3 + a)]);
                d2 += diff * diff;
            }
            all.push_back(std::sqrt(d2));
        }
    }
    double mean = 0.0;
    for (const double d : all) mean += d;
    mean /= double(all.size());
    double var = 0.0;
    for (const double d : all) var += (d - mean) * (d - mean);
    var /= double(all.size());
    CHECK(std::abs(stats.mean - mean) < 1e-9);
    CHECK(std::abs(stats.stddev - std::sqrt(var)) < 1e-9);

    double kp0 = 0.0;
    for (int i = 0; i < n; ++i) kp0 += all[std::size_t(i) * 15];
    CHECK(std::abs(stats.per_keypoint[0] - kp0 / n) < 1e-9);

    CHECK_THROWS_AS(average_distance({}, {}), param_error);
    auto ragged = pred;
    ragged[0].resize(44);
    CHECK_THROWS_AS(average_distance(ragged, truth), shape_error);
    auto fewer = pred;
    fewer.pop_back();
    CHECK_THROWS_AS(average_distance(fewer, truth), shape_error);
}

TEST_CASE("column means honor the row selection") {
    std::vector<std::vector<float>> rows = {{1.f, 10.f}, {3.f, 20.f}, {100.f, 100.f}};
    const std::size_t subset[2] = {0, 1};
    auto m = mean_rows(rows, subset);
    REQUIRE(m.size() == 2);
    CHECK(m[0] == 2.0f);
    CHECK(m[1] == 15.0f);
    CHECK_THROWS_AS(mean_rows(rows, {}), param_error);
}

TEST_CASE("linear readout recovers an affine map") {
    Rng rng(5);
    std::vector<std::vector<float>> x, y;
    for (int i = 0; i < 50; ++i) {
        const float a = float(rng.uniform(-2.0, 2.0));
        const float b = float(rng.uniform(-2.0, 2.0));
        x.push_back({a, b});
        y.push_back({2.0f * a - 3.0f * b + 7.0f, -a + 0.5f * b});
    }
    std::vector<std::size_t> rows(x.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;

    auto lr = LinearReadout::fit(x, y, rows);
    CHECK(lr.inputs() == 2);
    CHECK(lr.outputs() == 2);
    const std::vector<float> probe = {0.3f, -1.2f};
    const auto p = lr.predict(probe);
    CHECK(p[0] == doctest::Approx(2.0 * 0.3 - 3.0 * -1.2 + 7.0).epsilon(1e-4));
    CHECK(p[1] == doctest::Approx(-0.3 + 0.5 * -1.2).epsilon(1e-4));

    CHECK_THROWS_AS(LinearReadout::fit(x, y, {}), param_error);
    CHECK_THROWS_AS(LinearReadout::fit(x, y, rows, -1.0), param_error);
    const std::vector<float> wide = {1.f, 2.f, 3.f};
    CHECK_THROWS_AS(lr.predict(wide), shape_error);
}

TEST_CASE("report text is deterministic and carries every metric") {
    GestureReport gr;
    gr.train_frames = 10;
    gr.val_frames = 4;
    gr.test_frames = 6;
    gr.confusion = make_confusion(std::vector<int>{0, 1, 1, 2}, std::vector<int>{0, 1, 2, 2}, 3);
    const auto text = gr.to_text();
    CHECK(text.find("task = gesture\n") != std::string::npos);
    CHECK(text.find("accuracy = 0.750000\n") != std::string::npos);
    CHECK(text.find("confusion =\n1,0,0\n") != std::string::npos);
    CHECK(text == gr.to_text());

    ReconReport rr;
    rr.train_frames = 3;
    rr.model.mean = 1.234567890;
    rr.model.stddev = 0.5;
    rr.mean_baseline.mean = 9.0;
    rr.linear_baseline.mean = 4.0;
    for (int k = 0; k < 15; ++k) rr.model.per_keypoint[std::size_t(k)] = double(k);
    const auto rtext = rr.to_text();
    CHECK(rtext.find("task = recon\n") != std::string::npos);
    CHECK(rtext.find("ad.model.mean_mm = 1.234568\n") != std::string::npos);
    CHECK(rtext.find("ad.baseline_mean_pose.mean_mm = 9.000000\n") != std::string::npos);
    CHECK(rtext.find("ad.baseline_linear.mean_mm = 4.000000\n") != std::string::npos);
    CHECK(rtext.find("keypoint.14.mean_mm = 14.000000\n") != std::string::npos);
    CHECK(rtext == rr.to_text());
}
