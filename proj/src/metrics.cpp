#include "glovesim/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "glovesim/error.hpp"

namespace glovesim {

namespace {

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

}  // namespace

long long ConfusionMatrix::total() const {
    long long n = 0;
    for (const long long c : counts) n += c;
    return n;
}

double ConfusionMatrix::accuracy() const {
    const long long n = total();
    if (n == 0) return 0.0;
    long long hit = 0;
    for (int c = 0; c < classes; ++c) hit += at(c, c);
    return double(hit) / double(n);
}

std::string ConfusionMatrix::to_csv() const {
    std::string out;
    for (int r = 0; r < classes; ++r) {
        for (int c = 0; c < classes; ++c) {
            if (c) out += ',';
            out += std::to_string(at(r, c));
        }
        out += '\n';
    }
    return out;
}

ConfusionMatrix make_confusion(std::span<const int> truth, std::span<const int> predicted,
                               int classes) {
    if (classes <= 0) throw param_error("confusion matrix needs at least one class");
    if (truth.size() != predicted.size()) {
        throw shape_error("every prediction needs a ground-truth label");
    }
    ConfusionMatrix m;
    m.classes = classes;
    m.counts.assign(std::size_t(classes) * std::size_t(classes), 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i], p = predicted[i];
        if (t < 0 || t >= classes || p < 0 || p >= classes) {
            throw param_error("class index out of range");
        }
        m.counts[std::size_t(t) * std::size_t(classes) + std::size_t(p)] += 1;
    }
    return m;
}

DistanceStats average_distance(const std::vector<std::vector<float>>& predicted,
                               const std::vector<std::vector<float>>& truth) {
    if (predicted.size() != truth.size()) throw shape_error("frame counts differ");
    if (predicted.empty()) throw param_error("cannot average over zero frames");

    DistanceStats stats;
    double sum = 0.0, sum_sq = 0.0;
    std::array<double, 15> per{};
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i].size() != 45 || truth[i].size() != 45) {
            throw shape_error("keypoint rows must hold 45 values");
        }
        for (int k = 0; k < 15; ++k) {
            double d2 = 0.0;
            for (int a = 0; a < 3; ++a) {
                const double diff = double(predicted[i][std::size_t(k * 3 + a)]) -
                                    double(truth[i][std::size_t(k * 3 + a)]);
                d2 += diff * diff;
            }
            const double d = std::sqrt(d2);
            sum += d;
            sum_sq += d * d;
            per[std::size_t(k)] += d;
        }
    }
    const double n = double(predicted.size()) * 15.0;
    stats.mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - stats.mean * stats.mean);
    stats.stddev = std::sqrt(var);
    for (int k = 0; k < 15; ++k) {
        stats.per_keypoint[std::size_t(k)] = per[std::size_t(k)] / double(predicted.size());
    }
    return stats;
}

std::vector<float> mean_rows(const std::vector<std::vector<float>>& rows,
                             std::span<const std::size_t> subset) {
    if (subset.empty()) throw param_error("cannot average an empty selection");
    const std::size_t cols = rows.at(subset[0]).size();
    std::vector<double> acc(cols, 0.0);
    for (const std::size_t r : subset) {
        if (r >= rows.size()) throw param_error("row index out of range");
        if (rows[r].size() != cols) throw shape_error("ragged rows cannot be averaged");
        for (std::size_t c = 0; c < cols; ++c) acc[c] += double(rows[r][c]);
    }
    std::vector<float> out(cols);
    for (std::size_t c = 0; c < cols; ++c) out[c] = float(acc[c] / double(subset.size()));
    return out;
}

LinearReadout LinearReadout::fit(const std::vector<std::vector<float>>& x,
                                 const std::vector<std::vector<float>>& y,
                                 std::span<const std::size_t> rows, double ridge) {
    if (rows.empty()) throw param_error("cannot fit on an empty selection");
    if (x.size() != y.size()) throw shape_error("inputs and targets must pair up");
    if (ridge < 0.0) throw param_error("ridge weight must be non-negative");

    LinearReadout lr;
    lr.in_ = int(x.at(rows[0]).size());
    lr.out_ = int(y.at(rows[0]).size());
    const int d = lr.in_ + 1;  // augmented with a constant feature

    // normal equations: (X'X + ridge I) W = X'Y
    std::vector<double> xtx(std::size_t(d) * std::size_t(d), 0.0);
    std::vector<double> xty(std::size_t(d) * std::size_t(lr.out_), 0.0);
    std::vector<double> xi(std::size_t(d), 0.0);
    for (const std::size_t r : rows) {
        if (r >= x.size()) throw param_error("row index out of range");
        if (int(x[r].size()) != lr.in_ || int(y[r].size()) != lr.out_) {
            throw shape_error("ragged rows cannot be fitted");
        }
        for (int c = 0; c < lr.in_; ++c) xi[std::size_t(c)] = double(x[r][std::size_t(c)]);
        xi[std::size_t(lr.in_)] = 1.0;
        for (int a = 0; a < d; ++a) {
            for (int b = a; b < d; ++b) {
                xtx[std::size_t(a) * std::size_t(d) + std::size_t(b)] += xi[std::size_t(a)] * xi[std::size_t(b)];
            }
            for (int o = 0; o < lr.out_; ++o) {
                xty[std::size_t(a) * std::size_t(lr.out_) + std::size_t(o)] +=
                    xi[std::size_t(a)] * double(y[r][std::size_t(o)]);
            }
        }
    }
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < a; ++b) {
            xtx[std::size_t(a) * std::size_t(d) + std::size_t(b)] =
                xtx[std::size_t(b) * std::size_t(d) + std::size_t(a)];
        }
        xtx[std::size_t(a) * std::size_t(d) + std::size_t(a)] += ridge;
    }

    // gaussian elimination with partial pivoting, all right-hand sides at once
    std::vector<double>& a = xtx;
    std::vector<double>& b = xty;
    for (int col = 0; col < d; ++col) {
        int pivot = col;
        for (int r2 = col + 1; r2 < d; ++r2) {
            if (std::abs(a[std::size_t(r2) * std::size_t(d) + std::size_t(col)]) >
                std::abs(a[std::size_t(pivot) * std::size_t(d) + std::size_t(col)])) {
                pivot = r2;
            }
        }
        if (std::abs(a[std::size_t(pivot) * std::size_t(d) + std::size_t(col)]) < 1e-300) {
            throw numeric_error("normal equations are singular");
        }
        if (pivot != col) {
            for (int c = 0; c < d; ++c) {
                std::swap(a[std::size_t(pivot) * std::size_t(d) + std::size_t(c)],
                          a[std::size_t(col) * std::size_t(d) + std::size_t(c)]);
            }
            for (int o = 0; o < lr.out_; ++o) {
                std::swap(b[std::size_t(pivot) * std::size_t(lr.out_) + std::size_t(o)],
                          b[std::size_t(col) * std::size_t(lr.out_) + std::size_t(o)]);
            }
        }
        const double inv = 1.0 / a[std::size_t(col) * std::size_t(d) + std::size_t(col)];
        for (int r2 = col + 1; r2 < d; ++r2) {
            const double f = a[std::size_t(r2) * std::size_t(d) + std::size_t(col)] * inv;
            if (f == 0.0) continue;
            for (int c = col; c < d; ++c) {
                a[std::size_t(r2) * std::size_t(d) + std::size_t(c)] -=
                    f * a[std::size_t(col) * std::size_t(d) + std::size_t(c)];
            }
            for (int o = 0; o < lr.out_; ++o) {
                b[std::size_t(r2) * std::size_t(lr.out_) + std::size_t(o)] -=
                    f * b[std::size_t(col) * std::size_t(lr.out_) + std::size_t(o)];
            }
        }
    }
    lr.w_.assign(std::size_t(d) * std::size_t(lr.out_), 0.0);
    for (int row = d - 1; row >= 0; --row) {
        for (int o = 0; o < lr.out_; ++o) {
            double v = b[std::size_t(row) * std::size_t(lr.out_) + std::size_t(o)];
            for (int c = row + 1; c < d; ++c) {
                v -= a[std::size_t(row) * std::size_t(d) + std::size_t(c)] *
                     lr.w_[std::size_t(c) * std::size_t(lr.out_) + std::size_t(o)];
            }
            lr.w_[std::size_t(row) * std::size_t(lr.out_) + std::size_t(o)] =
                v / a[std::size_t(row) * std::size_t(d) + std::size_t(row)];
        }
    }
    return lr;
}

std::vector<float> LinearReadout::predict(std::span<const float> x) const {
    if (int(x.size()) != in_) throw shape_error("input width does not match the fitted readout");
    std::vector<float> out(std::size_t(out_), 0.0f);
    for (int o = 0; o < out_; ++o) {
        double v = w_[std::size_t(in_) * std::size_t(out_) + std::size_t(o)];
        for (int c = 0; c < in_; ++c) {
            v += double(x[std::size_t(c)]) * w_[std::size_t(c) * std::size_t(out_) + std::size_t(o)];
        }
        out[std::size_t(o)] = float(v);
    }
    return out;
}

std::string GestureReport::to_text() const {
    std::string out;
    out += "task = gesture\n";
    out += "frames.train = " + std::to_string(train_frames) + "\n";
    out += "frames.val = " + std::to_string(val_frames) + "\n";
    out += "frames.test = " + std::to_string(test_frames) + "\n";
    out += "accuracy = " + fmt("%.6f", confusion.accuracy()) + "\n";
    out += "confusion =\n";
    out += confusion.to_csv();
    return out;
}

std::string ReconReport::to_text() const {
    std::string out;
    out += "task = recon\n";
    out += "frames.train = " + std::to_string(train_frames) + "\n";
    out += "frames.val = " + std::to_string(val_frames) + "\n";
    out += "frames.test = " + std::to_string(test_frames) + "\n";
    out += "ad.model.mean_mm = " + fmt("%.6f", model.mean) + "\n";
    out += "ad.model.std_mm = " + fmt("%.6f", model.stddev) + "\n";
    out += "ad.baseline_mean_pose.mean_mm = " + fmt("%.6f", mean_baseline.mean) + "\n";
    out += "ad.baseline_mean_pose.std_mm = " + fmt("%.6f", mean_baseline.stddev) + "\n";
    out += "ad.baseline_linear.mean_mm = " + fmt("%.6f", linear_baseline.mean) + "\n";
    out += "ad.baseline_linear.std_mm = " + fmt("%.6f", linear_baseline.stddev) + "\n";
    for (int k = 0; k < 15; ++k) {
        out += "keypoint." + std::to_string(k) +
               ".mean_mm = " + fmt("%.6f", model.per_keypoint[std::size_t(k)]) + "\n";
    }
    return out;
}

}  // namespace glovesim
