#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "driftcast/errors.hpp"
#include "driftcast/forecast_features.hpp"

// Gradient-boosted regression trees with squared-error loss. Split search is
// histogram based: each feature is cut at up to 64 quantile thresholds taken
// from the training rows.
namespace driftcast::forecast {

inline constexpr std::size_t kMaxThresholds = 64;

struct HParams {
    std::size_t num_trees = 100;
    std::size_t max_depth = 3;
    double learning_rate = 0.1;
    std::size_t min_samples_leaf = 20;

    void validate() const {
        if (num_trees < 1) throw FitError(FitErrc::InvalidHParams, "num_trees must be >= 1");
        if (max_depth < 1) throw FitError(FitErrc::InvalidHParams, "max_depth must be >= 1");
        if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw FitError(FitErrc::InvalidHParams, "learning_rate must be in (0,1]");
        if (min_samples_leaf < 1) throw FitError(FitErrc::InvalidHParams, "min_samples_leaf must be >= 1");
    }
    friend bool operator==(const HParams&, const HParams&) = default;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;         // leaf output (before learning rate)

    bool is_leaf() const noexcept { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(const double* x) const {
        std::size_t i = 0;
        while (!nodes[i].is_leaf()) {
            const auto& n = nodes[i];
            i = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
        }
        return nodes[i].value;
    }
    std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
    }
};

struct GbtModel {
    double base_prediction = 0.0;
    std::vector<RegressionTree> trees;
    HParams hparams;
    std::vector<std::string> feature_names;
    std::uint64_t schema_hash = 0;
    std::vector<double> train_mse;  // after base (index 0) and after each round

    double predict_row(const double* x) const {
        double acc = base_prediction;
        for (const auto& t : trees) acc += hparams.learning_rate * t.predict(x);
        return acc;
    }

    std::vector<double> predict(const FeatureMatrix& fm) const {
        if (fm.schema_hash != schema_hash) throw std::invalid_argument("GbtModel::predict: feature schema mismatch");
        std::vector<double> out(fm.rows());
        for (std::size_t r = 0; r < fm.rows(); ++r) out[r] = fm.mask[r] ? predict_row(fm.row(r)) : base_prediction;
        return out;
    }

    // The first k trees; equal to a model fitted with num_trees = k.
    GbtModel truncated(std::size_t k) const {
        GbtModel m = *this;
        k = std::min(k, trees.size());
        m.trees.resize(k);
        m.train_mse.resize(k + 1);
        m.hparams.num_trees = k;
        return m;
    }
};

namespace detail {

struct BinnedData {
    std::size_t rows = 0, cols = 0;
    std::vector<std::uint8_t> bins;                // row-major, bin = #thresholds < x
    std::vector<std::vector<double>> thresholds;   // per column, ascending
};

// Midpoints between distinct values when there are few of them, otherwise
// midpoints at the 1/64 .. 63/64 row quantiles.
inline std::vector<double> candidate_thresholds(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::vector<double> distinct = values;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> th;
    if (distinct.size() <= 1) return th;
    if (distinct.size() <= kMaxThresholds) {
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i) th.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
        return th;
    }
    for (std::size_t k = 1; k < kMaxThresholds; ++k) {
        const double lo = values[k * values.size() / kMaxThresholds - 1];
        const auto above = std::upper_bound(distinct.begin(), distinct.end(), lo);
        if (above == distinct.end()) break;
        th.push_back(lo + (*above - lo) / 2.0);
    }
    th.erase(std::unique(th.begin(), th.end()), th.end());
    return th;
}

inline BinnedData bin_rows(const FeatureMatrix& fm, std::span<const std::size_t> rows) {
    BinnedData b;
    b.rows = rows.size();
    b.cols = fm.cols;
    b.bins.resize(b.rows * b.cols);
    b.thresholds.resize(b.cols);
    std::vector<double> column(rows.size());
    for (std::size_t c = 0; c < b.cols; ++c) {
        for (std::size_t i = 0; i < rows.size(); ++i) column[i] = fm.at(rows[i], c);
        b.thresholds[c] = candidate_thresholds(column);
        const auto& th = b.thresholds[c];
        for (std::size_t i = 0; i < rows.size(); ++i) {
            b.bins[i * b.cols + c] = static_cast<std::uint8_t>(std::lower_bound(th.begin(), th.end(), column[i]) - th.begin());
        }
    }
    return b;
}

struct SplitChoice {
    double gain = 0.0;
    std::int32_t feature = -1;
    std::size_t bin = 0;  // rows with bin <= this go left
};

class TreeBuilder {
public:
    TreeBuilder(const BinnedData& data, const HParams& hp) : data_(data), hp_(hp) {}

    // Fits residuals; `leaf_of` receives each row's leaf output.
    RegressionTree build(std::span<const double> residual, std::vector<double>& leaf_of) {
        RegressionTree tree;
        std::vector<std::size_t> rows(data_.rows);
        std::iota(rows.begin(), rows.end(), 0);
        leaf_of.assign(data_.rows, 0.0);
        grow(tree, rows, residual, 0, leaf_of);
        return tree;
    }

private:
    std::int32_t grow(RegressionTree& tree, std::vector<std::size_t>& rows, std::span<const double> g, std::size_t depth,
                      std::vector<double>& leaf_of) {
        const auto id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        double sum = 0.0;
        for (auto r : rows) sum += g[r];
        const auto n = static_cast<double>(rows.size());

        SplitChoice best;
        if (depth < hp_.max_depth && rows.size() >= 2 * hp_.min_samples_leaf) best = find_split(rows, g, sum);

        if (best.feature < 0) {
            const double v = rows.empty() ? 0.0 : sum / n;
            tree.nodes[static_cast<std::size_t>(id)].value = v;
            for (auto r : rows) leaf_of[r] = v;
            return id;
        }

        std::vector<std::size_t> left, right;
        left.reserve(rows.size());
        right.reserve(rows.size());
        const auto f = static_cast<std::size_t>(best.feature);
        for (auto r : rows) (data_.bins[r * data_.cols + f] <= best.bin ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const auto l = grow(tree, left, g, depth + 1, leaf_of);
        const auto rr = grow(tree, right, g, depth + 1, leaf_of);
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = data_.thresholds[f][best.bin];
        node.left = l;
        node.right = rr;
        return id;
    }

    SplitChoice find_split(const std::vector<std::size_t>& rows, std::span<const double> g, double total) const {
        const std::size_t cols = data_.cols;
        hist_sum_.assign(cols * (kMaxThresholds + 1), 0.0);
        hist_cnt_.assign(cols * (kMaxThresholds + 1), 0);
        for (auto r : rows) {
            const std::uint8_t* b = data_.bins.data() + r * cols;
            const double gr = g[r];
            for (std::size_t c = 0; c < cols; ++c) {
                const std::size_t k = c * (kMaxThresholds + 1) + b[c];
                hist_sum_[k] += gr;
                ++hist_cnt_[k];
            }
        }
        const auto n = rows.size();
        const double parent = total * total / static_cast<double>(n);
        SplitChoice best;
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t nth = data_.thresholds[c].size();
            double sl = 0.0;
            std::size_t nl = 0;
            for (std::size_t k = 0; k < nth; ++k) {
                sl += hist_sum_[c * (kMaxThresholds + 1) + k];
                nl += hist_cnt_[c * (kMaxThresholds + 1) + k];
                const std::size_t nr = n - nl;
                if (nl < hp_.min_samples_leaf) continue;
                if (nr < hp_.min_samples_leaf) break;
                const double sr = total - sl;
                const double gain = sl * sl / static_cast<double>(nl) + sr * sr / static_cast<double>(nr) - parent;
                if (gain > best.gain + 1e-12 * std::max(1.0, std::abs(parent))) {
                    best.gain = gain;
                    best.feature = static_cast<std::int32_t>(c);
                    best.bin = k;
                }
            }
        }
        return best;
    }

    const BinnedData& data_;
    const HParams& hp_;
    mutable std::vector<double> hist_sum_;
    mutable std::vector<std::size_t> hist_cnt_;
};

}  // namespace detail

// Fits on the unmasked rows of X; y[r] is the target for row r.
inline GbtModel fit_gbt(const FeatureMatrix& X, std::span<const double> y, const HParams& hp) {
    hp.validate();
    if (y.size() != X.rows()) throw std::invalid_argument("fit_gbt: target length does not match rows");
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        if (!X.mask[r]) continue;
        if (!std::isfinite(y[r])) throw std::invalid_argument("fit_gbt: non-finite target in an unmasked row");
        rows.push_back(r);
    }
    if (rows.size() < 2 * hp.min_samples_leaf || rows.empty()) {
        throw FitError(FitErrc::TooFewSamples, "fit_gbt: too few usable rows");
    }

    const auto binned = detail::bin_rows(X, rows);
    std::vector<double> target(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) target[i] = y[rows[i]];

    GbtModel model;
    model.hparams = hp;
    model.feature_names = X.column_names;
    model.schema_hash = X.schema_hash;
    model.base_prediction = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(target.size());

    std::vector<double> pred(rows.size(), model.base_prediction), residual(rows.size()), leaf_of;
    auto mse = [&] {
        double acc = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) acc += (target[i] - pred[i]) * (target[i] - pred[i]);
        return acc / static_cast<double>(rows.size());
    };
    model.train_mse.push_back(mse());

    detail::TreeBuilder builder(binned, model.hparams);
    model.trees.reserve(hp.num_trees);
    for (std::size_t round = 0; round < hp.num_trees; ++round) {
        for (std::size_t i = 0; i < rows.size(); ++i) residual[i] = target[i] - pred[i];
        model.trees.push_back(builder.build(residual, leaf_of));
        for (std::size_t i = 0; i < rows.size(); ++i) pred[i] += hp.learning_rate * leaf_of[i];
        model.train_mse.push_back(mse());
    }
    return model;
}

}  // namespace driftcast::forecast
