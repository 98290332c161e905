#include "lagrange/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "lagrange/k_multiplier.hpp"
#include "lagrange/rng.hpp"
#include "lagrange/thread_pool.hpp"

namespace lagrange {
namespace {

constexpr double kClampMargin = 1e-6;

struct Frame {
    std::vector<int> sample;  // row indices of this node's bootstrap subset
    int depth = 0;
    int node_index = 0;
};

double mean_of(const std::vector<TrainRow>& rows, const std::vector<int>& idx) {
    double s = 0.0;
    for (int i : idx) s += rows[i].label;
    return idx.empty() ? 0.0 : s / static_cast<double>(idx.size());
}

// Grows one CART regression tree on a bootstrap sample. Splits maximize SSE
// reduction over `mtry` features drawn per node; a node becomes a leaf when
// it is too small, too deep, pure, or no valid split exists.
Tree build_tree(const std::vector<TrainRow>& rows, const std::vector<int>& pool,
                const ForestConfig& cfg, SplitMix64& rng) {
    Tree tree;
    const int n_pool = static_cast<int>(pool.size());

    std::vector<int> root_sample(n_pool);
    for (int i = 0; i < n_pool; ++i)
        root_sample[i] = pool[rng.bounded(static_cast<std::uint64_t>(n_pool))];

    std::vector<int> feat_ids(kFeatureCount);
    std::iota(feat_ids.begin(), feat_ids.end(), 0);

    std::vector<Frame> stack;
    tree.nodes.emplace_back();
    stack.push_back({std::move(root_sample), 0, 0});

    // Iterative depth-first growth; children are appended in left-right order
    // so node layout is a pure function of the RNG stream and the data.
    while (!stack.empty()) {
        Frame fr = std::move(stack.back());
        stack.pop_back();
        const auto& sample = fr.sample;
        const int n = static_cast<int>(sample.size());

        double sum = 0.0, sum2 = 0.0;
        for (int i : sample) {
            sum += rows[i].label;
            sum2 += rows[i].label * rows[i].label;
        }
        const double node_mean = sum / n;
        const double node_sse = sum2 - sum * sum / n;

        auto make_leaf = [&] {
            TreeNode& leaf = tree.nodes[fr.node_index];
            leaf.feature = -1;
            leaf.leaf_value = node_mean;
        };

        if (n < 2 * cfg.min_leaf || node_sse <= 1e-12 ||
            (cfg.max_depth > 0 && fr.depth >= cfg.max_depth)) {
            make_leaf();
            continue;
        }

        // Partial Fisher-Yates: the first `mtry` entries become this node's
        // candidate features.
        const int mtry = std::min(cfg.mtry, kFeatureCount);
        for (int i = 0; i < mtry; ++i) {
            const int j =
                i + static_cast<int>(rng.bounded(
                        static_cast<std::uint64_t>(kFeatureCount - i)));
            std::swap(feat_ids[i], feat_ids[j]);
        }

        int best_feature = -1;
        double best_sse = node_sse;
        double best_threshold = 0.0;

        std::vector<int> order(sample);
        for (int fi = 0; fi < mtry; ++fi) {
            const int f = feat_ids[fi];
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                return rows[a].features.values[f] < rows[b].features.values[f];
            });
            double left_sum = 0.0, left_sum2 = 0.0;
            for (int pos = 1; pos <= n - 1; ++pos) {
                const double y = rows[order[pos - 1]].label;
                left_sum += y;
                left_sum2 += y * y;
                if (pos < cfg.min_leaf || n - pos < cfg.min_leaf) continue;
                const double lo = rows[order[pos - 1]].features.values[f];
                const double hi = rows[order[pos]].features.values[f];
                if (!(hi > lo)) continue;  // need distinct values to cut between
                const double right_sum = sum - left_sum;
                const double right_sum2 = sum2 - left_sum2;
                const double sse =
                    (left_sum2 - left_sum * left_sum / pos) +
                    (right_sum2 - right_sum * right_sum / (n - pos));
                if (sse < best_sse - 1e-12) {
                    best_sse = sse;
                    best_feature = f;
                    best_threshold = lo + (hi - lo) / 2.0;
                }
            }
        }

        if (best_feature < 0) {
            make_leaf();
            continue;
        }

        std::vector<int> left, right;
        left.reserve(sample.size());
        right.reserve(sample.size());
        for (int i : sample) {
            if (rows[i].features.values[best_feature] <= best_threshold)
                left.push_back(i);
            else
                right.push_back(i);
        }
        if (left.empty() || right.empty()) {  // defensive; cut is between values
            make_leaf();
            continue;
        }

        const int left_index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const int right_index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        TreeNode& node = tree.nodes[fr.node_index];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left_index;
        node.right = right_index;

        // Right pushed first so the left child is grown (and numbered) next,
        // keeping the RNG stream aligned with recursion order.
        stack.push_back({std::move(right), fr.depth + 1, right_index});
        stack.push_back({std::move(left), fr.depth + 1, left_index});
    }
    return tree;
}

std::vector<Tree> train_trees(const std::vector<TrainRow>& rows,
                              const std::vector<int>& idx,
                              const ForestConfig& cfg) {
    std::vector<Tree> trees(cfg.trees);
    ThreadPool pool(std::min<unsigned>(
        cfg.trees, std::max(1u, std::thread::hardware_concurrency())));
    std::vector<std::future<void>> futures;
    futures.reserve(cfg.trees);
    for (int t = 0; t < cfg.trees; ++t) {
        futures.push_back(pool.submit([&, t] {
            SplitMix64 rng(keyed_stream(cfg.seed, "tree-" + std::to_string(t)));
            trees[t] = build_tree(rows, idx, cfg, rng);
        }));
    }
    for (auto& f : futures) f.get();
    return trees;
}

double forest_point_prediction(const std::vector<Tree>& trees,
                               const std::array<double, kFeatureCount>& x) {
    double s = 0.0;
    for (const Tree& t : trees) s += t.predict(x);
    return s / static_cast<double>(trees.size());
}

double score_r2(const std::vector<Tree>& trees,
                const std::vector<TrainRow>& rows, const std::vector<int>& idx) {
    double mean = mean_of(rows, idx);
    double sse = 0.0, sst = 0.0;
    for (int i : idx) {
        const double pred = forest_point_prediction(trees, rows[i].features.values);
        sse += (rows[i].label - pred) * (rows[i].label - pred);
        sst += (rows[i].label - mean) * (rows[i].label - mean);
    }
    if (sst <= 0.0) return sse <= 1e-12 ? 1.0 : 0.0;
    return 1.0 - sse / sst;
}

}  // namespace

double Tree::predict(const std::array<double, kFeatureCount>& x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
        i = (x[nodes[i].feature] <= nodes[i].threshold) ? nodes[i].left
                                                        : nodes[i].right;
    return nodes[i].leaf_value;
}

TrainSet TrainSet::split(std::vector<TrainRow> rows, double holdout_fraction,
                         std::uint64_t seed) {
    TrainSet set;
    set.rows = std::move(rows);
    std::vector<int> order(set.rows.size());
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(keyed_stream(seed, "holdout-split"));
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
        std::swap(order[i], order[rng.bounded(static_cast<std::uint64_t>(i + 1))]);
    const int holdout_n = static_cast<int>(
        std::floor(holdout_fraction * static_cast<double>(order.size())));
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (static_cast<int>(i) < holdout_n)
            set.holdout_idx.push_back(order[i]);
        else
            set.train_idx.push_back(order[i]);
    }
    std::sort(set.holdout_idx.begin(), set.holdout_idx.end());
    std::sort(set.train_idx.begin(), set.train_idx.end());
    return set;
}

double ForestModel::predict(const FeatureVector& f) const {
    if (f.version != feature_version)
        throw std::invalid_argument(
            "feature ordering version mismatch: model has '" + feature_version +
            "', vector has '" + f.version + "'");
    if (trees.empty()) throw std::logic_error("empty forest");
    const double raw = forest_point_prediction(trees, f.values);
    return std::clamp(raw, kKMin + kClampMargin, kKMax - kClampMargin);
}

ForestModel train_forest(const TrainSet& data, ForestConfig config,
                         bool cv_select) {
    if (data.train_idx.size() < 50)
        throw std::invalid_argument("need at least 50 training rows, have " +
                                    std::to_string(data.train_idx.size()));
    const std::string version = feature_ordering_version();
    for (int i : data.train_idx) {
        const TrainRow& r = data.rows[i];
        KMultiplier guard(r.label);  // labels must lie in (0, 6)
        if (r.features.version != version)
            throw std::invalid_argument("training row feature version mismatch");
    }

    ForestModel model;
    model.feature_version = version;

    // Constant labels admit no splits at all; a single leaf is the honest fit.
    const double first = data.rows[data.train_idx.front()].label;
    const bool degenerate = std::all_of(
        data.train_idx.begin(), data.train_idx.end(),
        [&](int i) { return data.rows[i].label == first; });
    if (degenerate) {
        Tree t;
        TreeNode leaf;
        leaf.feature = -1;
        leaf.leaf_value = first;
        t.nodes.push_back(leaf);
        model.trees.push_back(t);
        config.trees = 1;
        model.trained_with = config;
        model.cv_score = 1.0;
        model.holdout_r2 =
            data.holdout_idx.empty()
                ? 1.0
                : r_squared(model, data.rows, data.holdout_idx);
        return model;
    }

    if (cv_select) {
        // 5-fold CV over a small hyperparameter grid; folds use a reduced
        // tree count since ranking, not absolute accuracy, is needed.
        const int kFolds = 5;
        std::vector<int> shuffled = data.train_idx;
        SplitMix64 rng(keyed_stream(config.seed, "cv-folds"));
        for (int i = static_cast<int>(shuffled.size()) - 1; i > 0; --i)
            std::swap(shuffled[i],
                      shuffled[rng.bounded(static_cast<std::uint64_t>(i + 1))]);

        const std::vector<int> mtry_grid = {4, 7, 14};
        const std::vector<int> leaf_grid = {2, 5};
        double best_score = -std::numeric_limits<double>::infinity();
        int best_mtry = config.mtry, best_leaf = config.min_leaf;

        for (int mtry : mtry_grid) {
            for (int leaf : leaf_grid) {
                double total = 0.0;
                for (int fold = 0; fold < kFolds; ++fold) {
                    std::vector<int> tr, va;
                    for (std::size_t i = 0; i < shuffled.size(); ++i) {
                        if (static_cast<int>(i % kFolds) == fold)
                            va.push_back(shuffled[i]);
                        else
                            tr.push_back(shuffled[i]);
                    }
                    ForestConfig cv_cfg = config;
                    cv_cfg.trees = 25;
                    cv_cfg.mtry = mtry;
                    cv_cfg.min_leaf = leaf;
                    cv_cfg.seed = config.seed ^
                                  fnv1a64("cv-" + std::to_string(mtry) + "-" +
                                          std::to_string(leaf) + "-" +
                                          std::to_string(fold));
                    const auto trees = train_trees(data.rows, tr, cv_cfg);
                    total += score_r2(trees, data.rows, va);
                }
                const double score = total / kFolds;
                if (score > best_score) {
                    best_score = score;
                    best_mtry = mtry;
                    best_leaf = leaf;
                }
            }
        }
        config.mtry = best_mtry;
        config.min_leaf = best_leaf;
        model.cv_score = best_score;
    }

    model.trees = train_trees(data.rows, data.train_idx, config);
    model.trained_with = config;
    if (!cv_select)
        model.cv_score = score_r2(model.trees, data.rows, data.train_idx);
    model.holdout_r2 = data.holdout_idx.empty()
                           ? 0.0
                           : r_squared(model, data.rows, data.holdout_idx);
    return model;
}

double r_squared(const ForestModel& model, const std::vector<TrainRow>& rows,
                 const std::vector<int>& idx) {
    if (idx.empty()) return 0.0;
    double mean = 0.0;
    for (int i : idx) mean += rows[i].label;
    mean /= static_cast<double>(idx.size());
    double sse = 0.0, sst = 0.0;
    for (int i : idx) {
        const double pred = model.predict(rows[i].features);
        sse += (rows[i].label - pred) * (rows[i].label - pred);
        sst += (rows[i].label - mean) * (rows[i].label - mean);
    }
    if (sst <= 0.0) return sse <= 1e-12 ? 1.0 : 0.0;
    return 1.0 - sse / sst;
}

void ForestModel::save(const std::string& path) const {
    nlohmann::json trees_json = nlohmann::json::array();
    for (const Tree& t : trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const TreeNode& n : t.nodes)
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.leaf_value});
        trees_json.push_back(std::move(nodes));
    }
    nlohmann::json j{{"feature_version", feature_version},
                     {"config",
                      {{"trees", trained_with.trees},
                       {"mtry", trained_with.mtry},
                       {"min_leaf", trained_with.min_leaf},
                       {"max_depth", trained_with.max_depth},
                       {"seed", trained_with.seed}}},
                     {"cv_score", cv_score},
                     {"holdout_r2", holdout_r2},
                     {"trees", trees_json}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "LAGRANGE-FOREST/1\n" << j.dump() << "\n";
    if (!out) throw std::runtime_error("cannot write model file: " + path);
}

ForestModel ForestModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::string magic;
    std::getline(in, magic);
    if (magic != "LAGRANGE-FOREST/1")
        throw std::runtime_error("not a forest model file (bad magic): " + path);
    nlohmann::json j = nlohmann::json::parse(in);

    ForestModel m;
    j.at("feature_version").get_to(m.feature_version);
    const auto& cfg = j.at("config");
    cfg.at("trees").get_to(m.trained_with.trees);
    cfg.at("mtry").get_to(m.trained_with.mtry);
    cfg.at("min_leaf").get_to(m.trained_with.min_leaf);
    cfg.at("max_depth").get_to(m.trained_with.max_depth);
    cfg.at("seed").get_to(m.trained_with.seed);
    j.at("cv_score").get_to(m.cv_score);
    j.at("holdout_r2").get_to(m.holdout_r2);

    for (const auto& nodes : j.at("trees")) {
        Tree t;
        for (const auto& n : nodes) {
            TreeNode node;
            node.feature = n.at(0).get<int>();
            node.threshold = n.at(1).get<double>();
            node.left = n.at(2).get<int>();
            node.right = n.at(3).get<int>();
            node.leaf_value = n.at(4).get<double>();
            if (node.feature >= kFeatureCount)
                throw std::runtime_error("model split index out of range");
            if (node.feature < 0 &&
                !(node.leaf_value > kKMin && node.leaf_value < kKMax))
                throw std::runtime_error("model leaf value outside (0, 6)");
            t.nodes.push_back(node);
        }
        if (t.nodes.empty()) throw std::runtime_error("empty tree in model");
        m.trees.push_back(std::move(t));
    }
    if (m.trees.empty()) throw std::runtime_error("model contains no trees");
    return m;
}

}  // namespace lagrange
