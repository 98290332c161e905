#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lagrange/encode.hpp"
#include "lagrange/features.hpp"

namespace lagrange {

struct ForestConfig {
    int trees = 100;
    int mtry = 7;        // features considered per split, ceil(sqrt(49))
    int min_leaf = 5;    // smallest allowed leaf
    int max_depth = 0;   // 0 = unlimited
    std::uint64_t seed = 1;
};

// Axis-aligned split node; feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf_value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    double predict(const std::array<double, kFeatureCount>& x) const;
};

struct TrainRow {
    FeatureVector features;
    double label = 1.0;  // k in (0, 6)
    std::string clip_id;
    Codec codec = Codec::SYNTH;
};

// Labeled rows with a frozen train/holdout split. The holdout rows are never
// seen by training or cross-validation.
struct TrainSet {
    std::vector<TrainRow> rows;
    std::vector<int> train_idx;
    std::vector<int> holdout_idx;

    // Seeded shuffle; floor(holdout_fraction * rows) entries held out.
    static TrainSet split(std::vector<TrainRow> rows, double holdout_fraction,
                          std::uint64_t seed);
};

struct ForestModel {
    std::vector<Tree> trees;
    std::string feature_version;
    ForestConfig trained_with;
    double cv_score = 0.0;      // mean 5-fold R^2 of the selected config
    double holdout_r2 = 0.0;    // filled by train_forest when a holdout exists

    // Mean of tree outputs clamped strictly inside (0, 6). Refuses vectors
    // whose ordering version differs from the model's.
    double predict(const FeatureVector& f) const;

    void save(const std::string& path) const;
    static ForestModel load(const std::string& path);
};

// Bootstrap-sampled CART forest with variance-reduction splits. When
// cv_select is true, mtry and min_leaf are chosen by 5-fold cross-validation
// on the training rows before the final fit. All-equal labels produce a
// single-leaf model (a warning case surfaced via cv_score = 1, not an error).
// Trees train in parallel but each owns a seed-derived RNG, so results are
// identical regardless of thread scheduling.
ForestModel train_forest(const TrainSet& data, ForestConfig config,
                         bool cv_select = true);

// R^2 of model predictions against labels over the given row indices.
double r_squared(const ForestModel& model, const std::vector<TrainRow>& rows,
                 const std::vector<int>& idx);

}  // namespace lagrange
