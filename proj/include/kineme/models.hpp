#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "kineme/common.hpp"

namespace kineme {

enum class ModelFamily { Forest, Boosted, Svm };
enum class Task { Classify, Regress };

std::string to_string(ModelFamily f);
ModelFamily family_from_string(const std::string& s);
std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct ModelSpec {
    ModelFamily family = ModelFamily::Forest;
    Task task = Task::Classify;

    // forest
    int trees = 200;
    int max_depth = 8;   // -1 = unlimited
    int min_leaf = 1;
    bool bootstrap = true;
    int mtry = 0;        // 0 = auto: sqrt(d) for classification, d/3 for regression

    // boosted
    int stages = 300;
    double learning_rate = 0.05;
    int boost_depth = 3;
    double subsample = 1.0;  // row fraction per stage

    // svm
    double svm_lambda = 1e-3;
    int svm_epochs = 50;
    double svr_epsilon = 0.5;

    std::uint64_t seed = 0;  // mandatory; all randomness derives from it
};

struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf payload: class-1 fraction or mean target
    bool leaf = true;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double eval(const Eigen::RowVectorXd& x) const;
};

struct TrainedModel {
    ModelFamily family = ModelFamily::Forest;
    Task task = Task::Classify;
    std::vector<Tree> trees;
    double base_score = 0.0;   // boosted initial score
    double shrinkage = 0.0;    // boosted learning rate
    Eigen::VectorXd weights;   // svm
    double bias = 0.0;         // svm
    int feature_count = 0;
    std::uint64_t normaliser_fingerprint = 0;
    std::vector<double> training_loss_trace;  // boosted, per stage
};

// Train one model. X holds one row per sample. For classification, y must
// contain only 0 (low) and 1 (high) and both classes must be present.
TrainedModel train_model(const ModelSpec& spec, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y);

// Raw scores: forest = mean leaf payload, boosted = additive score (log-odds
// for classification), svm = margin. For regression these are the predictions.
Eigen::VectorXd predict_values(const TrainedModel& model, const Eigen::MatrixXd& X);

// Hard 0/1 labels; score ties resolve to the high class (1).
std::vector<int> predict_labels(const TrainedModel& model, const Eigen::MatrixXd& X);

// Regularised objective of a linear SVM classifier on (X, y01):
// lambda/2 (||w||^2 + b^2) + mean hinge. The bias is an augmented,
// regularised coordinate. Exposed for fit-quality checks.
double svm_objective(const Eigen::VectorXd& w, double bias, double lambda,
                     const Eigen::MatrixXd& X, const Eigen::VectorXd& y01);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace kineme
