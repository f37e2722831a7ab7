#include "kineme/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kineme/container.hpp"

namespace kineme {

std::string to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::Forest: return "forest";
        case ModelFamily::Boosted: return "boosted";
        case ModelFamily::Svm: return "svm";
    }
    return "?";
}

ModelFamily family_from_string(const std::string& s) {
    if (s == "forest") return ModelFamily::Forest;
    if (s == "boosted") return ModelFamily::Boosted;
    if (s == "svm") return ModelFamily::Svm;
    throw ConfigError("unknown model family '" + s + "' (forest|boosted|svm)");
}

std::string to_string(Task t) { return t == Task::Classify ? "classify" : "regress"; }

Task task_from_string(const std::string& s) {
    if (s == "classify") return Task::Classify;
    if (s == "regress") return Task::Regress;
    throw ConfigError("unknown task '" + s + "' (classify|regress)");
}

double Tree::eval(const Eigen::RowVectorXd& x) const {
    int at = 0;
    while (!nodes[static_cast<std::size_t>(at)].leaf) {
        const TreeNode& n = nodes[static_cast<std::size_t>(at)];
        at = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].value;
}

namespace {

struct SplitResult {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Gini impurity of a binary count pair.
double gini(double n1, double n) {
    if (n <= 0.0) return 0.0;
    const double p1 = n1 / n;
    const double p0 = 1.0 - p1;
    return 1.0 - p0 * p0 - p1 * p1;
}

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool classify, int max_depth,
                int min_leaf, int mtry, Rng* rng)
        : X_(X), y_(y), classify_(classify), max_depth_(max_depth), min_leaf_(min_leaf),
          mtry_(mtry), rng_(rng) {}

    Tree build(const std::vector<int>& indices) {
        Tree tree;
        grow(tree, indices, 0);
        return tree;
    }

private:
    int grow(Tree& tree, const std::vector<int>& indices, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.back().value = leaf_value(indices);

        if ((max_depth_ >= 0 && depth >= max_depth_) ||
            static_cast<int>(indices.size()) < 2 * min_leaf_ || indices.size() < 2 ||
            is_pure(indices)) {
            return id;
        }
        const SplitResult split = best_split(indices);
        if (split.feature < 0 || split.gain <= 0.0) return id;

        std::vector<int> left, right;
        left.reserve(indices.size());
        right.reserve(indices.size());
        for (int i : indices) {
            (X_(i, split.feature) <= split.threshold ? left : right).push_back(i);
        }
        if (static_cast<int>(left.size()) < min_leaf_ ||
            static_cast<int>(right.size()) < min_leaf_) {
            return id;
        }
        tree.nodes[static_cast<std::size_t>(id)].leaf = false;
        tree.nodes[static_cast<std::size_t>(id)].feature = split.feature;
        tree.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
        const int l = grow(tree, left, depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].left = l;
        const int r = grow(tree, right, depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    double leaf_value(const std::vector<int>& indices) const {
        double acc = 0.0;
        for (int i : indices) acc += y_(i);
        return acc / static_cast<double>(indices.size());
    }

    bool is_pure(const std::vector<int>& indices) const {
        const double first = y_(indices.front());
        for (int i : indices) {
            if (y_(i) != first) return false;
        }
        return true;
    }

    std::vector<int> candidate_features() {
        const int d = static_cast<int>(X_.cols());
        std::vector<int> all(static_cast<std::size_t>(d));
        std::iota(all.begin(), all.end(), 0);
        if (mtry_ <= 0 || mtry_ >= d || rng_ == nullptr) return all;
        // partial Fisher-Yates: first mtry entries are the sample
        for (int i = 0; i < mtry_; ++i) {
            const int j = i + static_cast<int>(rng_->below(static_cast<std::uint64_t>(d - i)));
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
        }
        all.resize(static_cast<std::size_t>(mtry_));
        return all;
    }

    SplitResult best_split(const std::vector<int>& indices) {
        SplitResult best;
        const auto features = candidate_features();
        const double n = static_cast<double>(indices.size());

        std::vector<std::pair<double, double>> xy(indices.size());  // (x, y)
        for (int f : features) {
            for (std::size_t i = 0; i < indices.size(); ++i) {
                xy[i] = {X_(indices[i], f), y_(indices[i])};
            }
            std::sort(xy.begin(), xy.end());

            if (classify_) {
                double total1 = 0.0;
                for (const auto& p : xy) total1 += p.second;
                const double parent = gini(total1, n);
                double left1 = 0.0;
                for (std::size_t i = 0; i + 1 < xy.size(); ++i) {
                    left1 += xy[i].second;
                    if (xy[i].first == xy[i + 1].first) continue;
                    const double nl = static_cast<double>(i + 1);
                    const double nr = n - nl;
                    const double weighted =
                        (nl * gini(left1, nl) + nr * gini(total1 - left1, nr)) / n;
                    const double gain = parent - weighted;
                    if (gain > best.gain) {
                        best.gain = gain;
                        best.feature = f;
                        best.threshold = 0.5 * (xy[i].first + xy[i + 1].first);
                    }
                }
            } else {
                double total = 0.0, total_sq = 0.0;
                for (const auto& p : xy) {
                    total += p.second;
                    total_sq += p.second * p.second;
                }
                const double parent_sse = total_sq - total * total / n;
                double lsum = 0.0, lsq = 0.0;
                for (std::size_t i = 0; i + 1 < xy.size(); ++i) {
                    lsum += xy[i].second;
                    lsq += xy[i].second * xy[i].second;
                    if (xy[i].first == xy[i + 1].first) continue;
                    const double nl = static_cast<double>(i + 1);
                    const double nr = n - nl;
                    const double rsum = total - lsum;
                    const double rsq = total_sq - lsq;
                    const double sse = (lsq - lsum * lsum / nl) + (rsq - rsum * rsum / nr);
                    const double gain = parent_sse - sse;
                    if (gain > best.gain) {
                        best.gain = gain;
                        best.feature = f;
                        best.threshold = 0.5 * (xy[i].first + xy[i + 1].first);
                    }
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    bool classify_;
    int max_depth_;
    int min_leaf_;
    int mtry_;
    Rng* rng_;
};

int leaf_index(const Tree& tree, const Eigen::RowVectorXd& x) {
    int at = 0;
    while (!tree.nodes[static_cast<std::size_t>(at)].leaf) {
        const TreeNode& n = tree.nodes[static_cast<std::size_t>(at)];
        at = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return at;
}

TrainedModel train_forest(const ModelSpec& spec, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    int mtry = spec.mtry;
    if (mtry <= 0) {
        mtry = spec.task == Task::Classify
                   ? std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(d)))))
                   : std::max(1, d / 3);
    }
    TrainedModel model;
    model.family = ModelFamily::Forest;
    model.task = spec.task;
    model.feature_count = d;
    model.trees.resize(static_cast<std::size_t>(spec.trees));
    for (int t = 0; t < spec.trees; ++t) {
        Rng rng(mix_seed(spec.seed, 0x666f72, static_cast<std::uint64_t>(t)));
        std::vector<int> indices(static_cast<std::size_t>(n));
        if (spec.bootstrap) {
            for (int i = 0; i < n; ++i) {
                indices[static_cast<std::size_t>(i)] =
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            }
            std::sort(indices.begin(), indices.end());
        } else {
            std::iota(indices.begin(), indices.end(), 0);
        }
        TreeBuilder builder(X, y, spec.task == Task::Classify, spec.max_depth, spec.min_leaf,
                            mtry, &rng);
        model.trees[static_cast<std::size_t>(t)] = builder.build(indices);
    }
    return model;
}

TrainedModel train_boosted(const ModelSpec& spec, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y) {
    const int n = static_cast<int>(X.rows());
    TrainedModel model;
    model.family = ModelFamily::Boosted;
    model.task = spec.task;
    model.feature_count = static_cast<int>(X.cols());
    model.shrinkage = spec.learning_rate;

    const bool classify = spec.task == Task::Classify;
    Eigen::VectorXd score(n);
    if (classify) {
        const double p = y.mean();
        model.base_score = std::log(std::max(p, 1e-12) / std::max(1.0 - p, 1e-12));
    } else {
        model.base_score = y.mean();
    }
    score.setConstant(model.base_score);

    Eigen::VectorXd residual(n);
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);

    for (int stage = 0; stage < spec.stages; ++stage) {
        Rng rng(mix_seed(spec.seed, 0x626f6f, static_cast<std::uint64_t>(stage)));
        std::vector<int> rows = all;
        if (spec.subsample < 1.0) {
            rng.shuffle(rows);
            rows.resize(std::max<std::size_t>(
                2, static_cast<std::size_t>(spec.subsample * static_cast<double>(n))));
            std::sort(rows.begin(), rows.end());
        }

        if (classify) {
            for (int i = 0; i < n; ++i) {
                const double p = 1.0 / (1.0 + std::exp(-score(i)));
                residual(i) = y(i) - p;
            }
        } else {
            residual = y - score;
        }

        TreeBuilder builder(X, residual, /*classify=*/false, spec.boost_depth, spec.min_leaf,
                            /*mtry=*/0, nullptr);
        Tree tree = builder.build(rows);

        if (classify) {
            // Newton leaf values for logistic loss: sum(residual) / sum(p(1-p)).
            std::vector<double> numer(tree.nodes.size(), 0.0);
            std::vector<double> denom(tree.nodes.size(), 0.0);
            for (int i : rows) {
                const int leaf = leaf_index(tree, X.row(i));
                const double p = 1.0 / (1.0 + std::exp(-score(i)));
                numer[static_cast<std::size_t>(leaf)] += y(i) - p;
                denom[static_cast<std::size_t>(leaf)] += p * (1.0 - p);
            }
            for (std::size_t j = 0; j < tree.nodes.size(); ++j) {
                if (!tree.nodes[j].leaf) continue;
                const double v = numer[j] / std::max(denom[j], 1e-12);
                tree.nodes[j].value = std::clamp(v, -10.0, 10.0);
            }
        }

        for (int i = 0; i < n; ++i) {
            score(i) += spec.learning_rate * tree.eval(X.row(i));
        }
        model.trees.push_back(std::move(tree));

        double loss = 0.0;
        if (classify) {
            for (int i = 0; i < n; ++i) {
                const double margin = (2.0 * y(i) - 1.0) * score(i);
                loss += margin > -30.0 ? std::log1p(std::exp(-margin)) : -margin;
            }
        } else {
            loss = (y - score).squaredNorm();
        }
        model.training_loss_trace.push_back(loss / static_cast<double>(n));
    }
    return model;
}

TrainedModel train_svm(const ModelSpec& spec, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    TrainedModel model;
    model.family = ModelFamily::Svm;
    model.task = spec.task;
    model.feature_count = d;

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0.0;
    const double lambda = spec.svm_lambda;
    long t = 0;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    // Pegasos-style subgradient steps with tail averaging over the second
    // half of the run; the average is far less noisy than the last iterate.
    const long total = static_cast<long>(spec.svm_epochs) * n;
    const long average_from = total / 2;
    Eigen::VectorXd w_acc = Eigen::VectorXd::Zero(d);
    double b_acc = 0.0;
    long averaged = 0;

    for (int epoch = 0; epoch < spec.svm_epochs; ++epoch) {
        Rng rng(mix_seed(spec.seed, 0x73766d, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        for (int i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double f = w.dot(X.row(i)) + b;
            // bias is an augmented, regularised coordinate (constant input 1)
            w *= (1.0 - eta * lambda);
            b *= (1.0 - eta * lambda);
            if (spec.task == Task::Classify) {
                const double yi = 2.0 * y(i) - 1.0;  // {0,1} -> {-1,+1}
                if (yi * f < 1.0) {
                    w += eta * yi * X.row(i).transpose();
                    b += eta * yi;
                }
            } else {
                const double err = y(i) - f;
                if (std::abs(err) > spec.svr_epsilon) {
                    const double sign = err > 0.0 ? 1.0 : -1.0;
                    w += eta * sign * X.row(i).transpose();
                    b += eta * sign;
                }
            }
            // project onto the 1/sqrt(lambda) ball; the optimum lies inside
            const double limit = 1.0 / std::sqrt(lambda);
            const double norm = std::sqrt(w.squaredNorm() + b * b);
            if (norm > limit) {
                w *= limit / norm;
                b *= limit / norm;
            }
            if (t > average_from) {
                w_acc += w;
                b_acc += b;
                ++averaged;
            }
        }
    }
    if (averaged > 0) {
        model.weights = w_acc / static_cast<double>(averaged);
        model.bias = b_acc / static_cast<double>(averaged);
    } else {
        model.weights = std::move(w);
        model.bias = b;
    }
    return model;
}

}  // namespace

TrainedModel train_model(const ModelSpec& spec, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw ContractError("train_model: X/y row mismatch");
    if (X.rows() < 2) throw ConfigError("train_model: need at least 2 rows");
    if (spec.task == Task::Classify) {
        bool has0 = false, has1 = false;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y(i) == 0.0) {
                has0 = true;
            } else if (y(i) == 1.0) {
                has1 = true;
            } else {
                throw ContractError("train_model: classification labels must be 0 or 1");
            }
        }
        if (!has0 || !has1) {
            throw ConfigError("train_model: classification needs both classes present");
        }
    }
    switch (spec.family) {
        case ModelFamily::Forest: return train_forest(spec, X, y);
        case ModelFamily::Boosted: return train_boosted(spec, X, y);
        case ModelFamily::Svm: return train_svm(spec, X, y);
    }
    throw ConfigError("train_model: unknown family");
}

Eigen::VectorXd predict_values(const TrainedModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.feature_count) {
        throw ContractError("predict: feature count mismatch (" + std::to_string(X.cols()) +
                            " vs " + std::to_string(model.feature_count) + ")");
    }
    const Eigen::Index n = X.rows();
    Eigen::VectorXd out(n);
    switch (model.family) {
        case ModelFamily::Forest: {
            for (Eigen::Index i = 0; i < n; ++i) {
                double acc = 0.0;
                for (const auto& tree : model.trees) acc += tree.eval(X.row(i));
                out(i) = acc / static_cast<double>(model.trees.size());
            }
            break;
        }
        case ModelFamily::Boosted: {
            for (Eigen::Index i = 0; i < n; ++i) {
                double acc = model.base_score;
                for (const auto& tree : model.trees) acc += model.shrinkage * tree.eval(X.row(i));
                out(i) = acc;
            }
            break;
        }
        case ModelFamily::Svm: {
            out = X * model.weights;
            out.array() += model.bias;
            break;
        }
    }
    return out;
}

std::vector<int> predict_labels(const TrainedModel& model, const Eigen::MatrixXd& X) {
    if (model.task != Task::Classify) throw ContractError("predict_labels on a regression model");
    std::vector<int> labels(static_cast<std::size_t>(X.rows()));
    if (model.family == ModelFamily::Forest) {
        // majority vote over trees; a tie goes to the high class
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            int votes1 = 0;
            for (const auto& tree : model.trees) {
                if (tree.eval(X.row(i)) >= 0.5) ++votes1;
            }
            labels[static_cast<std::size_t>(i)] =
                2 * votes1 >= static_cast<int>(model.trees.size()) ? 1 : 0;
        }
        return labels;
    }
    const Eigen::VectorXd scores = predict_values(model, X);
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        labels[static_cast<std::size_t>(i)] = scores(i) >= 0.0 ? 1 : 0;
    }
    return labels;
}

double svm_objective(const Eigen::VectorXd& w, double bias, double lambda,
                     const Eigen::MatrixXd& X, const Eigen::VectorXd& y01) {
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double yi = 2.0 * y01(i) - 1.0;
        hinge += std::max(0.0, 1.0 - yi * (w.dot(X.row(i)) + bias));
    }
    return 0.5 * lambda * (w.squaredNorm() + bias * bias) +
           hinge / static_cast<double>(X.rows());
}

namespace {

Eigen::MatrixXd trees_to_matrix(const std::vector<Tree>& trees) {
    std::size_t total = 0;
    for (const auto& t : trees) total += t.nodes.size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(total), 7);
    Eigen::Index r = 0;
    for (std::size_t t = 0; t < trees.size(); ++t) {
        for (const auto& n : trees[t].nodes) {
            m(r, 0) = static_cast<double>(t);
            m(r, 1) = static_cast<double>(n.feature);
            m(r, 2) = n.threshold;
            m(r, 3) = static_cast<double>(n.left);
            m(r, 4) = static_cast<double>(n.right);
            m(r, 5) = n.value;
            m(r, 6) = n.leaf ? 1.0 : 0.0;
            ++r;
        }
    }
    return m;
}

std::vector<Tree> trees_from_matrix(const Eigen::MatrixXd& m, int tree_count) {
    std::vector<Tree> trees(static_cast<std::size_t>(tree_count));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const int t = static_cast<int>(m(r, 0));
        if (t < 0 || t >= tree_count) throw DataError("model container: tree index out of range");
        TreeNode n;
        n.feature = static_cast<int>(m(r, 1));
        n.threshold = m(r, 2);
        n.left = static_cast<int>(m(r, 3));
        n.right = static_cast<int>(m(r, 4));
        n.value = m(r, 5);
        n.leaf = m(r, 6) != 0.0;
        trees[static_cast<std::size_t>(t)].nodes.push_back(n);
    }
    return trees;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
    Container c;
    c.kind = kKindModel;
    c.meta["family"] = to_string(model.family);
    c.meta["task"] = to_string(model.task);
    c.meta["feature_count"] = model.feature_count;
    c.meta["base_score"] = model.base_score;
    c.meta["shrinkage"] = model.shrinkage;
    c.meta["bias"] = model.bias;
    c.meta["tree_count"] = model.trees.size();
    c.meta["normaliser_fingerprint"] = model.normaliser_fingerprint;
    if (!model.trees.empty()) c.matrices["trees"] = trees_to_matrix(model.trees);
    if (model.weights.size() > 0) c.matrices["weights"] = model.weights;
    write_container(path, c);
}

TrainedModel load_model(const std::string& path) {
    Container c = read_container(path, kKindModel);
    TrainedModel model;
    try {
        model.family = family_from_string(c.meta.at("family").get<std::string>());
        model.task = task_from_string(c.meta.at("task").get<std::string>());
        model.feature_count = c.meta.at("feature_count").get<int>();
        model.base_score = c.meta.at("base_score").get<double>();
        model.shrinkage = c.meta.at("shrinkage").get<double>();
        model.bias = c.meta.at("bias").get<double>();
        model.normaliser_fingerprint = c.meta.at("normaliser_fingerprint").get<std::uint64_t>();
        const int tree_count = c.meta.at("tree_count").get<int>();
        if (tree_count > 0) model.trees = trees_from_matrix(c.matrices.at("trees"), tree_count);
        if (c.matrices.count("weights") > 0) model.weights = c.matrices.at("weights");
    } catch (const std::out_of_range&) {
        throw DataError("model container is missing required fields: " + path);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model container field error in " + path + ": " + e.what());
    }
    return model;
}

}  // namespace kineme
