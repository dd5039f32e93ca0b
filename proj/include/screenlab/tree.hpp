#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "screenlab/data_model.hpp"
#include "screenlab/random.hpp"

namespace screenlab {

/// Class counts indexed by Label (No = 0, Yes = 1).
using ClassCounts = std::array<std::size_t, 2>;

/// 1 - sum p_i^2. Throws std::invalid_argument on an empty node.
double gini(std::span<const std::size_t> counts);
/// -sum p_i log2 p_i, in bits. Throws std::invalid_argument on an empty node.
double entropy(std::span<const std::size_t> counts);
/// Information gain over split information; 0 when split information is 0.
double gain_ratio(std::span<const std::size_t> parent,
                  std::span<const std::vector<std::size_t>> children);

enum class Criterion { Gini, GainRatio };

struct TreeParams {
  Criterion criterion = Criterion::Gini;
  std::size_t min_leaf = 2;
  std::optional<std::size_t> max_depth;
  bool prune = false;
  double prune_confidence = 0.25;

  /// Gini, binary splits, unpruned.
  static TreeParams cart();
  /// Gain ratio, multiway categorical splits, pessimistic pruning at 0.25.
  static TreeParams c45();
  void validate() const;
};

enum class SplitKind { Threshold, Binary, Categorical };

struct SplitRule {
  SplitKind kind = SplitKind::Binary;
  /// Split column; for categorical splits the first member of the group.
  std::size_t column = 0;
  /// Threshold splits send x <= threshold to branch 0.
  double threshold = 0.0;
  /// Categorical splits: branch i takes rows whose one-hot column
  /// branch_columns[i] is set. Rows matching none take default_branch.
  std::vector<std::size_t> branch_columns;
  std::size_t default_branch = 0;

  std::size_t branch_count() const;
  std::size_t route(std::span<const double> row) const;
  bool operator==(const SplitRule&) const = default;
};

struct SplitCandidate {
  SplitRule rule;
  double score = 0.0;  // Gini decrease or gain ratio
};

struct TreeNode {
  ClassCounts counts{};
  Label predicted = Label::Yes;
  std::optional<SplitRule> split;
  std::vector<std::size_t> children;  // node indices, one per branch

  bool is_leaf() const { return children.empty(); }
  std::size_t total() const { return counts[0] + counts[1]; }
  bool operator==(const TreeNode&) const = default;
};

/// Argmax of the counts, ties to Yes.
Label majority(const ClassCounts& counts);

/// Restricts each node's split search to `mtry` columns drawn without replacement.
struct FeatureSampler {
  std::size_t mtry;
  Rng* rng;
};

/// A fitted tree. Node 0 is the root; children always have larger indices.
struct TreeModel {
  Schema schema;
  TreeParams params;
  std::vector<TreeNode> nodes;

  std::string kind() const { return params.criterion == Criterion::Gini ? "cart" : "c45"; }
  std::size_t leaf_for(std::span<const double> row) const;
  std::size_t leaf_count() const;
  std::size_t depth() const;
  bool operator==(const TreeModel& other) const {
    return schema == other.schema && nodes == other.nodes;
  }
};

/// Best admissible split of `rows` among `candidate_columns` (all columns when
/// empty). Ties go to the lowest column index, then the lowest threshold.
std::optional<SplitCandidate> best_split(const FeatureMatrix& matrix,
                                         std::span<const std::size_t> rows,
                                         const TreeParams& params,
                                         std::span<const std::size_t> candidate_columns = {});

TreeModel fit_tree(const FeatureMatrix& train, const TreeParams& params);
/// Grows on `rows` (duplicates allowed, e.g. a bootstrap sample).
TreeModel fit_tree(const FeatureMatrix& train, std::span<const std::size_t> rows,
                   const TreeParams& params, FeatureSampler* sampler = nullptr);

/// Estimated errors N * U_CF(E, N) if `node` were a leaf.
double leaf_pessimistic_errors(const TreeNode& node, double confidence);
/// Sum of leaf estimates over the subtree rooted at `node`.
double subtree_pessimistic_errors(const TreeModel& model, std::size_t node, double confidence);

/// Bottom-up subtree replacement: a subtree becomes a leaf when the leaf's
/// pessimistic error estimate does not exceed the subtree's.
void prune_pessimistic(TreeModel& model, double confidence);

/// Leaf majority class and Laplace-smoothed Yes share (yes + 1) / (total + 2).
/// Throws SchemaMismatch when the row width differs from the schema.
Prediction predict_tree(const TreeModel& model, std::span<const double> row);

}  // namespace screenlab
