#include "screenlab/tree.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "screenlab/error.hpp"
#include "screenlab/stats.hpp"

namespace screenlab {

namespace {

// A split must improve the criterion by more than this to be admissible.
constexpr double kMinImprovement = 1e-12;
// Scores closer than this count as tied; the earlier candidate wins.
constexpr double kTieTolerance = 1e-12;

std::size_t total_of(std::span<const std::size_t> counts) {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

double criterion_score(Criterion criterion, const ClassCounts& parent,
                       std::span<const std::vector<std::size_t>> children) {
  if (criterion == Criterion::GainRatio) return gain_ratio(parent, children);
  const double n = static_cast<double>(parent[0] + parent[1]);
  double weighted = 0.0;
  for (const auto& child : children) {
    weighted += static_cast<double>(total_of(child)) / n * gini(child);
  }
  return gini(parent) - weighted;
}

ClassCounts count_rows(const FeatureMatrix& matrix, std::span<const std::size_t> rows) {
  ClassCounts counts{};
  for (std::size_t r : rows) ++counts[static_cast<int>(matrix.labels[r])];
  return counts;
}

}  // namespace

double gini(std::span<const std::size_t> counts) {
  const std::size_t total = total_of(counts);
  if (total == 0) throw std::invalid_argument("gini of an empty node");
  double sum_sq = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

double entropy(std::span<const std::size_t> counts) {
  const std::size_t total = total_of(counts);
  if (total == 0) throw std::invalid_argument("entropy of an empty node");
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

double gain_ratio(std::span<const std::size_t> parent,
                  std::span<const std::vector<std::size_t>> children) {
  const double n = static_cast<double>(total_of(parent));
  double remainder = 0.0;
  std::vector<std::size_t> sizes;
  for (const auto& child : children) {
    const std::size_t size = total_of(child);
    sizes.push_back(size);
    if (size > 0) remainder += static_cast<double>(size) / n * entropy(child);
  }
  const double split_info = entropy(sizes);
  if (split_info <= 0.0) return 0.0;
  return (entropy(parent) - remainder) / split_info;
}

TreeParams TreeParams::cart() { return TreeParams{}; }

TreeParams TreeParams::c45() {
  TreeParams params;
  params.criterion = Criterion::GainRatio;
  params.prune = true;
  return params;
}

void TreeParams::validate() const {
  if (min_leaf < 1) throw ValidationError("min_leaf must be >= 1");
  if (max_depth && *max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (!(prune_confidence > 0.0 && prune_confidence < 1.0)) {
    throw ValidationError("prune_confidence must lie in (0, 1)");
  }
}

std::size_t SplitRule::branch_count() const {
  return kind == SplitKind::Categorical ? branch_columns.size() : 2;
}

std::size_t SplitRule::route(std::span<const double> row) const {
  switch (kind) {
    case SplitKind::Threshold: return row[column] <= threshold ? 0 : 1;
    case SplitKind::Binary: return row[column] > 0.5 ? 1 : 0;
    case SplitKind::Categorical:
      for (std::size_t b = 0; b < branch_columns.size(); ++b) {
        if (row[branch_columns[b]] > 0.5) return b;
      }
      return default_branch;
  }
  return 0;
}

Label majority(const ClassCounts& counts) {
  return counts[static_cast<int>(Label::Yes)] >= counts[static_cast<int>(Label::No)] ? Label::Yes
                                                                                      : Label::No;
}

std::size_t TreeModel::leaf_for(std::span<const double> row) const {
  std::size_t node = 0;
  while (!nodes[node].is_leaf()) node = nodes[node].children[nodes[node].split->route(row)];
  return node;
}

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t TreeModel::depth() const {
  std::vector<std::size_t> depths(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t child : nodes[i].children) depths[child] = depths[i] + 1;
    deepest = std::max(deepest, depths[i]);
  }
  return deepest;
}

std::optional<SplitCandidate> best_split(const FeatureMatrix& matrix,
                                         std::span<const std::size_t> rows,
                                         const TreeParams& params,
                                         std::span<const std::size_t> candidate_columns) {
  const std::size_t n = rows.size();
  if (n < 2 * params.min_leaf) return std::nullopt;
  const ClassCounts parent = count_rows(matrix, rows);
  const Schema& schema = matrix.schema;

  std::vector<std::size_t> columns(candidate_columns.begin(), candidate_columns.end());
  if (columns.empty()) {
    columns.resize(schema.size());
    std::iota(columns.begin(), columns.end(), 0);
  } else {
    std::sort(columns.begin(), columns.end());
  }

  std::optional<SplitCandidate> best;
  auto consider = [&best](SplitRule rule, double score) {
    if (!(score > kMinImprovement)) return;
    if (!best || score > best->score + kTieTolerance) best = SplitCandidate{std::move(rule), score};
  };
  auto two_way = [&](const ClassCounts& left) {
    std::vector<std::vector<std::size_t>> children{
        {left[0], left[1]}, {parent[0] - left[0], parent[1] - left[1]}};
    return criterion_score(params.criterion, parent, children);
  };

  std::vector<bool> group_done(schema.attributes().size(), false);
  std::vector<std::pair<double, Label>> sorted;
  for (std::size_t c : columns) {
    const ColumnKind kind = schema[c].kind;
    if (kind == ColumnKind::OneHot && params.criterion == Criterion::GainRatio) {
      const std::size_t attribute = schema.attribute_of(c);
      if (group_done[attribute]) continue;
      group_done[attribute] = true;
      const auto& members = schema.attributes()[attribute].columns;
      std::vector<ClassCounts> per_member(members.size(), ClassCounts{});
      ClassCounts unassigned{};
      for (std::size_t r : rows) {
        const int label = static_cast<int>(matrix.labels[r]);
        auto hit = std::find_if(members.begin(), members.end(),
                                [&](std::size_t col) { return matrix.at(r, col) > 0.5; });
        if (hit == members.end()) ++unassigned[label];
        else ++per_member[static_cast<std::size_t>(hit - members.begin())][label];
      }
      SplitRule rule;
      rule.kind = SplitKind::Categorical;
      rule.column = members.front();
      std::vector<std::vector<std::size_t>> children;
      for (std::size_t m = 0; m < members.size(); ++m) {
        if (per_member[m][0] + per_member[m][1] == 0) continue;
        rule.branch_columns.push_back(members[m]);
        children.push_back({per_member[m][0], per_member[m][1]});
      }
      if (children.size() < 2) continue;
      std::size_t largest = 0;
      for (std::size_t b = 1; b < children.size(); ++b) {
        if (total_of(children[b]) > total_of(children[largest])) largest = b;
      }
      rule.default_branch = largest;
      children[largest][0] += unassigned[0];
      children[largest][1] += unassigned[1];
      const bool small_branch = std::any_of(children.begin(), children.end(), [&](const auto& ch) {
        return total_of(ch) < params.min_leaf;
      });
      if (small_branch) continue;
      consider(std::move(rule), gain_ratio(parent, children));
    } else if (kind == ColumnKind::Numeric) {
      sorted.clear();
      for (std::size_t r : rows) sorted.emplace_back(matrix.at(r, c), matrix.labels[r]);
      std::stable_sort(sorted.begin(), sorted.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      ClassCounts left{};
      for (std::size_t i = 0; i + 1 < n; ++i) {
        ++left[static_cast<int>(sorted[i].second)];
        if (!(sorted[i].first < sorted[i + 1].first)) continue;
        const std::size_t n_left = i + 1;
        if (n_left < params.min_leaf || n - n_left < params.min_leaf) continue;
        SplitRule rule;
        rule.kind = SplitKind::Threshold;
        rule.column = c;
        rule.threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
        consider(std::move(rule), two_way(left));
      }
    } else {
      ClassCounts left{};
      for (std::size_t r : rows) {
        if (!(matrix.at(r, c) > 0.5)) ++left[static_cast<int>(matrix.labels[r])];
      }
      const std::size_t n_left = left[0] + left[1];
      if (n_left < params.min_leaf || n - n_left < params.min_leaf) continue;
      SplitRule rule;
      rule.kind = SplitKind::Binary;
      rule.column = c;
      consider(std::move(rule), two_way(left));
    }
  }
  return best;
}

namespace {

class Grower {
 public:
  Grower(const FeatureMatrix& matrix, const TreeParams& params, FeatureSampler* sampler,
         TreeModel& model)
      : matrix_(matrix), params_(params), sampler_(sampler), model_(model) {}

  std::size_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    const std::size_t index = model_.nodes.size();
    const ClassCounts counts = count_rows(matrix_, rows);
    model_.nodes.emplace_back().counts = counts;
    model_.nodes.back().predicted = majority(counts);

    const bool pure = counts[0] == 0 || counts[1] == 0;
    const bool depth_capped = params_.max_depth && depth >= *params_.max_depth;
    if (pure || depth_capped || rows.size() < 2 * params_.min_leaf) return index;

    std::vector<std::size_t> candidates;
    if (sampler_ != nullptr && sampler_->mtry < matrix_.cols()) {
      candidates.resize(matrix_.cols());
      std::iota(candidates.begin(), candidates.end(), 0);
      // Partial Fisher-Yates: the first mtry entries are a uniform draw.
      for (std::size_t i = 0; i < sampler_->mtry; ++i) {
        std::swap(candidates[i], candidates[i + sampler_->rng->index(candidates.size() - i)]);
      }
      candidates.resize(sampler_->mtry);
    }
    auto candidate = best_split(matrix_, rows, params_, candidates);
    if (!candidate) return index;

    const SplitRule& rule = candidate->rule;
    std::vector<std::vector<std::size_t>> branches(rule.branch_count());
    for (std::size_t r : rows) branches[rule.route(matrix_.row(r))].push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    model_.nodes[index].split = rule;
    for (auto& branch : branches) {
      const std::size_t child = grow(std::move(branch), depth + 1);
      model_.nodes[index].children.push_back(child);
    }
    return index;
  }

 private:
  const FeatureMatrix& matrix_;
  const TreeParams& params_;
  FeatureSampler* sampler_;
  TreeModel& model_;
};

double prune_node(TreeModel& model, std::size_t index, double confidence) {
  if (model.nodes[index].is_leaf()) return leaf_pessimistic_errors(model.nodes[index], confidence);
  double subtree = 0.0;
  for (std::size_t child : model.nodes[index].children) subtree += prune_node(model, child, confidence);
  const double as_leaf = leaf_pessimistic_errors(model.nodes[index], confidence);
  if (as_leaf <= subtree) {
    model.nodes[index].children.clear();
    model.nodes[index].split.reset();
    return as_leaf;
  }
  return subtree;
}

void compact(TreeModel& model) {
  std::vector<TreeNode> kept;
  auto copy = [&](auto&& self, std::size_t index) -> std::size_t {
    const std::size_t at = kept.size();
    kept.push_back(model.nodes[index]);
    kept[at].children.clear();
    for (std::size_t child : model.nodes[index].children) {
      const std::size_t moved = self(self, child);
      kept[at].children.push_back(moved);
    }
    return at;
  };
  copy(copy, 0);
  model.nodes = std::move(kept);
}

}  // namespace

TreeModel fit_tree(const FeatureMatrix& train, const TreeParams& params) {
  std::vector<std::size_t> rows(train.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return fit_tree(train, rows, params);
}

TreeModel fit_tree(const FeatureMatrix& train, std::span<const std::size_t> rows,
                   const TreeParams& params, FeatureSampler* sampler) {
  params.validate();
  if (rows.empty()) throw ValidationError("cannot fit a tree on an empty training set");
  TreeModel model;
  model.schema = train.schema;
  model.params = params;
  Grower grower(train, params, sampler, model);
  grower.grow(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
  if (params.prune) prune_pessimistic(model, params.prune_confidence);
  return model;
}

double leaf_pessimistic_errors(const TreeNode& node, double confidence) {
  const double n = static_cast<double>(node.total());
  const double errors = n - static_cast<double>(node.counts[static_cast<int>(node.predicted)]);
  return n * stats::pessimistic_error_rate(errors, n, confidence);
}

double subtree_pessimistic_errors(const TreeModel& model, std::size_t node, double confidence) {
  const TreeNode& current = model.nodes[node];
  if (current.is_leaf()) return leaf_pessimistic_errors(current, confidence);
  double total = 0.0;
  for (std::size_t child : current.children) total += subtree_pessimistic_errors(model, child, confidence);
  return total;
}

void prune_pessimistic(TreeModel& model, double confidence) {
  if (model.nodes.empty()) return;
  prune_node(model, 0, confidence);
  compact(model);
}

Prediction predict_tree(const TreeModel& model, std::span<const double> row) {
  if (row.size() != model.schema.size()) {
    throw SchemaMismatch("row has " + std::to_string(row.size()) + " columns, model expects " +
                         std::to_string(model.schema.size()));
  }
  const TreeNode& leaf = model.nodes[model.leaf_for(row)];
  assert(leaf.total() > 0);
  const double yes = static_cast<double>(leaf.counts[static_cast<int>(Label::Yes)]);
  return {leaf.predicted, (yes + 1.0) / (static_cast<double>(leaf.total()) + 2.0)};
}

}  // namespace screenlab
