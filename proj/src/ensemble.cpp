#include "screenlab/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "screenlab/error.hpp"
#include "screenlab/random.hpp"

namespace screenlab {

TreeParams EnsembleParams::forest_tree_params() {
  TreeParams params = TreeParams::cart();
  params.min_leaf = 1;
  params.prune = false;
  return params;
}

EnsembleParams EnsembleParams::bagging(std::uint64_t seed) {
  EnsembleParams params;
  params.n_trees = 50;
  params.seed = seed;
  return params;
}

EnsembleParams EnsembleParams::random_forest(std::size_t columns, std::uint64_t seed) {
  EnsembleParams params;
  params.n_trees = 500;
  params.mtry = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(columns)))));
  params.seed = seed;
  return params;
}

void EnsembleParams::validate(std::size_t columns) const {
  if (n_trees < 1) throw ValidationError("n_trees must be >= 1");
  if (mtry && (*mtry < 1 || *mtry > columns)) {
    throw ValidationError("mtry must lie in 1.." + std::to_string(columns));
  }
  base.validate();
}

std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("bootstrap sample of an empty set");
  Rng rng(seed);
  std::vector<std::size_t> sample(n);
  for (auto& index : sample) index = rng.index(n);
  return sample;
}

std::uint64_t tree_seed(std::uint64_t master, std::size_t index) {
  return derive_seed(master, static_cast<std::uint64_t>(index));
}

EnsembleModel fit_ensemble(const FeatureMatrix& train, const EnsembleParams& params) {
  params.validate(train.cols());
  const std::size_t n = train.rows();
  if (n == 0) throw ValidationError("cannot fit an ensemble on an empty training set");

  EnsembleModel model;
  model.schema = train.schema;
  model.params = params;
  model.trees.resize(params.n_trees);
  std::vector<std::vector<bool>> in_bag(params.n_trees);

  auto fit_one = [&](std::size_t t) {
    const std::uint64_t seed = tree_seed(params.seed, t);
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      rows = bootstrap_sample(n, derive_seed(seed, 0));
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    in_bag[t].assign(n, false);
    for (std::size_t r : rows) in_bag[t][r] = true;
    Rng feature_rng(derive_seed(seed, 1));
    FeatureSampler sampler{params.mtry.value_or(train.cols()), &feature_rng};
    model.trees[t] = fit_tree(train, rows, params.base, params.mtry ? &sampler : nullptr);
  };

  std::size_t workers = params.threads == 0 ? std::thread::hardware_concurrency() : params.threads;
  workers = std::clamp<std::size_t>(workers, 1, params.n_trees);
  if (workers == 1) {
    for (std::size_t t = 0; t < params.n_trees; ++t) fit_one(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < params.n_trees; t = next++) {
          try {
            fit_one(t);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& thread : pool) thread.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::size_t voted = 0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t yes = 0;
    std::size_t total = 0;
    for (std::size_t t = 0; t < params.n_trees; ++t) {
      if (in_bag[t][r]) continue;
      ++total;
      if (predict_tree(model.trees[t], train.row(r)).label == Label::Yes) ++yes;
    }
    if (total == 0) continue;
    ++voted;
    const Label vote = 2 * yes >= total ? Label::Yes : Label::No;
    if (vote == train.labels[r]) ++correct;
  }
  if (voted > 0) model.oob_accuracy = static_cast<double>(correct) / static_cast<double>(voted);
  return model;
}

Prediction predict_ensemble(const EnsembleModel& model, std::span<const double> row) {
  if (row.size() != model.schema.size()) {
    throw SchemaMismatch("row has " + std::to_string(row.size()) + " columns, model expects " +
                         std::to_string(model.schema.size()));
  }
  std::size_t yes = 0;
  for (const auto& tree : model.trees) {
    if (predict_tree(tree, row).label == Label::Yes) ++yes;
  }
  const std::size_t n = model.trees.size();
  return {2 * yes >= n ? Label::Yes : Label::No, static_cast<double>(yes) / static_cast<double>(n)};
}

}  // namespace screenlab
