#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ictree/dataset.hpp"
#include "ictree/tree.hpp"

namespace ictree {

/// One row of the evaluation protocol: model size plus train/test average
/// log-likelihood. An absent average means every row of that set had zero
/// likelihood.
struct EvalReport {
  std::string dataset;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double min_samples_leaf_fraction = 0.0;
  std::int64_t model_size = 0;
  Eigen::Index leaves = 0;
  std::optional<double> avg_train_ll;
  std::optional<double> avg_test_ll;
  double zero_fraction_train = 0.0;
  double zero_fraction_test = 0.0;
  double wall_seconds = 0.0;
};

/// Trains on the train part and measures both parts. n/m describe the full
/// dataset the parts came from.
EvalReport evaluate(const std::string& name, const Dataset& train, const Dataset& test,
                    const Hyperparams& hp, std::uint64_t seed);

/// Report for an already trained model.
EvalReport evaluate_trained(const std::string& name, const IcTreeModel& model,
                            const Dataset& train, const Dataset& test, double wall_seconds);

/// Runs the min-leaf sweep (default {0.9, 0.4, 0.2, 0.1, 0.05, 0.01}) on a
/// fixed train/test split, one report per setting.
std::vector<EvalReport> eval_sweep(const std::string& name, const Dataset& data,
                                   const std::vector<double>& fractions, const Hyperparams& base,
                                   double test_fraction, std::uint64_t seed);

std::vector<double> default_sweep();

nlohmann::json report_to_json(const EvalReport& report);
std::string report_table_header();
std::string report_table_row(const EvalReport& report);

}  // namespace ictree
