#include "ictree/report.hpp"

#include <chrono>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "ictree/inference.hpp"

namespace ictree {

namespace {

std::string fmt6(double value) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

std::string fmt_optional(const std::optional<double>& value) {
  return value ? fmt6(*value) : "-";
}

}  // namespace

EvalReport evaluate_trained(const std::string& name, const IcTreeModel& model,
                            const Dataset& train, const Dataset& test, double wall_seconds) {
  EvalReport report;
  report.dataset = name;
  report.n = train.n() + test.n();
  report.m = train.m();
  report.min_samples_leaf_fraction = model.hyperparams().min_samples_leaf_fraction;

  const LogLikelihoodReport train_ll = avg_log_likelihood(model, train);
  const LogLikelihoodReport test_ll = avg_log_likelihood(model, test);
  report.model_size = model.param_count();
  report.leaves = model.leaf_count();
  report.avg_train_ll = train_ll.avg;
  report.avg_test_ll = test_ll.avg;
  report.zero_fraction_train = train_ll.zero_fraction;
  report.zero_fraction_test = test_ll.zero_fraction;
  report.wall_seconds = wall_seconds;
  return report;
}

EvalReport evaluate(const std::string& name, const Dataset& train, const Dataset& test,
                    const Hyperparams& hp, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const IcTreeModel model = fit(train, hp, seed);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return evaluate_trained(name, model, train, test, wall);
}

std::vector<EvalReport> eval_sweep(const std::string& name, const Dataset& data,
                                   const std::vector<double>& fractions, const Hyperparams& base,
                                   double test_fraction, std::uint64_t seed) {
  const auto [train, test] = split(data, test_fraction, seed);
  std::vector<EvalReport> reports;
  for (const double fraction : fractions) {
    Hyperparams hp = base;
    hp.min_samples_leaf_fraction = fraction;
    reports.push_back(evaluate(name, train, test, hp, seed));
  }
  return reports;
}

std::vector<double> default_sweep() { return {0.9, 0.4, 0.2, 0.1, 0.05, 0.01}; }

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json out;
  out["dataset"] = report.dataset;
  out["n"] = report.n;
  out["m"] = report.m;
  out["min_samples_leaf_fraction"] = report.min_samples_leaf_fraction;
  out["model_size"] = report.model_size;
  out["leaves"] = report.leaves;
  out["avg_train_ll"] = report.avg_train_ll ? nlohmann::json(*report.avg_train_ll)
                                            : nlohmann::json(nullptr);
  out["avg_test_ll"] =
      report.avg_test_ll ? nlohmann::json(*report.avg_test_ll) : nlohmann::json(nullptr);
  out["zero_fraction_train"] = report.zero_fraction_train;
  out["zero_fraction_test"] = report.zero_fraction_test;
  out["wall_seconds"] = report.wall_seconds;
  return out;
}

std::string report_table_header() {
  return "dataset          n      m  min_leaf  size    leaves  train_ll    test_ll     0_test  "
         "time_s";
}

std::string report_table_row(const EvalReport& report) {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer), "%-15s %-6lld %-2lld %-9s %-7lld %-7lld %-11s %-11s %-7s %s",
                report.dataset.c_str(), static_cast<long long>(report.n),
                static_cast<long long>(report.m), fmt6(report.min_samples_leaf_fraction).c_str(),
                static_cast<long long>(report.model_size), static_cast<long long>(report.leaves),
                fmt_optional(report.avg_train_ll).c_str(),
                fmt_optional(report.avg_test_ll).c_str(),
                (fmt6(report.zero_fraction_test * 100.0) + "%").c_str(),
                fmt6(report.wall_seconds).c_str());
  return buffer;
}

}  // namespace ictree
