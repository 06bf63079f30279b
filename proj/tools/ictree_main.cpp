// Command-line surface for training, evaluating and querying IC-Tree models.
//
// Exit codes: 0 success, 2 usage error, 3 inconsistent evidence, 4 data error.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "ictree/inference.hpp"
#include "ictree/report.hpp"
#include "ictree/serialize.hpp"
#include "ictree/synthetic.hpp"

namespace {

using namespace ictree;

constexpr int kExitUsage = 2;
constexpr int kExitEvidence = 3;
constexpr int kExitData = 4;

struct TrainFlags {
  std::string data_path;
  std::string schema_path;
  double min_leaf = 0.2;
  int max_depth = -1;
  int resolution = 16;
  int ica_iters = 1000;
  double ica_tol = 1e-4;
  double min_improvement = 1e-4;
  bool baseline = false;
  std::uint64_t seed = 0;
  double test_fraction = 0.1;
};

Hyperparams to_hyperparams(const TrainFlags& flags) {
  Hyperparams hp;
  hp.min_samples_leaf_fraction = flags.min_leaf;
  hp.max_depth = flags.max_depth;
  hp.qpd_resolution = flags.resolution;
  hp.ica_max_iter = flags.ica_iters;
  hp.ica_tol = flags.ica_tol;
  hp.min_improvement = flags.min_improvement;
  hp.baseline_mode = flags.baseline;
  return hp;
}

void add_train_flags(CLI::App* cmd, TrainFlags& flags) {
  cmd->add_option("--data", flags.data_path, "training data (CSV with header)")->required();
  cmd->add_option("--schema", flags.schema_path, "sidecar schema JSON with column kinds");
  cmd->add_option("--min-leaf", flags.min_leaf, "min samples per leaf as a fraction of n");
  cmd->add_option("--max-depth", flags.max_depth, "maximum depth (-1: unbounded)");
  cmd->add_option("--resolution", flags.resolution, "quantile levels per leaf distribution");
  cmd->add_option("--ica-iters", flags.ica_iters, "FastICA iteration budget");
  cmd->add_option("--ica-tol", flags.ica_tol, "FastICA convergence tolerance");
  cmd->add_option("--min-improvement", flags.min_improvement, "minimal relative split gain");
  cmd->add_flag("--baseline", flags.baseline, "identity transforms everywhere (plain JPT)");
  cmd->add_option("--seed", flags.seed, "random seed");
  cmd->add_option("--test-fraction", flags.test_fraction, "held-out fraction for the report");
}

Dataset load_data(const std::string& path, const std::string& schema_path) {
  std::optional<std::vector<ColumnSpec>> schema;
  if (!schema_path.empty()) schema = load_schema(schema_path);
  return load_csv(path, schema);
}

/// Inline JSON when the value starts with '{', otherwise a file path.
nlohmann::json parse_json_flag(const std::string& value) {
  if (!value.empty() && value.front() == '{') return nlohmann::json::parse(value);
  std::ifstream file(value);
  if (!file) throw std::runtime_error("cannot open " + value);
  return nlohmann::json::parse(file);
}

Evidence parse_evidence(const IcTreeModel& model, const std::string& flag) {
  if (flag.empty()) return Evidence::none(model);
  return evidence_from_json(model, parse_json_flag(flag));
}

std::string dataset_name(const std::string& path) {
  const auto slash = path.find_last_of('/');
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return name;
}

int cmd_train(const TrainFlags& flags, const std::string& out_path) {
  const Dataset data = load_data(flags.data_path, flags.schema_path);
  Dataset train = data;
  std::optional<Dataset> test;
  if (flags.test_fraction > 0.0 && data.n() >= 2) {
    auto [tr, te] = split(data, flags.test_fraction, flags.seed);
    train = std::move(tr);
    test = std::move(te);
  }

  const auto start = std::chrono::steady_clock::now();
  const IcTreeModel model = fit(train, to_hyperparams(flags), flags.seed);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_model(model, out_path);

  const EvalReport report = evaluate_trained(dataset_name(flags.data_path), model, train,
                                             test ? *test : train, wall);
  std::cout << report_table_header() << "\n" << report_table_row(report) << "\n";
  return 0;
}

int cmd_eval(const TrainFlags& flags, const std::string& name_flag,
             const std::vector<double>& sweep, const std::string& json_path) {
  const Dataset data = load_data(flags.data_path, flags.schema_path);
  const std::string name = name_flag.empty() ? dataset_name(flags.data_path) : name_flag;
  const std::vector<double> fractions = sweep.empty() ? default_sweep() : sweep;

  const auto reports =
      eval_sweep(name, data, fractions, to_hyperparams(flags), flags.test_fraction, flags.seed);

  std::cout << report_table_header() << "\n";
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& report : reports) {
    std::cout << report_table_row(report) << "\n";
    doc.push_back(report_to_json(report));
  }
  if (!json_path.empty()) {
    std::ofstream file(json_path);
    if (!file) throw std::runtime_error("cannot open " + json_path);
    file << doc.dump(2) << "\n";
  }
  return 0;
}

int cmd_sample(const std::string& model_path, Eigen::Index n, std::uint64_t seed,
               int max_retries, const std::string& out_path) {
  const IcTreeModel model = load_model(model_path);
  Rng rng(seed);
  const SampleResult result = sample(model, n, rng, max_retries);
  const Dataset drawn(model.columns(), result.rows);
  if (out_path.empty())
    save_csv(drawn, std::cout);
  else
    save_csv(drawn, out_path);
  std::cerr << "accepted " << result.rows.rows() << ", discarded " << result.discarded << "\n";
  return 0;
}

int cmd_infer(const std::string& model_path, const std::string& evidence_flag, bool marginal,
              const std::vector<int>& moment_orders, Eigen::Index n, std::uint64_t seed) {
  const IcTreeModel model = load_model(model_path);
  const Evidence ev = parse_evidence(model, evidence_flag);
  Rng rng(seed);
  nlohmann::json doc;
  if (marginal) {
    const MarginalEstimate est = marginal_probability(model, ev, n, rng);
    doc["estimate"] = est.estimate;
    doc["std_error"] = est.std_error;
    doc["n_samples"] = est.n_samples;
    doc["consistent"] = est.consistent;
  } else {
    const MomentsReport report = conditional_moments(model, ev, moment_orders, n, rng);
    doc["orders"] = report.orders;
    doc["accepted"] = report.accepted;
    doc["drawn"] = report.drawn;
    doc["columns"] = nlohmann::json::object();
    const auto& num_cols = model.numeric_columns();
    for (std::size_t k = 0; k < num_cols.size(); ++k) {
      nlohmann::json entries = nlohmann::json::array();
      for (std::size_t o = 0; o < report.orders.size(); ++o) {
        entries.push_back({{"order", report.orders[o]},
                           {"value", report.moments[k][o].value},
                           {"std_error", report.moments[k][o].std_error}});
      }
      doc["columns"][model.columns()[static_cast<std::size_t>(num_cols[k])].name] =
          std::move(entries);
    }
  }
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_mpe(const std::string& model_path, const std::string& evidence_flag) {
  const IcTreeModel model = load_model(model_path);
  std::optional<Evidence> ev;
  if (!evidence_flag.empty()) ev = parse_evidence(model, evidence_flag);
  const MpeResult result = mpe(model, ev);

  nlohmann::json doc;
  doc["leaf"] = result.leaf;
  doc["density"] = result.density;
  doc["representative"] = nlohmann::json::object();
  for (std::size_t j = 0; j < model.columns().size(); ++j) {
    const ColumnSpec& spec = model.columns()[j];
    const double value = result.representative(static_cast<Eigen::Index>(j));
    if (spec.kind == ColumnKind::Numeric)
      doc["representative"][spec.name] = value;
    else
      doc["representative"][spec.name] = spec.categories[static_cast<std::size_t>(value)];
  }
  doc["numeric_columns"] = nlohmann::json::array();
  for (const auto col : model.numeric_columns())
    doc["numeric_columns"].push_back(model.columns()[static_cast<std::size_t>(col)].name);
  doc["region_vertices"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < result.region_vertices.rows(); ++i) {
    nlohmann::json vertex = nlohmann::json::array();
    for (Eigen::Index j = 0; j < result.region_vertices.cols(); ++j)
      vertex.push_back(result.region_vertices(i, j));
    doc["region_vertices"].push_back(std::move(vertex));
  }
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_synth(const std::string& kind, Eigen::Index n, double range, std::uint64_t seed,
              const std::string& out_path) {
  Dataset data = [&] {
    if (kind == "robot-grab") return synth_robot_grab(n, range, seed);
    if (kind == "two-uniforms") return synth_two_uniforms(n, seed);
    if (kind == "three-gaussians") return synth_three_gaussians(n, seed);
    throw CLI::ValidationError("--kind", "unknown generator '" + kind + "'");
  }();
  if (out_path.empty())
    save_csv(data, std::cout);
  else
    save_csv(data, out_path);
  return 0;
}

int cmd_grid(const std::string& model_path, const std::string& x_name, const std::string& y_name,
             int resolution, const std::string& evidence_flag, Eigen::Index n,
             std::uint64_t seed, const std::string& out_path) {
  const IcTreeModel model = load_model(model_path);

  const auto numeric_index = [&](const std::string& name) -> Eigen::Index {
    const auto& cols = model.numeric_columns();
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (model.columns()[static_cast<std::size_t>(cols[k])].name == name)
        return static_cast<Eigen::Index>(k);
    throw std::runtime_error("unknown numeric column '" + name + "'");
  };

  std::optional<Evidence> ev;
  if (!evidence_flag.empty()) ev = parse_evidence(model, evidence_flag);
  Rng rng(seed);
  const Eigen::MatrixXd grid =
      grid_density(model, numeric_index(x_name), numeric_index(y_name), resolution, ev, n, rng);

  std::ofstream file_out;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file_out.open(out_path);
    if (!file_out) throw std::runtime_error("cannot open " + out_path);
    out = &file_out;
  }
  char buffer[96];
  *out << x_name << "," << y_name << ",density\n";
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g,%.17g\n", grid(i, 0), grid(i, 1),
                  grid(i, 2));
    *out << buffer;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IC-Tree density estimation: probability trees in per-node "
               "independent-component coordinates"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  std::string out_path;
  auto* train = app.add_subcommand("train", "learn a model and write it as JSON");
  add_train_flags(train, train_flags);
  train->add_option("--out", out_path, "model output path")->required();

  TrainFlags eval_flags;
  std::string eval_name;
  std::vector<double> sweep;
  std::string eval_json;
  auto* eval = app.add_subcommand("eval", "run the min-leaf sweep and print a report table");
  add_train_flags(eval, eval_flags);
  eval->add_option("--name", eval_name, "dataset label for the report");
  eval->add_option("--sweep", sweep, "min-leaf fractions (default 0.9 0.4 0.2 0.1 0.05 0.01)");
  eval->add_option("--json", eval_json, "also write the reports as a JSON array");

  std::string model_path;
  Eigen::Index n_samples = 1000;
  std::uint64_t seed = 0;
  int max_retries = 16;
  std::string sample_out;
  auto* sample_cmd = app.add_subcommand("sample", "draw rows from a trained model as CSV");
  sample_cmd->add_option("--model", model_path, "model JSON path")->required();
  sample_cmd->add_option("-n,--n", n_samples, "number of draws");
  sample_cmd->add_option("--seed", seed, "random seed");
  sample_cmd->add_option("--max-retries", max_retries, "per-draw redraw budget");
  sample_cmd->add_option("--out", sample_out, "CSV output path (default stdout)");

  std::string infer_model, infer_evidence;
  bool marginal = false;
  std::vector<int> moment_orders{1, 2};
  Eigen::Index infer_n = 10000;
  std::uint64_t infer_seed = 0;
  auto* infer = app.add_subcommand("infer", "marginal probability or conditional moments");
  infer->add_option("--model", infer_model, "model JSON path")->required();
  infer->add_option("--evidence", infer_evidence, "evidence JSON (inline or a file path)");
  infer->add_flag("--marginal", marginal, "estimate the marginal probability of the evidence");
  infer->add_option("--moments", moment_orders, "moment orders for conditional estimation");
  infer->add_option("-n,--n", infer_n, "Monte Carlo sample count");
  infer->add_option("--seed", infer_seed, "random seed");

  std::string mpe_model, mpe_evidence;
  auto* mpe_cmd = app.add_subcommand("mpe", "most probable explanation region");
  mpe_cmd->add_option("--model", mpe_model, "model JSON path")->required();
  mpe_cmd->add_option("--evidence", mpe_evidence, "evidence JSON (inline or a file path)");

  std::string synth_kind, synth_out;
  Eigen::Index synth_n = 1000;
  double synth_range = 10.0;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset as CSV");
  synth->add_option("--kind", synth_kind, "robot-grab | two-uniforms | three-gaussians")
      ->required();
  synth->add_option("-n,--n", synth_n, "number of rows");
  synth->add_option("--range", synth_range, "object position range (robot-grab)");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--out", synth_out, "CSV output path (default stdout)");

  std::string grid_model, grid_x, grid_y, grid_evidence, grid_out;
  int grid_resolution = 50;
  Eigen::Index grid_n = 1000;
  std::uint64_t grid_seed = 0;
  auto* grid = app.add_subcommand("grid", "density lattice over two columns as CSV");
  grid->add_option("--model", grid_model, "model JSON path")->required();
  grid->add_option("--x", grid_x, "first numeric column name")->required();
  grid->add_option("--y", grid_y, "second numeric column name")->required();
  grid->add_option("--resolution", grid_resolution, "lattice cells per axis");
  grid->add_option("--evidence", grid_evidence, "evidence JSON (inline or a file path)");
  grid->add_option("-n,--n", grid_n, "Monte Carlo proposals for marginalized dimensions");
  grid->add_option("--seed", grid_seed, "random seed");
  grid->add_option("--out", grid_out, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(train_flags, out_path);
    if (eval->parsed()) return cmd_eval(eval_flags, eval_name, sweep, eval_json);
    if (sample_cmd->parsed())
      return cmd_sample(model_path, n_samples, seed, max_retries, sample_out);
    if (infer->parsed())
      return cmd_infer(infer_model, infer_evidence, marginal, moment_orders, infer_n, infer_seed);
    if (mpe_cmd->parsed()) return cmd_mpe(mpe_model, mpe_evidence);
    if (synth->parsed()) return cmd_synth(synth_kind, synth_n, synth_range, synth_seed, synth_out);
    if (grid->parsed())
      return cmd_grid(grid_model, grid_x, grid_y, grid_resolution, grid_evidence, grid_n,
                      grid_seed, grid_out);
  } catch (const ictree::InconsistentEvidence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEvidence;
  } catch (const ictree::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ictree::EmptyData& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ictree::UnknownCategory& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ictree::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
