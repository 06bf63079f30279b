#include "ictree/serialize.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace ictree {

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vec_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = arr[static_cast<std::size_t>(i)].get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vec_to_json(m.row(i).transpose()));
  return out;
}

Eigen::MatrixXd mat_from_json(const json& arr) {
  const auto rows = static_cast<Eigen::Index>(arr.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const auto cols = static_cast<Eigen::Index>(arr[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    m.row(i) = vec_from_json(arr[static_cast<std::size_t>(i)]).transpose();
  return m;
}

json node_to_json(const IcTreeModel& model, int index) {
  const Node& node = model.nodes()[static_cast<std::size_t>(index)];
  json out;
  if (const auto* inner = std::get_if<InnerNode>(&node)) {
    if (const auto* linear = std::get_if<LinearSplit>(&inner->split)) {
      out["type"] = "linear";
      out["coefficients"] = vec_to_json(linear->coefficients);
      out["threshold"] = linear->threshold;
    } else {
      const auto& symbolic = std::get<SymbolicSplit>(inner->split);
      out["type"] = "symbolic";
      out["column"] = symbolic.column;
      out["value"] = symbolic.value;
    }
    out["left"] = node_to_json(model, inner->left);
    out["right"] = node_to_json(model, inner->right);
    return out;
  }
  const auto& leaf = std::get<Leaf>(node);
  out["type"] = "leaf";
  out["weight"] = leaf.weight;
  out["n_rows"] = leaf.n_rows;
  out["ica_converged"] = leaf.ica_converged;
  out["mean"] = vec_to_json(leaf.transform.mean);
  out["unmixing"] = mat_to_json(leaf.transform.unmixing);
  out["mixing"] = mat_to_json(leaf.transform.mixing);
  out["log_abs_det_unmixing"] = leaf.transform.log_abs_det_unmixing;
  out["components"] = json::array();
  for (const auto& qpd : leaf.component_dists) {
    json comp;
    comp["breakpoints"] = vec_to_json(qpd.breakpoints());
    comp["masses"] = vec_to_json(qpd.masses());
    out["components"].push_back(std::move(comp));
  }
  out["symbolic"] = json::array();
  for (const auto& dist : leaf.symbolic_dists) out["symbolic"].push_back(vec_to_json(dist.probs()));
  out["dropped"] = json::array();
  for (const auto& [k, value] : leaf.dropped)
    out["dropped"].push_back(json::array({k, value}));
  return out;
}

void node_from_json(const json& doc, Eigen::Index num_numeric, std::vector<Node>& nodes) {
  const std::string type = doc.at("type").get<std::string>();
  if (type == "leaf") {
    Leaf leaf;
    leaf.weight = doc.at("weight").get<double>();
    leaf.n_rows = doc.at("n_rows").get<Eigen::Index>();
    leaf.ica_converged = doc.at("ica_converged").get<bool>();
    leaf.transform.mean = vec_from_json(doc.at("mean"));
    leaf.transform.unmixing = mat_from_json(doc.at("unmixing"));
    leaf.transform.mixing = mat_from_json(doc.at("mixing"));
    leaf.transform.log_abs_det_unmixing = doc.at("log_abs_det_unmixing").get<double>();
    leaf.transform.converged = leaf.ica_converged;
    for (const auto& comp : doc.at("components"))
      leaf.component_dists.emplace_back(vec_from_json(comp.at("breakpoints")),
                                        vec_from_json(comp.at("masses")));
    for (const auto& probs : doc.at("symbolic"))
      leaf.symbolic_dists.emplace_back(vec_from_json(probs));
    std::vector<bool> is_dropped(static_cast<std::size_t>(num_numeric), false);
    for (const auto& entry : doc.at("dropped")) {
      const auto k = entry[0].get<Eigen::Index>();
      leaf.dropped.emplace_back(k, entry[1].get<double>());
      is_dropped[static_cast<std::size_t>(k)] = true;
    }
    for (Eigen::Index k = 0; k < num_numeric; ++k)
      if (!is_dropped[static_cast<std::size_t>(k)]) leaf.kept.push_back(k);
    if (static_cast<Eigen::Index>(leaf.kept.size()) != leaf.transform.mean.size())
      throw ParseError("model: leaf transform size disagrees with dropped columns");
    nodes.emplace_back(std::move(leaf));
    return;
  }

  InnerNode inner;
  if (type == "linear") {
    LinearSplit split;
    split.coefficients = vec_from_json(doc.at("coefficients"));
    split.threshold = doc.at("threshold").get<double>();
    inner.split = std::move(split);
  } else if (type == "symbolic") {
    inner.split = SymbolicSplit{doc.at("column").get<Eigen::Index>(), doc.at("value").get<int>()};
  } else {
    throw ParseError("model: unknown node type '" + type + "'");
  }
  const auto self = static_cast<int>(nodes.size());
  nodes.emplace_back(std::move(inner));
  const int left = static_cast<int>(nodes.size());
  node_from_json(doc.at("left"), num_numeric, nodes);
  const int right = static_cast<int>(nodes.size());
  node_from_json(doc.at("right"), num_numeric, nodes);
  auto& stored = std::get<InnerNode>(nodes[static_cast<std::size_t>(self)]);
  stored.left = left;
  stored.right = right;
}

}  // namespace

json schema_to_json(const std::vector<ColumnSpec>& columns) {
  json out = json::array();
  for (const ColumnSpec& spec : columns) {
    json entry;
    entry["name"] = spec.name;
    if (spec.kind == ColumnKind::Numeric) {
      entry["kind"] = "numeric";
    } else {
      entry["kind"] = "symbolic";
      entry["categories"] = spec.categories;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<ColumnSpec> schema_from_json(const json& doc) {
  std::vector<ColumnSpec> columns;
  for (const auto& entry : doc) {
    ColumnSpec spec;
    spec.name = entry.at("name").get<std::string>();
    const std::string kind = entry.at("kind").get<std::string>();
    if (kind == "numeric") {
      spec.kind = ColumnKind::Numeric;
    } else if (kind == "symbolic") {
      spec.kind = ColumnKind::Symbolic;
      spec.categories = entry.at("categories").get<std::vector<std::string>>();
    } else {
      throw ParseError("schema: unknown kind '" + kind + "'");
    }
    columns.push_back(std::move(spec));
  }
  return columns;
}

json model_to_json(const IcTreeModel& model) {
  json doc;
  doc["format"] = "ictree-model";
  doc["version"] = 1;
  doc["columns"] = schema_to_json(model.columns());
  const Hyperparams& hp = model.hyperparams();
  doc["hyperparams"] = {{"min_samples_leaf_fraction", hp.min_samples_leaf_fraction},
                        {"max_depth", hp.max_depth},
                        {"qpd_resolution", hp.qpd_resolution},
                        {"ica_max_iter", hp.ica_max_iter},
                        {"ica_tol", hp.ica_tol},
                        {"min_improvement", hp.min_improvement},
                        {"baseline_mode", hp.baseline_mode}};
  doc["metadata"] = {{"n_train", model.n_train()},
                     {"seed", model.seed()},
                     {"ica_nonconverged", model.ica_nonconverged()}};
  doc["root"] = node_to_json(model, model.root());
  return doc;
}

IcTreeModel model_from_json(const json& doc) {
  if (doc.value("format", "") != "ictree-model")
    throw ParseError("model: not an ictree-model document");
  if (doc.at("version").get<int>() != 1) throw ParseError("model: unsupported version");

  std::vector<ColumnSpec> columns = schema_from_json(doc.at("columns"));
  Eigen::Index num_numeric = 0;
  for (const ColumnSpec& spec : columns)
    if (spec.kind == ColumnKind::Numeric) ++num_numeric;

  const json& hp_doc = doc.at("hyperparams");
  Hyperparams hp;
  hp.min_samples_leaf_fraction = hp_doc.at("min_samples_leaf_fraction").get<double>();
  hp.max_depth = hp_doc.at("max_depth").get<int>();
  hp.qpd_resolution = hp_doc.at("qpd_resolution").get<int>();
  hp.ica_max_iter = hp_doc.at("ica_max_iter").get<int>();
  hp.ica_tol = hp_doc.at("ica_tol").get<double>();
  hp.min_improvement = hp_doc.at("min_improvement").get<double>();
  hp.baseline_mode = hp_doc.at("baseline_mode").get<bool>();

  std::vector<Node> nodes;
  node_from_json(doc.at("root"), num_numeric, nodes);

  const json& meta = doc.at("metadata");
  return IcTreeModel(std::move(columns), std::move(nodes), hp,
                     meta.at("seed").get<std::uint64_t>(),
                     meta.at("n_train").get<Eigen::Index>(),
                     meta.at("ica_nonconverged").get<int>());
}

void save_model(const IcTreeModel& model, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw IoError("save_model: cannot open " + path);
  file << model_to_json(model).dump(2) << "\n";
}

IcTreeModel load_model(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("load_model: cannot open " + path);
  return model_from_json(json::parse(file));
}

Evidence evidence_from_json(const IcTreeModel& model, const json& doc) {
  if (!doc.is_object()) throw ParseError("evidence: expected a JSON object");
  Evidence ev = Evidence::none(model);

  for (const auto& [name, value] : doc.items()) {
    Eigen::Index col = -1;
    for (std::size_t j = 0; j < model.columns().size(); ++j)
      if (model.columns()[j].name == name) col = static_cast<Eigen::Index>(j);
    if (col < 0) throw UnknownCategory("evidence: unknown column '" + name + "'");
    const ColumnSpec& spec = model.columns()[static_cast<std::size_t>(col)];

    if (spec.kind == ColumnKind::Numeric) {
      if (!value.is_object() || !value.contains("lo") || !value.contains("hi"))
        throw ParseError("evidence: numeric column '" + name + "' needs {\"lo\", \"hi\"}");
      const auto& num_cols = model.numeric_columns();
      const auto k = static_cast<std::size_t>(
          std::find(num_cols.begin(), num_cols.end(), col) - num_cols.begin());
      ev.numeric[k] = Interval{value.at("lo").get<double>(), value.at("hi").get<double>()};
    } else {
      if (!value.is_array())
        throw ParseError("evidence: symbolic column '" + name + "' needs a category array");
      std::vector<bool> mask(spec.categories.size(), false);
      for (const auto& cat : value) {
        const std::string label = cat.get<std::string>();
        const auto it = std::find(spec.categories.begin(), spec.categories.end(), label);
        if (it == spec.categories.end())
          throw UnknownCategory("evidence: unknown category '" + label + "' in column '" + name +
                                "'");
        mask[static_cast<std::size_t>(it - spec.categories.begin())] = true;
      }
      const auto& sym_cols = model.symbolic_columns();
      const auto s = static_cast<std::size_t>(
          std::find(sym_cols.begin(), sym_cols.end(), col) - sym_cols.begin());
      ev.symbolic[s] = std::move(mask);
    }
  }
  ev.validate();
  return ev;
}

}  // namespace ictree
