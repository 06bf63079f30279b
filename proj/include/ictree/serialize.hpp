#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "ictree/inference.hpp"
#include "ictree/tree.hpp"

namespace ictree {

/// Model file: a single JSON document with schema version, column specs,
/// hyperparameters, training metadata and recursive node records. Matrices
/// are stored row-major as nested arrays; numbers round-trip exactly.
nlohmann::json model_to_json(const IcTreeModel& model);
IcTreeModel model_from_json(const nlohmann::json& doc);

void save_model(const IcTreeModel& model, const std::string& path);
IcTreeModel load_model(const std::string& path);

nlohmann::json schema_to_json(const std::vector<ColumnSpec>& columns);
std::vector<ColumnSpec> schema_from_json(const nlohmann::json& doc);

/// Evidence as {"column": {"lo": a, "hi": b}} for numeric columns and
/// {"column": ["cat", ...]} for symbolic ones. Unknown column names or
/// categories raise UnknownCategory.
Evidence evidence_from_json(const IcTreeModel& model, const nlohmann::json& doc);

}  // namespace ictree
