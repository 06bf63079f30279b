#include "ictree/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "ictree/rng.hpp"

namespace ictree {

namespace {

bool parse_finite_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  double parsed = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, parsed);
  if (ec != std::errc{} || ptr != end || !std::isfinite(parsed)) return false;
  out = parsed;
  return true;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

// 1-based data-row index (the header is row 0).
std::string location(std::size_t data_row, std::size_t col) {
  return "row " + std::to_string(data_row) + ", column " + std::to_string(col + 1);
}

}  // namespace

Dataset::Dataset(std::vector<ColumnSpec> columns, Storage cells)
    : columns_(std::move(columns)), cells_(std::move(cells)) {
  if (cells_.rows() < 1) throw EmptyData("Dataset: no rows");
  if (cells_.cols() != static_cast<Eigen::Index>(columns_.size()))
    throw std::invalid_argument("Dataset: cell width does not match column specs");
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    const ColumnSpec& spec = columns_[j];
    if (spec.kind == ColumnKind::Numeric) {
      if (!spec.categories.empty())
        throw std::invalid_argument("Dataset: numeric column '" + spec.name +
                                    "' carries categories");
      numeric_cols_.push_back(static_cast<Eigen::Index>(j));
    } else {
      std::set<std::string> unique(spec.categories.begin(), spec.categories.end());
      if (unique.size() != spec.categories.size())
        throw std::invalid_argument("Dataset: duplicate categories in column '" + spec.name + "'");
      symbolic_cols_.push_back(static_cast<Eigen::Index>(j));
      for (Eigen::Index i = 0; i < cells_.rows(); ++i) {
        const int c = static_cast<int>(cells_(i, static_cast<Eigen::Index>(j)));
        if (c < 0 || c >= static_cast<int>(spec.categories.size()))
          throw UnknownCategory("Dataset: code out of range in column '" + spec.name + "'");
      }
    }
  }
}

Eigen::VectorXd Dataset::numeric_row(Eigen::Index i) const {
  Eigen::VectorXd out(num_numeric());
  for (Eigen::Index k = 0; k < out.size(); ++k) out(k) = cells_(i, numeric_cols_[static_cast<std::size_t>(k)]);
  return out;
}

Eigen::MatrixXd Dataset::numeric_block(const std::vector<Eigen::Index>& rows,
                                       const std::vector<Eigen::Index>& numeric_order_cols) const {
  Eigen::MatrixXd block(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(numeric_order_cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < numeric_order_cols.size(); ++c)
      block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          cells_(rows[r], numeric_cols_[static_cast<std::size_t>(numeric_order_cols[c])]);
  return block;
}

Eigen::Index Dataset::find_column(const std::string& name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].name == name) return static_cast<Eigen::Index>(j);
  return -1;
}

Dataset load_csv(const std::string& path, const std::optional<std::vector<ColumnSpec>>& spec) {
  std::ifstream file(path);
  if (!file) throw IoError("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(file, line)) throw EmptyData("load_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> names = split_line(line);
  const std::size_t m = names.size();

  std::vector<std::vector<std::string>> raw;
  std::size_t data_row = 0;
  while (std::getline(file, line)) {
    ++data_row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != m)
      throw ParseError("load_csv: expected " + std::to_string(m) + " cells at row " +
                       std::to_string(data_row));
    for (std::size_t j = 0; j < m; ++j)
      if (cells[j].empty())
        throw ParseError("load_csv: missing cell at " + location(data_row, j));
    raw.push_back(std::move(cells));
  }
  if (raw.empty()) throw EmptyData("load_csv: no data rows in " + path);

  std::vector<ColumnSpec> columns;
  if (spec) {
    if (spec->size() != m)
      throw std::invalid_argument("load_csv: schema width does not match header");
    columns = *spec;
    for (std::size_t j = 0; j < m; ++j) columns[j].name = names[j];
  } else {
    columns.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      columns[j].name = names[j];
      double ignored;
      const bool all_numeric = std::all_of(raw.begin(), raw.end(), [&](const auto& cells) {
        return parse_finite_double(cells[j], ignored);
      });
      columns[j].kind = all_numeric ? ColumnKind::Numeric : ColumnKind::Symbolic;
      if (!all_numeric) {
        std::set<std::string> observed;
        for (const auto& cells : raw) observed.insert(cells[j]);
        columns[j].categories.assign(observed.begin(), observed.end());
      }
    }
  }

  Dataset::Storage data(static_cast<Eigen::Index>(raw.size()), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    if (columns[j].kind == ColumnKind::Numeric) {
      for (std::size_t i = 0; i < raw.size(); ++i) {
        double value;
        if (!parse_finite_double(raw[i][j], value))
          throw ParseError("load_csv: '" + raw[i][j] + "' is not numeric at " +
                           location(i + 1, j));
        data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
      }
    } else {
      std::map<std::string, int> index;
      for (std::size_t c = 0; c < columns[j].categories.size(); ++c)
        index[columns[j].categories[c]] = static_cast<int>(c);
      for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto it = index.find(raw[i][j]);
        if (it == index.end())
          throw ParseError("load_csv: unknown category '" + raw[i][j] + "' at " +
                           location(i + 1, j));
        data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = it->second;
      }
    }
  }
  return Dataset(std::move(columns), std::move(data));
}

void save_csv(const Dataset& data, std::ostream& out) {
  for (Eigen::Index j = 0; j < data.m(); ++j)
    out << data.column(j).name << (j + 1 < data.m() ? "," : "\n");
  char buffer[64];
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.m(); ++j) {
      const ColumnSpec& spec = data.column(j);
      if (spec.kind == ColumnKind::Numeric) {
        std::snprintf(buffer, sizeof(buffer), "%.17g", data.cell(i, j));
        out << buffer;
      } else {
        out << spec.categories[static_cast<std::size_t>(data.code(i, j))];
      }
      out << (j + 1 < data.m() ? "," : "\n");
    }
  }
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw IoError("save_csv: cannot open " + path);
  save_csv(data, file);
}

std::vector<ColumnSpec> load_schema(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("load_schema: cannot open " + path);
  nlohmann::json doc = nlohmann::json::parse(file);
  std::vector<ColumnSpec> columns;
  for (const auto& entry : doc.at("columns")) {
    ColumnSpec spec;
    spec.name = entry.at("name").get<std::string>();
    const std::string kind = entry.at("kind").get<std::string>();
    if (kind == "numeric") {
      spec.kind = ColumnKind::Numeric;
    } else if (kind == "symbolic") {
      spec.kind = ColumnKind::Symbolic;
      spec.categories = entry.at("categories").get<std::vector<std::string>>();
    } else {
      throw ParseError("load_schema: unknown kind '" + kind + "'");
    }
    columns.push_back(std::move(spec));
  }
  return columns;
}

void save_schema(const Dataset& data, const std::string& path) {
  nlohmann::json doc;
  doc["columns"] = nlohmann::json::array();
  for (const ColumnSpec& spec : data.columns()) {
    nlohmann::json entry;
    entry["name"] = spec.name;
    if (spec.kind == ColumnKind::Numeric) {
      entry["kind"] = "numeric";
    } else {
      entry["kind"] = "symbolic";
      entry["categories"] = spec.categories;
    }
    doc["columns"].push_back(std::move(entry));
  }
  std::ofstream file(path);
  if (!file) throw IoError("save_schema: cannot open " + path);
  file << doc.dump(2) << "\n";
}

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  const Eigen::Index n = data.n();
  if (n < 2) throw std::invalid_argument("split: need at least 2 rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("split: test_fraction must be in (0, 1)");

  auto test_n = static_cast<Eigen::Index>(std::llround(test_fraction * static_cast<double>(n)));
  test_n = std::clamp<Eigen::Index>(test_n, 1, n - 1);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(seed, 0x5b11));
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.index(i + 1)]);

  std::vector<Eigen::Index> test_rows(order.begin(), order.begin() + test_n);
  std::vector<Eigen::Index> train_rows(order.begin() + test_n, order.end());
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(train_rows.begin(), train_rows.end());

  const auto take = [&](const std::vector<Eigen::Index>& rows) {
    Dataset::Storage cells(static_cast<Eigen::Index>(rows.size()), data.m());
    for (std::size_t i = 0; i < rows.size(); ++i)
      cells.row(static_cast<Eigen::Index>(i)) = data.cells().row(rows[i]);
    return Dataset(data.columns(), std::move(cells));
  };
  return {take(train_rows), take(test_rows)};
}

}  // namespace ictree
