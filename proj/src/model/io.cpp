#include "ecbm/io.hpp"

#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ecbm/errors.hpp"

namespace ecbm {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("malformed number on CSV line " + std::to_string(line));
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

std::string dataset_to_csv(const Dataset& d) {
  std::string out;
  const auto di = d.input_dim();
  const auto k = d.num_concepts();
  for (std::size_t i = 0; i < di; ++i) out += "x" + std::to_string(i) + ",";
  for (std::size_t j = 0; j < k; ++j) out += "c" + std::to_string(j) + ",";
  out += "y\n";
  for (std::size_t r = 0; r < d.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t i = 0; i < di; ++i) out += format_double(d.inputs(row, static_cast<Eigen::Index>(i))) + ",";
    for (std::size_t j = 0; j < k; ++j) out += format_double(d.concepts(row, static_cast<Eigen::Index>(j))) + ",";
    out += std::to_string(d.labels[r]) + "\n";
  }
  return out;
}

Dataset dataset_from_csv(std::string_view text, std::size_t num_classes) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (!trim(line).empty()) lines.push_back(line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (lines.empty()) throw ConfigError("CSV is empty");
  const auto header = split(lines[0]);
  std::size_t di = 0, k = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    const bool last = c + 1 == header.size();
    if (last) {
      if (name != "y") throw ConfigError("CSV header must end with y");
    } else if (name == "x" + std::to_string(di) && k == 0) {
      ++di;
    } else if (name == "c" + std::to_string(k)) {
      ++k;
    } else {
      throw ConfigError("unexpected CSV column: " + name);
    }
  }
  if (di == 0 || k == 0) throw ConfigError("CSV needs at least one input and one concept column");
  Dataset d;
  const auto n = lines.size() - 1;
  d.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(di));
  d.concepts.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  d.labels.resize(n);
  int max_label = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto cells = split(lines[r + 1]);
    if (cells.size() != di + k + 1) throw ConfigError("wrong cell count on CSV line " + std::to_string(r + 2));
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t i = 0; i < di; ++i) d.inputs(row, static_cast<Eigen::Index>(i)) = parse_double(cells[i], r + 2);
    for (std::size_t j = 0; j < k; ++j)
      d.concepts(row, static_cast<Eigen::Index>(j)) = parse_double(cells[di + j], r + 2);
    const double y = parse_double(cells.back(), r + 2);
    if (y < 0 || y != static_cast<double>(static_cast<int>(y)))
      throw ConfigError("label must be a non-negative integer on CSV line " + std::to_string(r + 2));
    d.labels[r] = static_cast<int>(y);
    max_label = std::max(max_label, d.labels[r]);
  }
  d.num_classes = num_classes > 0 ? num_classes : std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
  for (std::size_t j = 0; j < k; ++j) d.concept_names.push_back("c" + std::to_string(j));
  validate(d);
  return d;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p += ".meta.json";
  return p;
}

void save_dataset(const Dataset& d, const std::filesystem::path& csv) {
  write_text_file(csv, dataset_to_csv(d));
  json meta;
  meta["num_classes"] = d.num_classes;
  meta["concept_names"] = d.concept_names;
  write_text_file(sidecar_path(csv), meta.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& csv) {
  std::size_t classes = 0;
  std::vector<std::string> names;
  const auto side = sidecar_path(csv);
  if (std::filesystem::exists(side)) {
    try {
      const auto meta = json::parse(read_text_file(side));
      if (meta.contains("num_classes")) classes = meta.at("num_classes").get<std::size_t>();
      if (meta.contains("concept_names")) names = meta.at("concept_names").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed dataset sidecar: ") + e.what());
    }
  }
  Dataset d = dataset_from_csv(read_text_file(csv), classes);
  if (!names.empty()) d.concept_names = std::move(names);
  validate(d);
  return d;
}

namespace {

json matrix_json(const RowMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

RowMatrix matrix_from(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("weight matrix must be a non-empty array of rows");
  const auto rows = j.size();
  const auto cols = j.at(0).size();
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols) throw DimensionError("ragged weight matrix");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j.at(r).at(c).get<double>();
  }
  return m;
}

Vector vector_from(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

}  // namespace

std::string checkpoint_to_json(const Cbm& m) {
  json layers = json::array();
  for (const auto& l : m.g.layers) {
    layers.push_back(
        {{"w", matrix_json(l.weight)}, {"b", vector_json(l.bias)}, {"act", std::string(to_string(l.activation))}});
  }
  json label = {{"w", matrix_json(m.f.weight)},
                {"b", m.f.has_bias ? vector_json(m.f.bias) : json(nullptr)},
                {"loss", std::string(to_string(m.f.loss))}};
  json out = {{"layers", layers}, {"link", std::string(to_string(m.g.link))}, {"label", label}};
  return out.dump() + "\n";
}

Cbm checkpoint_from_json(std::string_view text) {
  Cbm m;
  try {
    const auto j = json::parse(text);
    for (const auto& l : j.at("layers")) {
      DenseLayer layer;
      layer.weight = matrix_from(l.at("w"));
      layer.bias = vector_from(l.at("b"));
      layer.activation = parse_activation(l.at("act").get<std::string>());
      m.g.layers.push_back(std::move(layer));
    }
    m.g.link = parse_concept_link(j.at("link").get<std::string>());
    const auto& label = j.at("label");
    m.f.weight = matrix_from(label.at("w"));
    m.f.has_bias = label.contains("b") && !label.at("b").is_null();
    if (m.f.has_bias) m.f.bias = vector_from(label.at("b"));
    if (label.contains("loss")) m.f.loss = parse_label_loss(label.at("loss").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
  validate(m);
  return m;
}

void save_checkpoint(const Cbm& m, const std::filesystem::path& path) { write_text_file(path, checkpoint_to_json(m)); }

Cbm load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_text_file(path)); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void append_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot append to " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace ecbm
