#include "oed/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "oed/format.hpp"
#include "oed/regression.hpp"
#include "oed/seeding.hpp"

namespace oed {

namespace {

std::string compute_fingerprint(const std::vector<std::string>& ids,
                                const Eigen::MatrixXd& values) {
  std::string buffer;
  buffer.reserve(ids.size() * 8 + static_cast<std::size_t>(values.size()) * 8 + 16);
  const auto rows = static_cast<std::uint64_t>(values.rows());
  const auto cols = static_cast<std::uint64_t>(values.cols());
  buffer.append(reinterpret_cast<const char*>(&rows), sizeof rows);
  buffer.append(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (const auto& id : ids) {
    buffer.append(id);
    buffer.push_back('\0');
  }
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double v = values(i, j);
      buffer.append(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(hash_string(buffer)));
  return hex;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::string location(std::size_t line_no, std::string_view id) {
  std::string out = "line " + std::to_string(line_no);
  if (!id.empty()) out += " (id '" + std::string(id) + "')";
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureMatrix

FeatureMatrix::FeatureMatrix(std::vector<std::string> row_ids, Eigen::MatrixXd values)
    : row_ids_(std::move(row_ids)), values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw ValidationError("feature matrix must have at least one row and one column");
  }
  if (row_ids_.size() != rows()) {
    throw ValidationError("feature matrix has " + std::to_string(rows()) +
                          " rows but " + std::to_string(row_ids_.size()) + " row ids");
  }
  if (!values_.allFinite()) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      if (!values_.row(i).allFinite()) {
        throw ValidationError("non-finite feature value in row '" +
                              row_ids_[static_cast<std::size_t>(i)] + "'");
      }
    }
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(row_ids_.size());
  for (const auto& id : row_ids_) {
    if (!seen.insert(id).second) {
      throw ValidationError("duplicate row id '" + id + "'");
    }
  }
  fingerprint_ = compute_fingerprint(row_ids_, values_);
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> indices) const {
  std::vector<std::string> ids;
  ids.reserve(indices.size());
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(indices.size()), values_.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= rows()) {
      throw BoundsError("row index " + std::to_string(indices[k]) +
                        " out of range for pool of " + std::to_string(rows()));
    }
    ids.push_back(row_ids_[indices[k]]);
    sub.row(static_cast<Eigen::Index>(k)) =
        values_.row(static_cast<Eigen::Index>(indices[k]));
  }
  return FeatureMatrix(std::move(ids), std::move(sub));
}

std::optional<std::size_t> FeatureMatrix::find(const std::string& row_id) const {
  const auto it = std::find(row_ids_.begin(), row_ids_.end(), row_id);
  if (it == row_ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - row_ids_.begin());
}

// ---------------------------------------------------------------------------
// Task / manifest

std::string to_string(Task task) {
  switch (task) {
    case Task::persuasive: return "persuasive";
    case Task::source: return "source";
    case Task::narrative: return "narrative";
    case Task::synthetic: return "synthetic";
  }
  return "synthetic";
}

Task parse_task(const std::string& text) {
  if (text == "persuasive") return Task::persuasive;
  if (text == "source") return Task::source;
  if (text == "narrative") return Task::narrative;
  if (text == "synthetic") return Task::synthetic;
  throw SchemaError("unknown task '" + text +
                    "' (expected persuasive, source, narrative or synthetic)");
}

SetManifest parse_manifest(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("manifest must be a JSON object");

  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!doc.contains(key)) throw SchemaError(std::string("manifest missing key '") + key + "'");
    return doc.at(key);
  };
  auto as_count = [](const nlohmann::json& v, const char* key) -> std::size_t {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw SchemaError(std::string("manifest key '") + key + "' must be a nonnegative integer");
    }
    return v.get<std::size_t>();
  };
  auto as_int = [](const nlohmann::json& v, const char* key) -> int {
    if (!v.is_number_integer()) {
      throw SchemaError(std::string("manifest key '") + key + "' must be an integer");
    }
    return v.get<int>();
  };

  SetManifest m;
  const auto& set_id = require("set_id");
  if (set_id.is_string()) {
    m.set_id = set_id.get<std::string>();
  } else if (set_id.is_number_integer()) {
    m.set_id = std::to_string(set_id.get<long long>());
  } else {
    throw SchemaError("manifest key 'set_id' must be a string or integer");
  }
  if (m.set_id.empty() || m.set_id.find(',') != std::string::npos) {
    throw SchemaError("manifest set_id must be nonempty and contain no commas");
  }
  const auto& task = require("task");
  if (!task.is_string()) throw SchemaError("manifest key 'task' must be a string");
  m.task = parse_task(task.get<std::string>());
  m.score_range = ScoreRange(as_int(require("min_score"), "min_score"),
                             as_int(require("max_score"), "max_score"));
  if (doc.contains("train_n")) m.declared_train_n = as_count(doc["train_n"], "train_n");
  if (doc.contains("test_n")) m.declared_test_n = as_count(doc["test_n"], "test_n");
  if (doc.contains("split")) {
    const auto& split = doc["split"];
    if (split == "train") {
      m.split = Split::train;
    } else if (split == "test") {
      m.split = Split::test;
    } else {
      throw SchemaError("manifest key 'split' must be \"train\" or \"test\"");
    }
  }
  if (doc.contains("degenerate")) {
    if (!doc["degenerate"].is_boolean()) throw SchemaError("manifest key 'degenerate' must be boolean");
    m.degenerate = doc["degenerate"].get<bool>();
  }
  return m;
}

SetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open manifest " + path.string());
  try {
    return parse_manifest(in);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_manifest(std::ostream& out, const SetManifest& manifest) {
  nlohmann::ordered_json doc;
  doc["set_id"] = manifest.set_id;
  doc["task"] = to_string(manifest.task);
  doc["min_score"] = manifest.score_range.min_score;
  doc["max_score"] = manifest.score_range.max_score;
  if (manifest.declared_train_n) doc["train_n"] = *manifest.declared_train_n;
  if (manifest.declared_test_n) doc["test_n"] = *manifest.declared_test_n;
  doc["split"] = manifest.split == Split::train ? "train" : "test";
  if (manifest.degenerate) doc["degenerate"] = true;
  out << doc.dump(2) << '\n';
}

void write_manifest(const std::filesystem::path& path, const SetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  write_manifest(out, manifest);
}

// ---------------------------------------------------------------------------
// LabeledDataset

LabeledDataset::LabeledDataset(FeatureMatrix features, std::vector<int> scores,
                               SetManifest manifest)
    : features_(std::move(features)),
      scores_(std::move(scores)),
      manifest_(std::move(manifest)) {
  if (scores_.size() != features_.rows()) {
    throw ValidationError("dataset has " + std::to_string(features_.rows()) +
                          " feature rows but " + std::to_string(scores_.size()) + " scores");
  }
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    if (!manifest_.score_range.contains(scores_[i])) {
      throw ValidationError("score " + std::to_string(scores_[i]) + " of row '" +
                            features_.row_ids()[i] + "' outside range " +
                            std::to_string(manifest_.score_range.min_score) + "-" +
                            std::to_string(manifest_.score_range.max_score));
    }
  }
  const auto& declared = manifest_.split == Split::train ? manifest_.declared_train_n
                                                         : manifest_.declared_test_n;
  if (declared && *declared != features_.rows()) {
    throw ValidationError("manifest declares " + std::to_string(*declared) + " " +
                          (manifest_.split == Split::train ? "train" : "test") +
                          " rows but the feature file has " +
                          std::to_string(features_.rows()));
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<int> scores;
  scores.reserve(indices.size());
  for (auto i : indices) {
    if (i >= scores_.size()) {
      throw BoundsError("row index " + std::to_string(i) + " out of range for dataset of " +
                        std::to_string(scores_.size()));
    }
    scores.push_back(scores_[i]);
  }
  SetManifest manifest = manifest_;
  manifest.declared_train_n.reset();
  manifest.declared_test_n.reset();
  return LabeledDataset(features_.select(indices), std::move(scores), std::move(manifest));
}

// ---------------------------------------------------------------------------
// CSV

FeatureTable parse_feature_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw SchemaError("feature file is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "score") {
    throw SchemaError("line 1: header must be id,score,f1,...,fp");
  }
  const std::size_t p = header.size() - 2;
  for (std::size_t j = 0; j < p; ++j) {
    if (header[j + 2] != "f" + std::to_string(j + 1)) {
      throw SchemaError("line 1, column " + std::to_string(j + 3) + ": expected header 'f" +
                        std::to_string(j + 1) + "', got '" + std::string(header[j + 2]) + "'");
    }
  }

  FeatureTable table;
  std::vector<double> flat;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    const std::string_view id = fields[0];
    if (fields.size() != p + 2) {
      throw SchemaError(location(line_no, id) + ": expected " + std::to_string(p + 2) +
                        " columns, got " + std::to_string(fields.size()));
    }
    if (id.empty()) throw SchemaError(location(line_no, id) + ", column 'id': empty id");
    int score = 0;
    if (!parse_number(fields[1], score)) {
      throw SchemaError(location(line_no, id) + ", column 'score': not an integer: '" +
                        std::string(fields[1]) + "'");
    }
    for (std::size_t j = 0; j < p; ++j) {
      double v = 0.0;
      if (!parse_number(fields[j + 2], v) || !std::isfinite(v)) {
        throw SchemaError(location(line_no, id) + ", column 'f" + std::to_string(j + 1) +
                          "': not a finite real: '" + std::string(fields[j + 2]) + "'");
      }
      flat.push_back(v);
    }
    table.row_ids.emplace_back(id);
    table.scores.push_back(score);
  }
  const auto n = static_cast<Eigen::Index>(table.row_ids.size());
  table.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>(flat.data(), n,
                                                                  static_cast<Eigen::Index>(p));
  return table;
}

LabeledDataset load_dataset(const std::filesystem::path& features_path,
                            const std::filesystem::path& manifest_path) {
  SetManifest manifest = read_manifest(manifest_path);
  std::ifstream in(features_path, std::ios::binary);
  if (!in) throw SchemaError("cannot open feature file " + features_path.string());
  FeatureTable table;
  try {
    table = parse_feature_csv(in);
  } catch (const SchemaError& e) {
    throw SchemaError(features_path.string() + ": " + e.what());
  }
  if (table.row_ids.empty()) {
    throw SchemaError(features_path.string() + ": no data rows");
  }
  return LabeledDataset(FeatureMatrix(std::move(table.row_ids), std::move(table.values)),
                        std::move(table.scores), std::move(manifest));
}

void write_feature_csv(std::ostream& out, const LabeledDataset& dataset) {
  const auto& features = dataset.features();
  out << "id,score";
  for (std::size_t j = 0; j < features.cols(); ++j) out << ",f" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < features.rows(); ++i) {
    out << features.row_ids()[i] << ',' << dataset.scores()[i];
    for (std::size_t j = 0; j < features.cols(); ++j) {
      out << ',' << format_real(features.values()(static_cast<Eigen::Index>(i),
                                                  static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

void write_dataset(const LabeledDataset& dataset,
                   const std::filesystem::path& features_path,
                   const std::filesystem::path& manifest_path) {
  for (const auto& id : dataset.features().row_ids()) {
    if (id.find_first_of(",\n\r") != std::string::npos) {
      throw ValidationError("row id '" + id + "' cannot be written to CSV");
    }
  }
  std::ofstream out(features_path, std::ios::binary);
  if (!out) throw Error("cannot write feature file " + features_path.string());
  write_feature_csv(out, dataset);
  write_manifest(manifest_path, dataset.manifest());
}

// ---------------------------------------------------------------------------
// Synthetic data and resampling

SyntheticDataset generate_synthetic(const SyntheticOptions& options) {
  if (options.n < 1 || options.p < 1) throw SizeError("synthetic data needs n >= 1 and p >= 1");
  if (options.beta.size() != options.p) {
    throw ShapeError("beta has " + std::to_string(options.beta.size()) +
                     " entries but p = " + std::to_string(options.p));
  }
  if (!(options.noise_sd >= 0.0) || !std::isfinite(options.noise_sd)) {
    throw ValidationError("noise_sd must be a finite nonnegative real");
  }

  const auto n = static_cast<Eigen::Index>(options.n);
  const auto p = static_cast<Eigen::Index>(options.p);
  Rng rng(options.seed);
  std::normal_distribution<double> standard(0.0, 1.0);

  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = standard(rng);
  }
  const Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(options.beta.data(), p);
  Eigen::VectorXd y = x * beta;
  if (options.noise_sd > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) y(i) += options.noise_sd * standard(rng);
  }

  SetManifest manifest;
  manifest.set_id = options.set_id;
  manifest.task = Task::synthetic;
  manifest.score_range = options.score_range;

  const auto& range = options.score_range;
  std::vector<int> scores(options.n, range.min_score);
  const double lo = y.minCoeff();
  const double hi = y.maxCoeff();
  if (hi > lo) {
    const double span = static_cast<double>(range.max_score - range.min_score);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mapped = range.min_score + (y(i) - lo) / (hi - lo) * span;
      scores[static_cast<std::size_t>(i)] = round_score(mapped, range);
    }
  } else {
    manifest.degenerate = true;
  }

  std::vector<std::string> ids;
  ids.reserve(options.n);
  const int width = static_cast<int>(std::to_string(options.n).size());
  for (std::size_t i = 0; i < options.n; ++i) {
    std::string num = std::to_string(i + 1);
    ids.push_back("s" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num);
  }
  return SyntheticDataset{
      LabeledDataset(FeatureMatrix(std::move(ids), std::move(x)), std::move(scores),
                     std::move(manifest)),
      std::move(y)};
}

LabeledDataset half_sample(const LabeledDataset& dataset, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (n < 2) throw SizeError("half sample needs at least 2 rows, got " + std::to_string(n));
  const std::size_t half = n / 2;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t k = 0; k < half; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(order[k], order[pick(rng)]);
  }
  order.resize(half);
  std::sort(order.begin(), order.end());
  return dataset.subset(order);
}

std::pair<LabeledDataset, LabeledDataset> split_rows(const LabeledDataset& dataset,
                                                     std::size_t n_first) {
  const std::size_t n = dataset.size();
  if (n_first < 1 || n_first >= n) {
    throw SizeError("split needs 1 <= n_first < n, got n_first=" + std::to_string(n_first) +
                    " for n=" + std::to_string(n));
  }
  std::vector<std::size_t> first(n_first);
  std::iota(first.begin(), first.end(), std::size_t{0});
  std::vector<std::size_t> second(n - n_first);
  std::iota(second.begin(), second.end(), n_first);

  SetManifest train_manifest = dataset.manifest();
  train_manifest.declared_train_n = n_first;
  train_manifest.declared_test_n = n - n_first;
  train_manifest.split = Split::train;
  SetManifest test_manifest = train_manifest;
  test_manifest.split = Split::test;

  auto a = dataset.subset(first);
  auto b = dataset.subset(second);
  return {LabeledDataset(a.features(), a.scores(), std::move(train_manifest)),
          LabeledDataset(b.features(), b.scores(), std::move(test_manifest))};
}

}  // namespace oed
