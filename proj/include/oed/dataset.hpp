#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oed/score_range.hpp"

namespace oed {

/// Pool of n feature vectors of length p with unique row identifiers.
/// Immutable once constructed; the constructor enforces finiteness,
/// uniqueness of ids, and n, p >= 1.
class FeatureMatrix {
 public:
  FeatureMatrix(std::vector<std::string> row_ids, Eigen::MatrixXd values);

  [[nodiscard]] std::size_t rows() const noexcept {
    return static_cast<std::size_t>(values_.rows());
  }
  [[nodiscard]] std::size_t cols() const noexcept {
    return static_cast<std::size_t>(values_.cols());
  }
  [[nodiscard]] const std::vector<std::string>& row_ids() const noexcept {
    return row_ids_;
  }
  [[nodiscard]] const Eigen::MatrixXd& values() const noexcept { return values_; }

  /// Rows at `indices`, in the given order.
  [[nodiscard]] FeatureMatrix select(std::span<const std::size_t> indices) const;

  /// Content hash (ids, shape, value bits) identifying this pool.
  [[nodiscard]] const std::string& fingerprint() const noexcept {
    return fingerprint_;
  }

  /// Position of a row id, if present.
  [[nodiscard]] std::optional<std::size_t> find(const std::string& row_id) const;

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.row_ids_ == b.row_ids_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> row_ids_;
  Eigen::MatrixXd values_;
  std::string fingerprint_;
};

enum class Task { persuasive, source, narrative, synthetic };

std::string to_string(Task task);
Task parse_task(const std::string& text);

/// Which declared count a feature file is checked against.
enum class Split { train, test };

struct SetManifest {
  std::string set_id;
  Task task = Task::synthetic;
  ScoreRange score_range;
  std::optional<std::size_t> declared_train_n;
  std::optional<std::size_t> declared_test_n;
  Split split = Split::train;
  // Set by generate_synthetic when every raw target was equal.
  bool degenerate = false;

  friend bool operator==(const SetManifest&, const SetManifest&) = default;
};

class LabeledDataset {
 public:
  LabeledDataset(FeatureMatrix features, std::vector<int> scores,
                 SetManifest manifest);

  [[nodiscard]] const FeatureMatrix& features() const noexcept { return features_; }
  [[nodiscard]] const std::vector<int>& scores() const noexcept { return scores_; }
  [[nodiscard]] const SetManifest& manifest() const noexcept { return manifest_; }
  [[nodiscard]] std::size_t size() const noexcept { return features_.rows(); }

  /// Rows at `indices` with their scores. Declared counts are dropped
  /// since they describe the parent file.
  [[nodiscard]] LabeledDataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

 private:
  FeatureMatrix features_;
  std::vector<int> scores_;
  SetManifest manifest_;
};

// Manifest JSON: set_id, task, min_score, max_score, optional train_n,
// test_n, split ("train" | "test"), degenerate.
SetManifest parse_manifest(std::istream& in);
SetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const SetManifest& manifest);
void write_manifest(const std::filesystem::path& path, const SetManifest& manifest);

/// Feature CSV body: header `id,score,f1,...,fp`, then one row per sample.
struct FeatureTable {
  std::vector<std::string> row_ids;
  std::vector<int> scores;
  Eigen::MatrixXd values;
};
FeatureTable parse_feature_csv(std::istream& in);

LabeledDataset load_dataset(const std::filesystem::path& features_path,
                            const std::filesystem::path& manifest_path);

void write_feature_csv(std::ostream& out, const LabeledDataset& dataset);
void write_dataset(const LabeledDataset& dataset,
                   const std::filesystem::path& features_path,
                   const std::filesystem::path& manifest_path);

struct SyntheticOptions {
  std::size_t n = 200;
  std::size_t p = 1;
  std::vector<double> beta{1.5};
  double noise_sd = 1.0;
  ScoreRange score_range{0, 10};
  std::uint64_t seed = 1;
  std::string set_id = "synthetic";
};

struct SyntheticDataset {
  LabeledDataset data;
  // y = X beta + noise, before mapping onto the score range.
  Eigen::VectorXd raw_targets;
};

/// Standard-normal features, linear targets, min-max mapping of the raw
/// target onto the score range followed by threshold rounding.
SyntheticDataset generate_synthetic(const SyntheticOptions& options);

/// floor(n/2) rows drawn uniformly without replacement. Rows keep their
/// parent order.
LabeledDataset half_sample(const LabeledDataset& dataset, std::uint64_t seed);

/// First `n_first` rows and the remainder, e.g. a synthetic train/test split.
std::pair<LabeledDataset, LabeledDataset> split_rows(const LabeledDataset& dataset,
                                                     std::size_t n_first);

}  // namespace oed
