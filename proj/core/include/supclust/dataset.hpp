#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "supclust/common.hpp"

namespace supclust {

using Label = std::uint32_t;

/// An n x d matrix of sample embeddings, optionally with class labels.
///
/// Construction validates everything: finite coordinates, n >= 1, d >= 1,
/// label count equal to n and every label below num_classes. Instances are
/// immutable afterwards and safe to share across threads.
class EmbeddingSet {
 public:
  explicit EmbeddingSet(Matrix embeddings);
  EmbeddingSet(Matrix embeddings, std::vector<Label> labels,
               std::optional<std::size_t> num_classes = std::nullopt);

  Index size() const { return static_cast<Index>(embeddings_.rows()); }
  Index dim() const { return static_cast<Index>(embeddings_.cols()); }

  const Matrix& embeddings() const { return embeddings_; }
  std::span<const double> point(Index i) const { return row_span(embeddings_, i); }

  bool has_labels() const { return labels_.has_value(); }
  /// Throws kValidation when the set is unlabeled.
  const std::vector<Label>& labels() const;
  std::optional<std::size_t> num_classes() const { return num_classes_; }

  /// Copy of the selected rows; labels are kept only when `keep_labels`.
  EmbeddingSet subset(std::span<const Index> rows, bool keep_labels) const;

  /// Same matrix, labels stripped.
  EmbeddingSet without_labels() const;

 private:
  Matrix embeddings_;
  std::optional<std::vector<Label>> labels_;
  std::optional<std::size_t> num_classes_;
};

enum class FileFormat { kCsv, kRawF32 };

/// Whether the last CSV column is a class label.
enum class CsvLabels {
  kAuto,     // label iff every row ends in a bare non-negative integer token
  kPresent,
  kAbsent,
};

enum class Normalization { kNone, kL2 };

EmbeddingSet read_csv(std::istream& in, CsvLabels labels = CsvLabels::kAuto);
void write_csv(const EmbeddingSet& data, std::ostream& out);

EmbeddingSet read_raw_f32(std::istream& in);
void write_raw_f32(const EmbeddingSet& data, std::ostream& out);

EmbeddingSet load_embeddings(const std::filesystem::path& path, FileFormat format,
                             CsvLabels labels = CsvLabels::kAuto);
void save_embeddings(const EmbeddingSet& data, const std::filesystem::path& path,
                     FileFormat format);

/// kCsv for ".csv", kRawF32 otherwise.
FileFormat format_from_extension(const std::filesystem::path& path);

EmbeddingSet normalize(const EmbeddingSet& data, Normalization mode);

/// FNV-1a over the shape, the coordinate bit patterns and the labels.
std::uint64_t checksum(const EmbeddingSet& data);

struct ImbalanceProfile {
  std::size_t num_classes = 10;
  std::size_t max_per_class = 500;
  double imbalance_factor = 1.0;
};

/// Per-class sample counts, class 0 first. Counts decay exponentially in
/// the class index from max_per_class down to max_per_class / factor.
/// Throws kConfiguration if any class would receive zero samples.
std::vector<std::size_t> class_counts(const ImbalanceProfile& profile);

struct BlobParams {
  std::size_t dim = 2;
  double center_spread = 10.0;
  double cluster_std = 1.0;
  std::uint64_t seed = 0;
};

/// Gaussian blobs with long-tail class sizes. Samples are ordered by class.
EmbeddingSet make_blobs(const ImbalanceProfile& profile, const BlobParams& params);

}  // namespace supclust
