#include "supclust/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "supclust/random.hpp"

namespace supclust {

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'U', 'P', 'C'};
constexpr std::uint32_t kFormatVersion = 1;

void validate_finite(const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        fail(ErrorKind::kValidation,
             "non-finite value in row " + std::to_string(r) + ", column " +
                 std::to_string(c));
      }
    }
  }
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char ch) { return ch == ' ' || ch == '\t' || ch == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

bool is_label_token(std::string_view tok) {
  return !tok.empty() &&
         std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; });
}

double parse_double(std::string_view tok, std::size_t line_no, std::size_t col) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double value = 0.0;
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, value);
  if (tok.empty() || res.ec != std::errc() || res.ptr != end) {
    fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ", column " +
                                std::to_string(col + 1) + ": cannot parse '" +
                                std::string(tok) + "' as a number");
  }
  return value;
}

Label parse_label(std::string_view tok, std::size_t line_no) {
  std::uint64_t value = 0;
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, value);
  if (tok.empty() || res.ec != std::errc() || res.ptr != end ||
      value > std::numeric_limits<Label>::max()) {
    fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": cannot parse label '" +
                                std::string(tok) + "'");
  }
  return static_cast<Label>(value);
}

void append_double(std::string& out, double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string_view text(buf.data(), static_cast<std::size_t>(res.ptr - buf.data()));
  out.append(text);
  // Keep coordinates distinguishable from integer labels.
  if (text.find_first_of(".e") == std::string_view::npos) out.append(".0");
}

template <class T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& in, std::uint64_t& offset, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    fail(ErrorKind::kParse, "offset " + std::to_string(offset) + ": truncated file while reading " +
                                what);
  }
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  }
  offset += sizeof(T);
  return static_cast<T>(value);
}

std::optional<std::size_t> infer_num_classes(const std::vector<Label>& labels) {
  if (labels.empty()) return std::nullopt;
  return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

}  // namespace

EmbeddingSet::EmbeddingSet(Matrix embeddings) : embeddings_(std::move(embeddings)) {
  if (embeddings_.rows() < 1) fail(ErrorKind::kValidation, "embedding set has no rows");
  if (embeddings_.cols() < 1) fail(ErrorKind::kValidation, "embedding dimension must be >= 1");
  validate_finite(embeddings_);
}

EmbeddingSet::EmbeddingSet(Matrix embeddings, std::vector<Label> labels,
                           std::optional<std::size_t> num_classes)
    : EmbeddingSet(std::move(embeddings)) {
  if (labels.size() != size()) {
    fail(ErrorKind::kDimensionMismatch, "label count " + std::to_string(labels.size()) +
                                            " does not match row count " + std::to_string(size()));
  }
  if (!num_classes) num_classes = infer_num_classes(labels);
  if (*num_classes == 0) fail(ErrorKind::kValidation, "num_classes must be positive");
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] >= *num_classes) {
      fail(ErrorKind::kValidation, "label " + std::to_string(labels[i]) + " in row " +
                                       std::to_string(i) + " exceeds num_classes " +
                                       std::to_string(*num_classes));
    }
  }
  labels_ = std::move(labels);
  num_classes_ = num_classes;
}

const std::vector<Label>& EmbeddingSet::labels() const {
  if (!labels_) fail(ErrorKind::kValidation, "embedding set carries no labels");
  return *labels_;
}

EmbeddingSet EmbeddingSet::subset(std::span<const Index> rows, bool keep_labels) const {
  Matrix m(static_cast<Eigen::Index>(rows.size()), embeddings_.cols());
  for (Index r = 0; r < rows.size(); ++r) {
    if (rows[r] >= size()) fail(ErrorKind::kArgument, "subset row index out of range");
    m.row(static_cast<Eigen::Index>(r)) = embeddings_.row(static_cast<Eigen::Index>(rows[r]));
  }
  if (!keep_labels || !labels_) return EmbeddingSet(std::move(m));
  std::vector<Label> sub;
  sub.reserve(rows.size());
  for (const Index r : rows) sub.push_back((*labels_)[r]);
  return EmbeddingSet(std::move(m), std::move(sub), num_classes_);
}

EmbeddingSet EmbeddingSet::without_labels() const { return EmbeddingSet(embeddings_); }

EmbeddingSet read_csv(std::istream& in, CsvLabels labels) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    for (auto f : split_fields(line)) fields.emplace_back(f);
    if (!rows.empty() && fields.size() != rows.front().size()) {
      fail(ErrorKind::kDimensionMismatch,
           "line " + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
               " fields, found " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) fail(ErrorKind::kParse, "CSV input contains no rows");

  const std::size_t cols = rows.front().size();
  bool has_labels = labels == CsvLabels::kPresent;
  if (labels == CsvLabels::kAuto) {
    has_labels = cols >= 2 && std::all_of(rows.begin(), rows.end(), [](const auto& r) {
                   return is_label_token(r.back());
                 });
  }
  const std::size_t dim = has_labels ? cols - 1 : cols;
  if (dim == 0) fail(ErrorKind::kParse, "CSV rows carry no coordinates");

  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  std::vector<Label> parsed_labels;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double v = parse_double(rows[r][c], line_numbers[r], c);
      if (!std::isfinite(v)) {
        fail(ErrorKind::kValidation, "non-finite value in row " + std::to_string(r) + " (line " +
                                         std::to_string(line_numbers[r]) + ")");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
    if (has_labels) parsed_labels.push_back(parse_label(rows[r].back(), line_numbers[r]));
  }
  if (has_labels) return EmbeddingSet(std::move(m), std::move(parsed_labels));
  return EmbeddingSet(std::move(m));
}

void write_csv(const EmbeddingSet& data, std::ostream& out) {
  std::string line;
  for (Index i = 0; i < data.size(); ++i) {
    line.clear();
    const auto p = data.point(i);
    for (Index k = 0; k < p.size(); ++k) {
      if (k) line.push_back(',');
      append_double(line, p[k]);
    }
    if (data.has_labels()) {
      line.push_back(',');
      line.append(std::to_string(data.labels()[i]));
    }
    line.push_back('\n');
    out << line;
  }
}

EmbeddingSet read_raw_f32(std::istream& in) {
  std::uint64_t offset = 0;
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) {
    fail(ErrorKind::kParse, "offset 0: missing SUPC magic bytes");
  }
  offset = 4;
  const auto version = get_le<std::uint32_t>(in, offset, "version");
  if (version != kFormatVersion) {
    fail(ErrorKind::kParse, "offset 4: unsupported format version " + std::to_string(version));
  }
  const auto n = get_le<std::uint64_t>(in, offset, "row count");
  const auto d = get_le<std::uint64_t>(in, offset, "dimension");
  const auto has_labels = get_le<std::uint8_t>(in, offset, "label flag");
  if (has_labels > 1) {
    fail(ErrorKind::kParse, "offset 24: label flag must be 0 or 1, found " +
                                std::to_string(static_cast<int>(has_labels)));
  }
  if (n == 0 || d == 0) fail(ErrorKind::kParse, "offset 8: header declares an empty matrix");
  constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 40;
  if (d > kMaxValues / n) fail(ErrorKind::kParse, "offset 8: header shape is implausibly large");

  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::uint64_t r = 0; r < n; ++r) {
    for (std::uint64_t c = 0; c < d; ++c) {
      const auto bits = get_le<std::uint32_t>(in, offset, "coordinates");
      float f = 0.0f;
      std::memcpy(&f, &bits, sizeof f);
      if (!std::isfinite(f)) {
        fail(ErrorKind::kValidation, "non-finite value in row " + std::to_string(r));
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = static_cast<double>(f);
    }
  }
  if (!has_labels) return EmbeddingSet(std::move(m));
  std::vector<Label> labels(n);
  for (auto& l : labels) l = get_le<std::uint32_t>(in, offset, "labels");
  return EmbeddingSet(std::move(m), std::move(labels));
}

void write_raw_f32(const EmbeddingSet& data, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, data.size());
  put_le<std::uint64_t>(out, data.dim());
  put_le<std::uint8_t>(out, data.has_labels() ? 1 : 0);
  for (Index i = 0; i < data.size(); ++i) {
    for (const double v : data.point(i)) {
      const auto f = static_cast<float>(v);
      if (!std::isfinite(f)) {
        fail(ErrorKind::kValidation, "row " + std::to_string(i) + " overflows 32-bit float");
      }
      std::uint32_t bits = 0;
      std::memcpy(&bits, &f, sizeof bits);
      put_le<std::uint32_t>(out, bits);
    }
  }
  if (data.has_labels()) {
    for (const Label l : data.labels()) put_le<std::uint32_t>(out, l);
  }
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, FileFormat format,
                             CsvLabels labels) {
  std::ifstream in(path, format == FileFormat::kRawF32 ? std::ios::binary : std::ios::in);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return format == FileFormat::kCsv ? read_csv(in, labels) : read_raw_f32(in);
}

void save_embeddings(const EmbeddingSet& data, const std::filesystem::path& path,
                     FileFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  if (format == FileFormat::kCsv) {
    write_csv(data, out);
  } else {
    write_raw_f32(data, out);
  }
  out.flush();
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

FileFormat format_from_extension(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FileFormat::kCsv : FileFormat::kRawF32;
}

EmbeddingSet normalize(const EmbeddingSet& data, Normalization mode) {
  if (mode == Normalization::kNone) return data;
  Matrix m = data.embeddings();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    if (norm > 0.0) m.row(r) /= norm;
  }
  if (data.has_labels()) return EmbeddingSet(std::move(m), data.labels(), data.num_classes());
  return EmbeddingSet(std::move(m));
}

std::uint64_t checksum(const EmbeddingSet& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(data.size());
  mix(data.dim());
  for (Index i = 0; i < data.size(); ++i) {
    for (const double v : data.point(i)) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      mix(bits);
    }
  }
  if (data.has_labels()) {
    mix(*data.num_classes());
    for (const Label l : data.labels()) mix(l);
  }
  return h;
}

std::vector<std::size_t> class_counts(const ImbalanceProfile& profile) {
  if (profile.num_classes == 0) fail(ErrorKind::kConfiguration, "num_classes must be positive");
  if (profile.max_per_class == 0) fail(ErrorKind::kConfiguration, "max_per_class must be positive");
  if (!(profile.imbalance_factor >= 1.0) || !std::isfinite(profile.imbalance_factor)) {
    fail(ErrorKind::kConfiguration, "imbalance factor must be a finite value >= 1");
  }
  std::vector<std::size_t> counts(profile.num_classes);
  const double top = static_cast<double>(profile.max_per_class);
  for (std::size_t c = 0; c < profile.num_classes; ++c) {
    const double exponent =
        profile.num_classes == 1
            ? 0.0
            : -static_cast<double>(c) / static_cast<double>(profile.num_classes - 1);
    counts[c] = static_cast<std::size_t>(std::llround(top * std::pow(profile.imbalance_factor, exponent)));
    if (counts[c] == 0) {
      fail(ErrorKind::kConfiguration,
           "imbalance profile leaves class " + std::to_string(c) + " with zero samples");
    }
  }
  return counts;
}

EmbeddingSet make_blobs(const ImbalanceProfile& profile, const BlobParams& params) {
  if (params.dim == 0) fail(ErrorKind::kConfiguration, "dim must be >= 1");
  if (!(params.center_spread > 0.0)) fail(ErrorKind::kConfiguration, "center_spread must be > 0");
  if (!(params.cluster_std > 0.0)) fail(ErrorKind::kConfiguration, "cluster_std must be > 0");
  const auto counts = class_counts(profile);

  Rng rng(params.seed);
  Matrix centers(static_cast<Eigen::Index>(profile.num_classes),
                 static_cast<Eigen::Index>(params.dim));
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    for (Eigen::Index k = 0; k < centers.cols(); ++k) {
      centers(c, k) = rng.uniform(-params.center_spread, params.center_spread);
    }
  }

  std::size_t total = 0;
  for (const auto c : counts) total += c;
  Matrix points(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(params.dim));
  std::vector<Label> labels;
  labels.reserve(total);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t s = 0; s < counts[c]; ++s, ++row) {
      for (Eigen::Index k = 0; k < points.cols(); ++k) {
        points(row, k) = centers(static_cast<Eigen::Index>(c), k) + params.cluster_std * rng.normal();
      }
      labels.push_back(static_cast<Label>(c));
    }
  }
  return EmbeddingSet(std::move(points), std::move(labels), profile.num_classes);
}

}  // namespace supclust
