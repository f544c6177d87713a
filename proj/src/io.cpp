#include "driftmon/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

namespace driftmon {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian and rely on the host layout");

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_float(float v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  const fs::path tmp = fs::path(path + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorKind::IoError, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) fail(ErrorKind::IoError, "rename to " + path + " failed: " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorKind::IoError, "read failed for " + path);
  return data;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_open = false;

  const auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_open = false;
  };
  const auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_open = true;
        break;
      case ',':
        end_field();
        field_open = true;  // a field follows the separator even if empty
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field += c;
        field_open = true;
    }
  }
  if (quoted) fail(ErrorKind::FormatError, "unterminated quoted CSV field");
  if (field_open || !record.empty()) end_record();
  return records;
}

namespace {

struct ByteWriter {
  std::string buf;

  void raw(const void* p, std::size_t n) { buf.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i64(std::int64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void vec(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    raw(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
  }
  void mat(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
};

struct ByteReader {
  const char* p;
  const char* end;

  explicit ByteReader(const std::string& data) : p(data.data()), end(data.data() + data.size()) {}

  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end - p) < n) fail(ErrorKind::CorruptFile, "truncated file");
  }
  void raw(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, p, n);
    p += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    raw(&v, 8);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(p, p + n);
    p += n;
    return s;
  }
  Vector vec() {
    const std::uint64_t n = u64();
    if (n > (1ull << 32)) fail(ErrorKind::CorruptFile, "implausible vector length");
    Vector v(static_cast<Index>(n));
    raw(v.data(), static_cast<std::size_t>(n) * sizeof(double));
    return v;
  }
  Matrix mat() {
    const std::uint64_t r = u64();
    const std::uint64_t c = u64();
    if (r > (1ull << 32) || c > (1ull << 32) || (r != 0 && c > (1ull << 40) / r))
      fail(ErrorKind::CorruptFile, "implausible matrix shape");
    Matrix m(static_cast<Index>(r), static_cast<Index>(c));
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
    return m;
  }
  bool done() const { return p == end; }
};

constexpr char kEmbeddingMagic[4] = {'D', 'L', 'E', 'M'};
constexpr char kBundleMagic[4] = {'D', 'M', 'D', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t fnv1a(const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_block(const OfflineConfig& config) {
  ByteWriter w;
  w.i64(config.d_prime);
  w.i64(config.d_prime_label);
  w.i64(config.n_th);
  w.f64(config.t_alpha);
  w.i64(config.m_w);
  w.u64(config.seed);
  return w.buf;
}

void put_pca(ByteWriter& w, const PcaProjector& pca) {
  w.vec(pca.center);
  w.mat(pca.components);
}

PcaProjector get_pca(ByteReader& r) {
  PcaProjector pca;
  pca.center = r.vec();
  pca.components = r.mat();
  return pca;
}

void put_gaussian(ByteWriter& w, const GaussianSummary& g) {
  w.vec(g.mean);
  w.mat(g.covariance);
  w.i64(g.sample_count);
}

GaussianSummary get_gaussian(ByteReader& r) {
  GaussianSummary g;
  g.mean = r.vec();
  g.covariance = r.mat();
  g.sample_count = r.i64();
  return g;
}

std::string baseline_block(const BaselineModel& model) {
  ByteWriter w;
  const std::string cfg = config_block(model.config);
  w.str(cfg);
  w.u64(static_cast<std::uint64_t>(model.label_set.size()));
  for (Label label : model.label_set) w.u32(label);
  put_pca(w, model.batch_pca);
  put_gaussian(w, model.batch_gaussian);
  for (Label label : model.label_set) {
    put_pca(w, model.label_pca.at(label));
    put_gaussian(w, model.label_gaussian.at(label));
  }
  return w.buf;
}

}  // namespace

void write_embedding_file(const std::string& path, const EmbeddingBatch& batch) {
  batch.validate();
  ByteWriter w;
  w.raw(kEmbeddingMagic, 4);
  w.u32(kFormatVersion);
  w.u64(static_cast<std::uint64_t>(batch.rows()));
  w.u32(static_cast<std::uint32_t>(batch.dim()));
  w.u8(batch.has_labels() ? 1 : 0);
  w.raw(batch.vectors.data(), static_cast<std::size_t>(batch.rows() * batch.dim()) * sizeof(float));
  if (batch.has_labels()) w.raw(batch.labels.data(), batch.labels.size() * sizeof(Label));
  atomic_write_file(path, w.buf);
}

EmbeddingBatch read_embedding_file(const std::string& path) {
  const std::string data = read_file(path);
  if (data.size() < 4 || std::memcmp(data.data(), kEmbeddingMagic, 4) != 0)
    fail(ErrorKind::FormatError, path + ": not an embedding file (bad magic)");
  ByteReader r(data);
  r.p += 4;
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    fail(ErrorKind::FormatError,
         path + ": unsupported embedding format version " + std::to_string(version));
  const std::uint64_t m = r.u64();
  const std::uint32_t d = r.u32();
  const bool has_labels = r.u8() != 0;
  if (m == 0 || d == 0) fail(ErrorKind::FormatError, path + ": empty shape in header");
  if (m > (1ull << 40) / std::max<std::uint64_t>(d, 1))
    fail(ErrorKind::CorruptFile, path + ": implausible shape");

  EmbeddingBatch batch;
  batch.vectors.resize(static_cast<Index>(m), static_cast<Index>(d));
  r.raw(batch.vectors.data(), static_cast<std::size_t>(m) * d * sizeof(float));
  if (has_labels) {
    batch.labels.resize(m);
    r.raw(batch.labels.data(), static_cast<std::size_t>(m) * sizeof(Label));
  }
  if (!r.done()) fail(ErrorKind::CorruptFile, path + ": trailing bytes after payload");
  if (!batch.vectors.allFinite()) fail(ErrorKind::InvalidInput, path + ": non-finite embedding value");
  batch.validate();
  return batch;
}

void write_embedding_csv(const std::string& path, const EmbeddingBatch& batch) {
  batch.validate();
  std::string out;
  for (Index j = 0; j < batch.dim(); ++j) {
    if (j) out += ',';
    out += 'e';
    out += std::to_string(j);
  }
  if (batch.has_labels()) out += ",label";
  out += '\n';
  for (Index i = 0; i < batch.rows(); ++i) {
    for (Index j = 0; j < batch.dim(); ++j) {
      if (j) out += ',';
      out += format_float(batch.vectors(i, j));
    }
    if (batch.has_labels()) {
      out += ',';
      out += std::to_string(batch.labels[static_cast<std::size_t>(i)]);
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

EmbeddingBatch read_embedding_csv(const std::string& path) {
  const auto records = parse_csv(read_file(path));
  if (records.size() < 2) fail(ErrorKind::FormatError, path + ": need a header and at least one row");
  const auto& header = records.front();
  const bool has_labels = !header.empty() && header.back() == "label";
  const std::size_t d = header.size() - (has_labels ? 1 : 0);
  if (d < 1) fail(ErrorKind::FormatError, path + ": no embedding columns");

  EmbeddingBatch batch;
  batch.vectors.resize(static_cast<Index>(records.size() - 1), static_cast<Index>(d));
  if (has_labels) batch.labels.resize(records.size() - 1);
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& row = records[i];
    if (row.size() != header.size())
      fail(ErrorKind::FormatError, path + ": row " + std::to_string(i) + " has " +
                                       std::to_string(row.size()) + " fields, expected " +
                                       std::to_string(header.size()));
    for (std::size_t j = 0; j < d; ++j) {
      float v = 0.0f;
      const auto& cell = row[j];
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        fail(ErrorKind::FormatError, path + ": bad number '" + cell + "'");
      batch.vectors(static_cast<Index>(i - 1), static_cast<Index>(j)) = v;
    }
    if (has_labels) {
      const auto& cell = row.back();
      std::uint32_t label = 0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), label);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        fail(ErrorKind::FormatError, path + ": bad label '" + cell + "'");
      batch.labels[i - 1] = label;
    }
  }
  if (!batch.vectors.allFinite()) fail(ErrorKind::InvalidInput, path + ": non-finite embedding value");
  batch.validate();
  return batch;
}

EmbeddingBatch read_embedding_auto(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".csv") return read_embedding_csv(path);
  return read_embedding_file(path);
}

std::string baseline_digest(const BaselineModel& model) {
  const std::string block = baseline_block(model);
  const std::uint64_t h = fnv1a(block.data(), block.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

void save_bundle(const std::string& path, const ModelBundle& bundle) {
  ByteWriter w;
  w.raw(kBundleMagic, 4);
  w.u32(kFormatVersion);
  w.u64(bundle.seed);
  w.str(bundle.created);

  const std::string cfg = config_block(bundle.baseline.config);
  w.u64(fnv1a(cfg.data(), cfg.size()));  // integrity hash over the config block

  w.str(baseline_block(bundle.baseline));

  w.u8(bundle.thresholds ? 1 : 0);
  if (bundle.thresholds) {
    const ThresholdSet& t = *bundle.thresholds;
    w.f64(t.t_batch);
    w.u64(t.t_label.size());
    for (const auto& [label, value] : t.t_label) {
      w.u32(label);
      w.f64(value);
    }
    w.i64(t.n_th);
    w.f64(t.t_alpha);
    w.i64(t.m_w);
    w.u8(static_cast<std::uint8_t>(t.metric));
    w.u64(t.warnings.size());
    for (const auto& s : t.warnings) w.str(s);
  }
  atomic_write_file(path, w.buf);
}

BundleLoadResult load_bundle(const std::string& path) {
  const std::string data = read_file(path);
  if (data.size() < 4 || std::memcmp(data.data(), kBundleMagic, 4) != 0)
    fail(ErrorKind::FormatError, path + ": not a model bundle (bad magic)");
  ByteReader r(data);
  r.p += 4;
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    fail(ErrorKind::VersionError,
         path + ": bundle format version " + std::to_string(version) + ", expected " +
             std::to_string(kFormatVersion));

  BundleLoadResult result;
  result.bundle.seed = r.u64();
  result.bundle.created = r.str();
  const std::uint64_t stored_hash = r.u64();

  const std::string block = r.str();
  ByteReader br(block);
  {
    const std::string cfg = br.str();
    if (fnv1a(cfg.data(), cfg.size()) != stored_hash)
      result.warnings.push_back("config hash mismatch: bundle metadata may have been altered");
    ByteReader cr(cfg);
    OfflineConfig& config = result.bundle.baseline.config;
    config.d_prime = cr.i64();
    config.d_prime_label = cr.i64();
    config.n_th = cr.i64();
    config.t_alpha = cr.f64();
    config.m_w = cr.i64();
    config.seed = cr.u64();
    if (!cr.done()) fail(ErrorKind::CorruptFile, path + ": oversized config block");
  }
  BaselineModel& model = result.bundle.baseline;
  const std::uint64_t n_labels = br.u64();
  if (n_labels > (1ull << 24)) fail(ErrorKind::CorruptFile, path + ": implausible label count");
  model.label_set.resize(n_labels);
  for (auto& label : model.label_set) label = br.u32();
  model.batch_pca = get_pca(br);
  model.batch_gaussian = get_gaussian(br);
  for (Label label : model.label_set) {
    model.label_pca[label] = get_pca(br);
    model.label_gaussian[label] = get_gaussian(br);
  }
  if (!br.done()) fail(ErrorKind::CorruptFile, path + ": trailing bytes in baseline block");

  if (r.u8() != 0) {
    ThresholdSet t;
    t.t_batch = r.f64();
    const std::uint64_t n = r.u64();
    if (n > (1ull << 24)) fail(ErrorKind::CorruptFile, path + ": implausible threshold count");
    for (std::uint64_t i = 0; i < n; ++i) {
      const Label label = r.u32();
      t.t_label[label] = r.f64();
    }
    t.n_th = r.i64();
    t.t_alpha = r.f64();
    t.m_w = r.i64();
    const std::uint8_t metric = r.u8();
    if (metric > static_cast<std::uint8_t>(DistanceKind::Bhattacharyya))
      fail(ErrorKind::CorruptFile, path + ": unknown metric id");
    t.metric = static_cast<DistanceKind>(metric);
    const std::uint64_t n_warn = r.u64();
    if (n_warn > (1ull << 24)) fail(ErrorKind::CorruptFile, path + ": implausible warning count");
    for (std::uint64_t i = 0; i < n_warn; ++i) t.warnings.push_back(r.str());
    result.bundle.thresholds = std::move(t);
  }
  if (!r.done()) fail(ErrorKind::CorruptFile, path + ": trailing bytes");
  return result;
}

}  // namespace driftmon
