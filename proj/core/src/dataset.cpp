#include "forge/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "forge/error.hpp"
#include "forge/model_io.hpp"
#include "forge/text_format.hpp"

namespace forge {

const char* to_string(Split split) noexcept { return split == Split::train ? "train" : "test"; }

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw ConfigError("unknown split '" + text + "'");
}

Tensor Dataset::inputs() const {
  if (empty()) throw ContractError("dataset is empty");
  return Tensor({size(), features()}, values);
}

Tensor Dataset::inputs(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ContractError("empty sample selection");
  const std::size_t f = features();
  std::vector<double> data;
  data.reserve(indices.size() * f);
  for (auto i : indices) {
    auto s = sample(i);
    data.insert(data.end(), s.begin(), s.end());
  }
  return Tensor({indices.size(), f}, std::move(data));
}

std::span<const double> Dataset::sample(std::size_t i) const {
  if (i >= size()) throw ContractError("sample index out of range");
  const std::size_t f = features();
  return std::span<const double>(values).subspan(i * f, f);
}

Dataset Dataset::take(std::span<const std::size_t> indices) const {
  Dataset out;
  out.sample_shape = sample_shape;
  out.classes = classes;
  out.split = split;
  out.provenance = provenance;
  for (auto i : indices) {
    auto s = sample(i);
    out.values.insert(out.values.end(), s.begin(), s.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

Dataset Dataset::subset(std::size_t n, std::uint64_t seed) const {
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), 0);
  if (n >= size()) return take(idx);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  Dataset out = take(idx);
  out.provenance += " subset=" + std::to_string(n) + " seed=" + std::to_string(seed);
  return out;
}

void Dataset::validate() const {
  if (sample_shape.empty() || features() == 0) throw ContractError("dataset sample shape is empty");
  if (values.size() != size() * features()) throw DimensionError("dataset value count does not match labels");
  for (auto l : labels)
    if (l >= classes) throw ContractError("dataset label " + std::to_string(l) + " >= class count");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("dataset values must lie in [0, 1]");
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* what) {
  if (offset + 4 > bytes.size())
    throw ParseError(std::string(what) + ": truncated header", bytes.size());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08X", v);
  return buf;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  const std::string s = read_file(path);
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

}  // namespace

Dataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels, std::size_t classes) {
  constexpr std::uint32_t kImageMagic = 0x00000803, kLabelMagic = 0x00000801;
  const auto image_magic = read_be32(images, 0, "images");
  if (image_magic != kImageMagic)
    throw ParseError("images: bad magic, expected " + hex(kImageMagic) + " got " + hex(image_magic), 0);
  const auto label_magic = read_be32(labels, 0, "labels");
  if (label_magic != kLabelMagic)
    throw ParseError("labels: bad magic, expected " + hex(kLabelMagic) + " got " + hex(label_magic), 0);

  const std::size_t n = read_be32(images, 4, "images");
  const std::size_t rows = read_be32(images, 8, "images");
  const std::size_t cols = read_be32(images, 12, "images");
  const std::size_t n_labels = read_be32(labels, 4, "labels");
  if (n != n_labels)
    throw ParseError("count mismatch: " + std::to_string(n) + " images but " + std::to_string(n_labels) + " labels", 4);
  if (rows == 0 || cols == 0) throw ParseError("images: zero image extent", 8);
  const std::size_t pixels = rows * cols;
  if (images.size() < 16 + n * pixels)
    throw ParseError("images: truncated pixel data, need " + std::to_string(16 + n * pixels) + " bytes", images.size());
  if (labels.size() < 8 + n) throw ParseError("labels: truncated label data", labels.size());

  Dataset d;
  d.sample_shape = {1, rows, cols};
  d.classes = classes;
  d.values.resize(n * pixels);
  for (std::size_t i = 0; i < n * pixels; ++i) d.values[i] = static_cast<double>(images[16 + i]) / 255.0;
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.labels[i] = labels[8 + i];
    if (d.labels[i] >= classes)
      throw ParseError("label " + std::to_string(d.labels[i]) + " exceeds class count", 8 + i);
  }
  return d;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t classes) {
  const auto img = read_bytes(images);
  const auto lab = read_bytes(labels);
  Dataset d = parse_idx(img, lab, classes);
  d.provenance = "idx:" + images.string() + "," + labels.string();
  return d;
}

Dataset synth_blobs(const BlobSpec& spec, Split split) {
  if (!(spec.separation > 0.0)) throw ConfigError("blob separation must be > 0");
  if (spec.classes < 1 || spec.dim < 1) throw ConfigError("blobs need at least one class and one dimension");
  std::mt19937_64 centre_rng(spec.seed);
  std::uniform_real_distribution<double> centre(0.2, 0.8);
  std::vector<double> centres(spec.classes * spec.dim);
  for (auto& c : centres) c = centre(centre_rng);

  std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ULL + (split == Split::train ? 1 : 2));
  std::normal_distribution<double> noise(0.0, 0.15 / spec.separation);
  Dataset d;
  d.sample_shape = {spec.dim};
  d.classes = spec.classes;
  d.split = split;
  d.values.resize(spec.count * spec.dim);
  d.labels.resize(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const std::size_t label = i % spec.classes;
    d.labels[i] = label;
    for (std::size_t j = 0; j < spec.dim; ++j)
      d.values[i * spec.dim + j] = std::clamp(centres[label * spec.dim + j] + noise(rng), 0.0, 1.0);
  }
  d.provenance = "blobs:classes=" + std::to_string(spec.classes) + ",dim=" + std::to_string(spec.dim) +
                 ",count=" + std::to_string(spec.count) + ",separation=" + text::format_double(spec.separation) +
                 ",seed=" + std::to_string(spec.seed) + ",split=" + to_string(split);
  return d;
}

std::string serialize_dataset(const Dataset& data) {
  text::Writer w;
  w.word(kDatasetFormat).integer(kDatasetFormatVersion).newline();
  w.word("split").word(to_string(data.split)).newline();
  w.word("classes").integer(data.classes).newline();
  w.word("sample_shape").integer(data.sample_shape.size());
  for (auto e : data.sample_shape) w.integer(e);
  w.newline();
  w.word("count").integer(data.size()).newline();
  w.word("provenance").word(data.provenance.empty() ? "-" : data.provenance).newline();
  w.word("labels");
  for (auto l : data.labels) w.integer(l);
  w.newline();
  w.numbers("inputs", data.values, data.features());
  w.word("end").newline();
  return w.str();
}

Dataset parse_dataset(std::string_view text) {
  text::Reader r(text);
  r.expect(kDatasetFormat);
  const auto version = r.u64();
  if (version != static_cast<std::uint64_t>(kDatasetFormatVersion))
    throw VersionError(std::string(kDatasetFormat), kDatasetFormatVersion, static_cast<int>(version));
  Dataset d;
  r.expect("split");
  const std::size_t split_at = (r.peek(), r.offset());
  const std::string split = r.word();
  if (split == "train") d.split = Split::train;
  else if (split == "test") d.split = Split::test;
  else throw ParseError("unknown split '" + split + "'", split_at);
  r.expect("classes");
  d.classes = r.size();
  r.expect("sample_shape");
  const std::size_t rank = r.size();
  if (rank == 0 || rank > 8) throw ParseError("sample_shape rank must be 1..8", r.offset());
  for (std::size_t i = 0; i < rank; ++i) {
    const auto e = r.size();
    if (e == 0) throw ParseError("sample_shape extents must be positive", r.offset());
    d.sample_shape.push_back(e);
  }
  r.expect("count");
  const std::size_t count = r.size();
  r.expect("provenance");
  d.provenance = r.rest_of_line();
  if (d.provenance == "-") d.provenance.clear();
  r.expect("labels");
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = (r.peek(), r.offset());
    d.labels.push_back(r.size());
    if (d.labels.back() >= d.classes) throw ParseError("label exceeds class count", at);
  }
  r.expect("inputs");
  const std::size_t values_at = (r.peek(), r.offset());
  d.values = r.numbers(count * d.features());
  r.expect("end");
  if (!r.at_end()) throw ParseError("trailing content after 'end'", r.offset());
  for (double v : d.values)
    if (!(v >= 0.0 && v <= 1.0)) throw ParseError("input values must lie in [0, 1]", values_at);
  return d;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  write_file(path, serialize_dataset(data));
}

Dataset load_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

}  // namespace forge
