#include "forge/model_io.hpp"

#include <fstream>
#include <sstream>

#include "forge/error.hpp"
#include "forge/text_format.hpp"

namespace forge {

namespace {

const char* mode_name(ForgeMode m) { return m == ForgeMode::tracking ? "tracking" : "inference"; }

void write_layer(text::Writer& w, const Layer& layer) {
  w.word("layer").word(layer_tag(layer)).newline();
  if (const auto* d = std::get_if<Dense>(&layer)) {
    w.word("in").integer(d->in_features()).word("out").integer(d->out_features()).newline();
    w.numbers("weights", d->weights.data());
    w.numbers("bias", d->bias.data());
  } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
    const auto& g = c->geometry;
    w.word("in_channels").integer(g.in_channels).word("in_height").integer(g.in_height);
    w.word("in_width").integer(g.in_width).word("out_channels").integer(g.out_channels);
    w.word("kernel").integer(g.kernel_size).word("stride").integer(g.stride);
    w.word("padding").integer(g.padding).newline();
    w.numbers("kernels", c->kernels.data());
    w.numbers("bias", c->bias.data());
  } else if (const auto* f = std::get_if<Forge>(&layer)) {
    w.word("b").number(f->state.b).word("c_ratio").number(f->state.c_ratio);
    w.word("mode").word(mode_name(f->state.mode)).newline();
  }
}

Layer read_layer(text::Reader& r) {
  r.expect("layer");
  const std::size_t tag_at = (r.peek(), r.offset());
  const std::string tag = r.word();
  if (tag == "dense") {
    r.expect("in");
    const std::size_t in = r.size();
    r.expect("out");
    const std::size_t out = r.size();
    if (in == 0 || out == 0) throw ParseError("dense extents must be positive", r.offset());
    r.expect("weights");
    Tensor weights({out, in}, r.numbers(out * in));
    r.expect("bias");
    Tensor bias({out}, r.numbers(out));
    return Dense{std::move(weights), std::move(bias)};
  }
  if (tag == "conv2d") {
    kernels::ConvGeometry g;
    r.expect("in_channels");
    g.in_channels = r.size();
    r.expect("in_height");
    g.in_height = r.size();
    r.expect("in_width");
    g.in_width = r.size();
    r.expect("out_channels");
    g.out_channels = r.size();
    r.expect("kernel");
    g.kernel_size = r.size();
    r.expect("stride");
    g.stride = r.size();
    r.expect("padding");
    g.padding = r.size();
    try {
      g.validate();
    } catch (const Error& e) {
      throw ParseError(std::string("invalid conv2d geometry: ") + e.what(), r.offset());
    }
    r.expect("kernels");
    Tensor k({g.out_channels, g.patch_size()}, r.numbers(g.out_channels * g.patch_size()));
    r.expect("bias");
    Tensor bias({g.out_channels}, r.numbers(g.out_channels));
    return Conv2D{g, std::move(k), std::move(bias)};
  }
  if (tag == "forge") {
    ForgeState s;
    r.expect("b");
    s.b = r.number();
    r.expect("c_ratio");
    s.c_ratio = r.number();
    r.expect("mode");
    const std::size_t mode_at = (r.peek(), r.offset());
    const std::string mode = r.word();
    if (mode == "tracking") s.mode = ForgeMode::tracking;
    else if (mode == "inference") s.mode = ForgeMode::inference;
    else throw ParseError("unknown forge mode '" + mode + "'", mode_at);
    if (s.b < 0.0 || s.c_ratio < 0.0) throw ParseError("forge state must be non-negative", mode_at);
    return Forge{s};
  }
  if (tag == "relu") return ReLU{};
  if (tag == "silu") return SiLU{};
  if (tag == "gelu") return GELU{};
  if (tag == "flatten") return Flatten{};
  throw UnsupportedLayerError(tag, tag_at);
}

}  // namespace

std::string serialize_model(const Model& model) {
  text::Writer w;
  const auto& info = model.info();
  w.word(kModelFormat).integer(kModelFormatVersion).newline();
  w.word("name").word(info.name).newline();
  w.word("input_shape").integer(info.input_shape.size());
  for (auto e : info.input_shape) w.integer(e);
  w.newline();
  w.word("classes").integer(info.classes).newline();
  w.word("seed").integer(info.seed).newline();
  w.word("layers").integer(model.layers().size()).newline();
  for (const auto& layer : model.layers()) write_layer(w, layer);
  w.word("end").newline();
  return w.str();
}

Model parse_model(std::string_view text) {
  text::Reader r(text);
  r.expect(kModelFormat);
  const std::size_t version_at = (r.peek(), r.offset());
  const auto version = r.u64();
  if (version != static_cast<std::uint64_t>(kModelFormatVersion)) {
    (void)version_at;
    throw VersionError(std::string(kModelFormat), kModelFormatVersion, static_cast<int>(version));
  }
  ModelInfo info;
  r.expect("name");
  info.name = r.word();
  r.expect("input_shape");
  const std::size_t rank = r.size();
  if (rank == 0 || rank > 8) throw ParseError("input_shape rank must be 1..8", r.offset());
  for (std::size_t i = 0; i < rank; ++i) {
    const auto e = r.size();
    if (e == 0) throw ParseError("input_shape extents must be positive", r.offset());
    info.input_shape.push_back(e);
  }
  r.expect("classes");
  info.classes = r.size();
  r.expect("seed");
  info.seed = r.u64();
  r.expect("layers");
  const std::size_t count = r.size();
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < count; ++i) layers.push_back(read_layer(r));
  r.expect("end");
  if (!r.at_end()) throw ParseError("trailing content after 'end'", r.offset());
  Model model(std::move(info), std::move(layers));
  try {
    model.validate();
  } catch (const DimensionError& e) {
    throw ParseError(std::string("inconsistent model: ") + e.what(), r.offset());
  }
  return model;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void save_model(const Model& model, const std::filesystem::path& path) {
  model.validate();
  write_file(path, serialize_model(model));
}

Model load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

}  // namespace forge
