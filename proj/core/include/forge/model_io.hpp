#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "forge/model.hpp"

namespace forge {

inline constexpr std::string_view kModelFormat = "forge-model";
inline constexpr int kModelFormatVersion = 1;

/// Serializes weights, forge states and metadata. Doubles use shortest
/// round-trip printing, so parse(serialize(m)) reproduces m bit-exactly.
std::string serialize_model(const Model& model);
/// Throws ParseError (with byte offset), VersionError or UnsupportedLayerError.
Model parse_model(std::string_view text);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace forge
