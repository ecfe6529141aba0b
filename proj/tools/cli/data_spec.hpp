#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "forge/dataset.hpp"

namespace forge::cli {

// Dataset sources accepted on the command line:
//   blobs:classes=4,dim=16,count=1000,separation=1,seed=0,split=train
//   idx:IMAGES,LABELS
//   PATH                      (a forge-dataset text file)
struct DataSpec {
  enum class Kind { blobs, idx, file };
  Kind kind = Kind::file;
  BlobSpec blobs;
  Split split = Split::train;
  std::filesystem::path images;
  std::filesystem::path labels;
  std::filesystem::path file;
  std::string text;

  static DataSpec parse(const std::string& text);
  std::vector<std::filesystem::path> input_paths() const;
  Dataset load() const;
};

// Throws IoError naming the first input path that does not exist, or the
// first output path whose parent directory is missing.
void check_paths(const std::vector<std::filesystem::path>& inputs, const std::vector<std::filesystem::path>& outputs);

}  // namespace forge::cli
