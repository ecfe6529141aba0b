#pragma once

// Whitespace-separated token format shared by model and dataset files.
// '#' starts a comment running to the end of the line. Doubles are written
// with the shortest representation that parses back to the same bits.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace forge::text {

std::string format_double(double v);

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  bool at_end();
  std::size_t offset() const noexcept { return pos_; }

  /// Next token; ParseError on end of input.
  std::string_view token();
  std::string_view peek();
  void expect(std::string_view keyword);
  std::string word();
  std::uint64_t u64();
  std::size_t size();
  double number();
  std::vector<double> numbers(std::size_t count);
  /// Remainder of the current line, trimmed.
  std::string rest_of_line();

 private:
  void skip_space();
  std::string_view text_;
  std::size_t pos_ = 0;
};

class Writer {
 public:
  Writer& word(std::string_view w);
  Writer& number(double v);
  Writer& integer(std::uint64_t v);
  Writer& newline();
  /// Key followed by the values, wrapped every `per_line` entries.
  Writer& numbers(std::string_view key, std::span<const double> values, std::size_t per_line = 8);
  const std::string& str() const noexcept { return out_; }

 private:
  void sep();
  std::string out_;
  bool line_start_ = true;
};

}  // namespace forge::text
