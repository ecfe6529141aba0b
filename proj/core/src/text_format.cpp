#include "forge/text_format.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "forge/error.hpp"

namespace forge::text {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void Reader::skip_space() {
  while (pos_ < text_.size()) {
    const char c = text_[pos_];
    if (c == '#') {
      while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos_;
    } else {
      break;
    }
  }
}

bool Reader::at_end() {
  skip_space();
  return pos_ >= text_.size();
}

std::string_view Reader::peek() {
  skip_space();
  std::size_t end = pos_;
  while (end < text_.size() && !std::isspace(static_cast<unsigned char>(text_[end])) && text_[end] != '#') ++end;
  return text_.substr(pos_, end - pos_);
}

std::string_view Reader::token() {
  auto t = peek();
  if (t.empty()) throw ParseError("unexpected end of input", pos_);
  pos_ += t.size();
  return t;
}

void Reader::expect(std::string_view keyword) {
  const std::size_t at = (skip_space(), pos_);
  auto t = token();
  if (t != keyword)
    throw ParseError("expected '" + std::string(keyword) + "' but found '" + std::string(t) + "'", at);
}

std::string Reader::word() { return std::string(token()); }

std::uint64_t Reader::u64() {
  const std::size_t at = (skip_space(), pos_);
  auto t = token();
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw ParseError("expected an unsigned integer but found '" + std::string(t) + "'", at);
  return v;
}

std::size_t Reader::size() { return static_cast<std::size_t>(u64()); }

double Reader::number() {
  const std::size_t at = (skip_space(), pos_);
  auto t = token();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v))
    throw ParseError("expected a finite number but found '" + std::string(t) + "'", at);
  return v;
}

std::vector<double> Reader::numbers(std::size_t count) {
  std::vector<double> out;
  out.reserve(std::min(count, (text_.size() - pos_) / 2 + 1));
  for (std::size_t i = 0; i < count; ++i) out.push_back(number());
  return out;
}

std::string Reader::rest_of_line() {
  while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  std::size_t end = pos_;
  while (end < text_.size() && text_[end] != '\n') ++end;
  std::string_view line = text_.substr(pos_, end - pos_);
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
  pos_ = end;
  return std::string(line);
}

void Writer::sep() {
  if (!line_start_) out_ += ' ';
  line_start_ = false;
}

Writer& Writer::word(std::string_view w) {
  sep();
  out_ += w;
  return *this;
}

Writer& Writer::number(double v) {
  sep();
  out_ += format_double(v);
  return *this;
}

Writer& Writer::integer(std::uint64_t v) {
  sep();
  out_ += std::to_string(v);
  return *this;
}

Writer& Writer::newline() {
  out_ += '\n';
  line_start_ = true;
  return *this;
}

Writer& Writer::numbers(std::string_view key, std::span<const double> values, std::size_t per_line) {
  word(key);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i % per_line == 0) {
      newline();
      out_ += "   ";
    }
    number(values[i]);
  }
  return newline();
}

}  // namespace forge::text
