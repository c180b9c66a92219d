#pragma once

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace labmarket {

/// Shortest decimal that round-trips to the same double. Locale-independent.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

inline std::string csv_quote(std::string_view field) {
  const bool needs = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Row-oriented CSV writer: header first, `\n` line endings, RFC-4180 quoting.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header)
      : columns_(header.size()) {
    append_row(header);
  }

  class Row {
   public:
    Row& operator<<(double v) { return add(format_real(v)); }
    Row& operator<<(int v) { return add(std::to_string(v)); }
    Row& operator<<(long long v) { return add(std::to_string(v)); }
    Row& operator<<(unsigned long long v) { return add(std::to_string(v)); }
    Row& operator<<(unsigned long v) { return add(std::to_string(v)); }
    Row& operator<<(bool v) { return add(v ? "true" : "false"); }
    Row& operator<<(const std::string& v) { return add(v); }
    Row& operator<<(const char* v) { return add(v); }

   private:
    friend class CsvWriter;
    Row& add(std::string s) {
      fields_.push_back(std::move(s));
      return *this;
    }
    std::vector<std::string> fields_;
  };

  void add(const Row& row) {
    if (row.fields_.size() != columns_) {
      throw std::logic_error("csv row has " +
                             std::to_string(row.fields_.size()) +
                             " fields, header has " + std::to_string(columns_));
    }
    append_row(row.fields_);
  }

  const std::string& str() const { return text_; }

 private:
  void append_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) text_ += ',';
      text_ += csv_quote(fields[i]);
    }
    text_ += '\n';
  }

  std::size_t columns_;
  std::string text_;
};

}  // namespace labmarket
