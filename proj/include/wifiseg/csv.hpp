#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wifiseg::csv {

/// Splits one RFC-4180 style record. Quoted fields may contain commas and
/// doubled quotes; embedded newlines are not supported.
std::vector<std::string> split(std::string_view line, std::size_t line_no);

/// Quotes a field only when it contains a comma, quote or leading/trailing blank.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

struct Row {
  std::size_t line_no;
  std::vector<std::string> fields;
};

/// Line-oriented reader that skips blank lines and strips '\r'.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  std::optional<Row> next();
  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

long long parse_int(std::string_view s, std::size_t line_no, std::string_view what);
double parse_double(std::string_view s, std::size_t line_no, std::string_view what);

/// Shortest round-trippable decimal representation.
std::string format_double(double v);

}  // namespace wifiseg::csv
