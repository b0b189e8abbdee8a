#pragma once

#include <optional>
#include <string>
#include <vector>

namespace sae::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  std::size_t n_rows() const { return rows.size(); }
};

// RFC-4180-style reader: quoted fields, "" escapes, CRLF tolerated.
Table read_file(const std::string& path);
Table read_string(const std::string& text);

// Shortest round-trip representation (std::to_chars); integral values keep
// a plain integer form. Used everywhere a double is written, so reruns are
// byte-identical.
std::string format_double(double value);

std::string escape_field(const std::string& field);

class Writer {
 public:
  explicit Writer(const std::string& path);
  ~Writer();
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  void write_row(const std::vector<std::string>& fields);
  void close();

 private:
  struct Impl;
  Impl* impl_;
};

// Parse helpers with row-aware error messages (row is 1-based data row).
double parse_double(const std::string& field, const std::string& column, std::size_t row);

}  // namespace sae::csv
