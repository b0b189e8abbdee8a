#include "sae/csv.hpp"

#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sae/errors.hpp"

namespace sae::csv {

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

std::vector<std::vector<std::string>> parse_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  while (i < n) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
    } else if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
      ++i;
    } else if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r' && i + 1 < n && text[i + 1] == '\n') {
      end_record();
      i += 2;
    } else if (c == '\n' || c == '\r') {
      end_record();
      ++i;
    } else {
      field.push_back(c);
      field_started = true;
      ++i;
    }
  }
  if (in_quotes) throw DataError("csv: unterminated quoted field");
  if (field_started || !record.empty() || !field.empty()) end_record();
  // Drop a trailing fully-empty record produced by a final newline.
  if (!records.empty() && records.back().size() == 1 && records.back()[0].empty())
    records.pop_back();
  return records;
}

}  // namespace

Table read_string(const std::string& text) {
  Table t;
  auto records = parse_records(text);
  if (records.empty()) throw DataError("csv: empty input");
  t.header = std::move(records.front());
  const std::size_t width = t.header.size();
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw DataError("csv: row " + std::to_string(r) + " has " +
                      std::to_string(records[r].size()) + " fields, expected " +
                      std::to_string(width));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return read_string(buf.str());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  (void)ec;
  return std::string(buf.data(), p);
}

std::string escape_field(const std::string& field) {
  bool needs = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

struct Writer::Impl {
  std::ofstream out;
};

Writer::Writer(const std::string& path) : impl_(new Impl) {
  impl_->out.open(path, std::ios::binary);
  if (!impl_->out) {
    delete impl_;
    throw DataError("cannot open " + path + " for writing");
  }
}

Writer::~Writer() {
  close();
}

void Writer::write_row(const std::vector<std::string>& fields) {
  auto& out = impl_->out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.put(',');
    out << escape_field(fields[i]);
  }
  out.put('\n');
}

void Writer::close() {
  if (impl_) {
    impl_->out.close();
    delete impl_;
    impl_ = nullptr;
  }
}

double parse_double(const std::string& field, const std::string& column, std::size_t row) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  double value = 0.0;
  auto [p, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || p != end) {
    throw DataError("row " + std::to_string(row) + ": column '" + column +
                    "': cannot parse '" + field + "' as a number");
  }
  return value;
}

}  // namespace sae::csv
