#include "tschpg/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "tschpg/errors.hpp"

namespace tschpg {

std::string format_double(double v) {
  char buf[64];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) throw NumericError("value not representable as text");
  return std::string(buf, res.ptr);
}

std::string format_int(int64_t v) {
  char buf[32];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw InputError("csv header must not be empty");
}

void CsvTable::add_row(std::vector<std::string> fields) {
  if (fields.size() != header_.size()) {
    throw InputError("csv row has " + std::to_string(fields.size()) +
                     " fields, header has " + std::to_string(header_.size()));
  }
  for (const std::string& f : fields) {
    if (f.find_first_of(",\n\r") != std::string::npos) {
      throw InputError("csv fields must not contain commas or line breaks");
    }
  }
  rows_.push_back(std::move(fields));
}

std::string CsvTable::to_string() const {
  std::ostringstream out;
  for (size_t i = 0; i < header_.size(); ++i) {
    if (i) out << ',';
    out << header_[i];
  }
  out << '\n';
  for (const auto& row : rows_) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  return out.str();
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("csv text is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  CsvTable table(split_fields(line));
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    table.add_row(split_fields(line));
  }
  return table;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return buf.str();
}

}  // namespace tschpg
