#ifndef TSCHPG_CSV_HPP
#define TSCHPG_CSV_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace tschpg {

// Locale-independent shortest round-trip formatting (what every CSV and SVG
// in this project uses, so emitted files are bit-stable).
std::string format_double(double v);
std::string format_int(int64_t v);

// An in-memory CSV document with a fixed header.  The emitted dialect is
// deliberately plain: comma-separated, newline-terminated rows, no quoting
// (fields must not contain commas or newlines).
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  int n_columns() const { return static_cast<int>(header_.size()); }
  int64_t n_rows() const { return static_cast<int64_t>(rows_.size()); }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  void add_row(std::vector<std::string> fields);  // InputError on arity/commas
  std::string to_string() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Parses the dialect above (used by tests that re-read emitted files).
CsvTable parse_csv(const std::string& text);

// Whole-file text IO; both throw IoError with the path in the message.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace tschpg

#endif  // TSCHPG_CSV_HPP
