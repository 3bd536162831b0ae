#pragma once

// Small file helpers shared by the table loaders, writers and the CLI.

#include <string>
#include <vector>

namespace locc::io {

// Comma-separated table with a header row. No quoting: every file this
// library reads or writes is purely numeric or uses bare identifiers.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string source;  // file name or "<string>", used in error messages

  // Throws InvalidInput if the column is missing.
  int column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
  int integer(std::size_t row, const std::string& name) const;
};

CsvTable parse_csv(const std::string& text, const std::string& source = "<string>");
CsvTable read_csv(const std::string& path);

std::string read_file(const std::string& path);
// Writes atomically enough for our purposes: truncate then write.
void write_file(const std::string& path, const std::string& contents);

// Shortest text that round-trips the double exactly.
std::string format_double(double value);

// Directory holding the bundled reference tables. The LOCC_DATA_DIR
// environment variable overrides the build-time location.
std::string data_dir();

}  // namespace locc::io
