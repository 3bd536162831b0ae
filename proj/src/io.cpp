#include "locc/io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "locc/error.hpp"

#ifndef LOCC_DATA_DIR
#define LOCC_DATA_DIR "data"
#endif

namespace locc::io {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return static_cast<int>(k);
  }
  throw InvalidInput(source + ": missing column \"" + name + "\"");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const std::string& text = rows.at(row)[column(name)];
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidInput(source + ": row " + std::to_string(row + 2) + " column \"" + name + "\" is not a number: \"" +
                       text + "\"");
  }
  return value;
}

int CsvTable::integer(std::size_t row, const std::string& name) const {
  const std::string& text = rows.at(row)[column(name)];
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidInput(source + ": row " + std::to_string(row + 2) + " column \"" + name + "\" is not an integer: \"" +
                       text + "\"");
  }
  return value;
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable table;
  table.source = source;
  std::stringstream ss(text);
  std::string line;
  bool have_header = false;
  while (std::getline(ss, line)) {
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw InvalidInput(source + ": row " + std::to_string(table.rows.size() + 2) + " has " +
                         std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw InvalidInput(source + ": empty CSV (no header)");
  return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path);
  out << contents;
  if (!out) throw InvalidInput("write failed for " + path);
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string data_dir() {
  if (const char* env = std::getenv("LOCC_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return LOCC_DATA_DIR;
}

}  // namespace locc::io
