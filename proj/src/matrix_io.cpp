#include "corrgan/matrix_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "corrgan/errors.hpp"

namespace corrgan::io {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_corrmat_csv(const Eigen::MatrixXd& values) {
  std::string out;
  char buf[64];
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof buf, values(i, j), std::chars_format::general, 17);
      out.append(buf, res.ptr);
    }
    out.push_back('\n');
  }
  return out;
}

Eigen::MatrixXd parse_corrmat_csv(const std::string& text, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& field : split(line, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw IoError(origin + ":" + std::to_string(line_no) + ": not a number: '" + field + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(origin + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(origin + ": empty matrix file");
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return m;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void write_corrmat_csv(const fs::path& path, const Eigen::MatrixXd& values) {
  write_text(path, format_corrmat_csv(values));
}

RawMatrix read_raw_matrix(const fs::path& path) {
  return RawMatrix(parse_corrmat_csv(read_text(path), path.string()));
}

CorrelationMatrix read_correlation_matrix(const fs::path& path, const Tolerances& tol) {
  return CorrelationMatrix::from_values(read_raw_matrix(path).values(), tol);
}

std::string format_index_line(std::span<const Index> indices) {
  std::string out;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += std::to_string(indices[i]);
  }
  return out;
}

Permutation parse_index_line(const std::string& line) {
  Permutation out;
  for (const auto& field : split(trim(line), ',')) {
    Index v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
      throw IoError("not an index: '" + field + "'");
    }
    out.push_back(v);
  }
  return out;
}

void KeyValueFile::add(std::string key, std::string value) {
  if (key.empty() || key.find('=') != std::string::npos || key.find('\n') != std::string::npos ||
      value.find('\n') != std::string::npos) {
    throw ConfigError("invalid key/value entry: " + key);
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

void KeyValueFile::add(std::string key, double value) { add(std::move(key), format_double(value)); }

const std::string& KeyValueFile::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw IoError("missing key: " + key);
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const {
  return contains(key) ? get(key) : fallback;
}

std::vector<std::string> KeyValueFile::get_all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (k == key) out.push_back(v);
  }
  return out;
}

bool KeyValueFile::contains(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

std::string KeyValueFile::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw IoError(origin + ":" + std::to_string(line_no) + ": expected key=value");
    }
    kv.entries_.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return kv;
}

void KeyValueFile::write(const fs::path& path) const { write_text(path, str()); }

KeyValueFile KeyValueFile::read(const fs::path& path) { return parse(read_text(path), path.string()); }

std::string matrix_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "matrix_%06zu.csv", index);
  return buf;
}

std::vector<fs::path> list_matrix_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  const fs::path manifest = dir / "manifest";
  if (fs::exists(manifest)) {
    for (const auto& name : KeyValueFile::read(manifest).get_all("file")) files.push_back(dir / name);
    return files;
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<CorrelationMatrix> read_correlation_dir(const fs::path& dir, const Tolerances& tol) {
  std::vector<CorrelationMatrix> out;
  for (const auto& f : list_matrix_files(dir)) out.push_back(read_correlation_matrix(f, tol));
  return out;
}

std::vector<RawMatrix> read_raw_dir(const fs::path& dir) {
  std::vector<RawMatrix> out;
  for (const auto& f : list_matrix_files(dir)) out.push_back(read_raw_matrix(f));
  return out;
}

}  // namespace corrgan::io
