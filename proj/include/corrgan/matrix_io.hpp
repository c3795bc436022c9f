#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "corrgan/correlation.hpp"

namespace corrgan::io {

namespace fs = std::filesystem;

/// corrmat-csv: no header, n rows of n comma-separated values printed with
/// 17 significant digits so that doubles round-trip exactly.
void write_corrmat_csv(const fs::path& path, const Eigen::MatrixXd& values);
inline void write_corrmat_csv(const fs::path& path, const CorrelationMatrix& m) {
  write_corrmat_csv(path, m.values());
}
inline void write_corrmat_csv(const fs::path& path, const RawMatrix& m) {
  write_corrmat_csv(path, m.values());
}

std::string format_corrmat_csv(const Eigen::MatrixXd& values);
Eigen::MatrixXd parse_corrmat_csv(const std::string& text, const std::string& origin = "<memory>");

/// Throws IoError when the file is missing, ragged or contains non-numbers;
/// StructuralError when not square.
RawMatrix read_raw_matrix(const fs::path& path);
/// As read_raw_matrix, then validated into a CorrelationMatrix.
CorrelationMatrix read_correlation_matrix(const fs::path& path, const Tolerances& tol = {});

std::string format_index_line(std::span<const Index> indices);
Permutation parse_index_line(const std::string& line);

/// Ordered key=value text. Repeated keys are allowed (e.g. one `file=` per entry).
class KeyValueFile {
 public:
  void add(std::string key, std::string value);
  template <typename T>
  void add(std::string key, const T& value) {
    add(std::move(key), std::to_string(value));
  }
  void add(std::string key, bool value) { add(std::move(key), std::string(value ? "true" : "false")); }
  void add(std::string key, const char* value) { add(std::move(key), std::string(value)); }
  void add(std::string key, double value);

  /// First value for key; throws IoError when missing.
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::vector<std::string> get_all(const std::string& key) const;
  bool contains(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  std::string str() const;
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<memory>");
  void write(const fs::path& path) const;
  static KeyValueFile read(const fs::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest decimal form that round-trips.
std::string format_double(double value);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// Matrix files of a directory: the `file=` entries of its `manifest` when
/// present, otherwise every *.csv in lexicographic order.
std::vector<fs::path> list_matrix_files(const fs::path& dir);
std::vector<CorrelationMatrix> read_correlation_dir(const fs::path& dir, const Tolerances& tol = {});
std::vector<RawMatrix> read_raw_dir(const fs::path& dir);

/// Name of the i-th matrix file in a set directory: matrix_000042.csv.
std::string matrix_file_name(std::size_t index);

}  // namespace corrgan::io
