#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "corrgan/correlation.hpp"
#include "corrgan/rng.hpp"

namespace httplib {
class Server;
}

namespace corrgan::service {

enum class Label { real, fake };

std::string to_string(Label l);
std::optional<Label> parse_label(const std::string& text);

struct GuessRecord {
  std::string id;
  Label guess = Label::real;
  Label true_label = Label::real;
  bool correct = false;
  std::int64_t timestamp_ms = 0;
};

/// One JSON object per line, fields in the order id, guess, true_label, correct, timestamp_ms.
std::string to_log_line(const GuessRecord& r);
/// Throws IoError on a malformed line or when correct disagrees with the labels.
GuessRecord parse_log_line(const std::string& line);

struct LabelCounts {
  std::size_t total = 0;
  std::size_t correct = 0;
  bool operator==(const LabelCounts&) const = default;
};

struct Stats {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::map<Label, LabelCounts> per_label;  // keyed by true label

  std::optional<double> accuracy() const;
  bool operator==(const Stats&) const = default;
};

/// Pure fold over guess records.
Stats fold(const std::vector<GuessRecord>& records);

/// Matrix as served: entries rounded to 4 decimals. When rounding breaks
/// validity the matrix is first shrunk toward the identity by the smallest
/// multiple of 1e-4 that keeps the rounded form valid.
Eigen::MatrixXd payload_matrix(const CorrelationMatrix& m);

struct Response {
  int status = 200;
  std::string body;  // JSON text
};

using Clock = std::function<std::chrono::system_clock::time_point()>;

struct ServiceConfig {
  /// Seeded label and pool draws; entropy-backed when empty.
  std::optional<std::uint64_t> seed;
  std::chrono::seconds ttl{3600};
  /// Append-only guess log, replayed at start-up. Empty keeps records in memory only.
  std::filesystem::path log_file;
  Clock now = [] { return std::chrono::system_clock::now(); };
};

/// Transport-independent core of the guessing game. Thread-safe.
class ChallengeService {
 public:
  /// Throws ShapeError when the pools mix dimensions and IoError when the log cannot be read or opened.
  ChallengeService(std::vector<CorrelationMatrix> real, std::vector<CorrelationMatrix> fake, ServiceConfig cfg);

  Response challenge();
  Response guess(const std::string& body);
  Response stats() const;

  Stats snapshot() const;
  std::size_t pending() const;

 private:
  struct Pending {
    Label label;
    std::chrono::system_clock::time_point created;
  };

  void expire(std::chrono::system_clock::time_point now);
  std::string next_id();

  std::vector<Eigen::MatrixXd> real_;
  std::vector<Eigen::MatrixXd> fake_;
  Index n_ = 0;
  ServiceConfig cfg_;
  Philox rng_;
  std::uint64_t issued_ = 0;
  std::map<std::string, Pending> pending_;
  std::set<std::string> answered_;
  std::vector<GuessRecord> records_;
  std::ofstream log_;
  mutable std::mutex mutex_;
};

/// Routes GET /api/challenge, POST /api/guess and GET /api/stats; serves
/// static files from static_dir when given.
void install_routes(httplib::Server& server, ChallengeService& service,
                    const std::optional<std::filesystem::path>& static_dir = std::nullopt);

}  // namespace corrgan::service
