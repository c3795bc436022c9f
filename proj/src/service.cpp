#include "corrgan/service.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "corrgan/errors.hpp"

namespace corrgan::service {

using json = nlohmann::ordered_json;

std::string to_string(Label l) { return l == Label::real ? "real" : "fake"; }

std::optional<Label> parse_label(const std::string& text) {
  if (text == "real") return Label::real;
  if (text == "fake") return Label::fake;
  return std::nullopt;
}

std::string to_log_line(const GuessRecord& r) {
  json j;
  j["id"] = r.id;
  j["guess"] = to_string(r.guess);
  j["true_label"] = to_string(r.true_label);
  j["correct"] = r.correct;
  j["timestamp_ms"] = r.timestamp_ms;
  return j.dump();
}

GuessRecord parse_log_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    GuessRecord r;
    r.id = j.at("id").get<std::string>();
    const auto guess = parse_label(j.at("guess").get<std::string>());
    const auto truth = parse_label(j.at("true_label").get<std::string>());
    if (!guess || !truth) throw IoError("guess log: unknown label in '" + line + "'");
    r.guess = *guess;
    r.true_label = *truth;
    r.correct = j.at("correct").get<bool>();
    r.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    if (r.correct != (r.guess == r.true_label)) throw IoError("guess log: inconsistent record '" + line + "'");
    return r;
  } catch (const json::exception& e) {
    throw IoError("guess log: malformed record '" + line + "': " + e.what());
  }
}

std::optional<double> Stats::accuracy() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

Stats fold(const std::vector<GuessRecord>& records) {
  Stats s;
  s.per_label[Label::real];
  s.per_label[Label::fake];
  for (const auto& r : records) {
    ++s.total;
    s.correct += r.correct;
    auto& l = s.per_label[r.true_label];
    ++l.total;
    l.correct += r.correct;
  }
  return s;
}

namespace {

constexpr double kPayloadScale = 1e4;

Eigen::MatrixXd round4(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double v) { return std::round(v * kPayloadScale) / kPayloadScale; });
}

json accuracy_json(std::size_t correct, std::size_t total) {
  if (total == 0) return nullptr;
  return static_cast<double>(correct) / static_cast<double>(total);
}

json stats_json(const Stats& s) {
  json j;
  j["total"] = s.total;
  j["correct"] = s.correct;
  j["accuracy"] = accuracy_json(s.correct, s.total);
  json per;
  for (const auto& [label, c] : s.per_label) {
    per[to_string(label)] = {{"total", c.total}, {"correct", c.correct}, {"accuracy", accuracy_json(c.correct, c.total)}};
  }
  j["per_label"] = per;
  return j;
}

Response error(int status, const std::string& message) { return {status, json{{"error", message}}.dump()}; }

std::int64_t millis(std::chrono::system_clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

std::vector<Eigen::MatrixXd> payloads(const std::vector<CorrelationMatrix>& pool) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(pool.size());
  for (const auto& m : pool) out.push_back(payload_matrix(m));
  return out;
}

}  // namespace

Eigen::MatrixXd payload_matrix(const CorrelationMatrix& m) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(m.n(), m.n());
  for (int k = 0; k <= 10000; ++k) {
    const double t = k / kPayloadScale;
    const Eigen::MatrixXd r = round4((1.0 - t) * m.values() + t * id);
    if (validate(RawMatrix(r)).is_valid) return r;
  }
  return id;
}

ChallengeService::ChallengeService(std::vector<CorrelationMatrix> real, std::vector<CorrelationMatrix> fake,
                                   ServiceConfig cfg)
    : cfg_(std::move(cfg)), rng_(cfg_.seed ? *cfg_.seed : (std::uint64_t{std::random_device{}()} << 32) ^ std::random_device{}()) {
  // A dimension mismatch between pools would reveal the label.
  for (const auto* pool : {&real, &fake}) {
    for (const auto& m : *pool) {
      if (n_ == 0) n_ = m.n();
      if (m.n() != n_) throw ShapeError("service: every served matrix must have the same dimension");
    }
  }
  real_ = payloads(real);
  fake_ = payloads(fake);

  if (!cfg_.log_file.empty()) {
    if (std::filesystem::exists(cfg_.log_file)) {
      std::ifstream in(cfg_.log_file);
      if (!in) throw IoError("cannot read guess log " + cfg_.log_file.string());
      std::size_t line_no = 0;
      for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.empty()) continue;
        try {
          records_.push_back(parse_log_line(line));
        } catch (const IoError& e) {
          throw IoError(cfg_.log_file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        answered_.insert(records_.back().id);
      }
    }
    log_.open(cfg_.log_file, std::ios::app);
    if (!log_) throw IoError("cannot open guess log " + cfg_.log_file.string());
  }
}

void ChallengeService::expire(std::chrono::system_clock::time_point now) {
  for (auto it = pending_.begin(); it != pending_.end();) {
    it = now - it->second.created > cfg_.ttl ? pending_.erase(it) : std::next(it);
  }
}

std::string ChallengeService::next_id() {
  // A seeded restart replays the token sequence, so skip ids already in the log.
  while (true) {
    const std::uint64_t token = (std::uint64_t{rng_()} << 32) | rng_();
    std::ostringstream id;
    id << std::hex << token << '-' << std::dec << ++issued_;
    if (!answered_.count(id.str()) && !pending_.count(id.str())) return id.str();
  }
}

Response ChallengeService::challenge() {
  std::lock_guard lock(mutex_);
  const auto now = cfg_.now();
  expire(now);
  const Label label = (rng_() & 1u) ? Label::real : Label::fake;
  const auto& pool = label == Label::real ? real_ : fake_;
  if (pool.empty()) return error(503, "no " + to_string(label) + " matrices loaded");
  const auto& m = pool[uniform_index(rng_, pool.size())];
  std::string id = next_id();
  pending_.emplace(id, Pending{label, now});

  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  json j;
  j["id"] = std::move(id);
  j["n"] = m.rows();
  j["matrix"] = std::move(rows);
  return {200, j.dump()};
}

Response ChallengeService::guess(const std::string& body) {
  std::string id;
  Label guess = Label::real;
  try {
    const json j = json::parse(body);
    if (!j.is_object() || !j.contains("id") || !j.contains("guess") || !j["id"].is_string() ||
        !j["guess"].is_string()) {
      return error(400, "body must be {\"id\": string, \"guess\": \"real\" | \"fake\"}");
    }
    id = j["id"].get<std::string>();
    const auto g = parse_label(j["guess"].get<std::string>());
    if (!g) return error(400, "guess must be \"real\" or \"fake\"");
    guess = *g;
  } catch (const json::exception&) {
    return error(400, "body is not valid JSON");
  }

  std::lock_guard lock(mutex_);
  const auto now = cfg_.now();
  expire(now);
  if (answered_.count(id)) return error(409, "challenge " + id + " was already answered");
  const auto it = pending_.find(id);
  if (it == pending_.end()) return error(404, "unknown or expired challenge " + id);

  GuessRecord r{id, guess, it->second.label, guess == it->second.label, millis(now)};
  if (log_.is_open()) {
    log_ << to_log_line(r) << '\n';
    log_.flush();
    if (!log_) return error(500, "cannot append to guess log");
  }
  pending_.erase(it);
  answered_.insert(id);
  records_.push_back(r);
  const Stats s = fold(records_);

  json j;
  j["correct"] = r.correct;
  j["true_label"] = to_string(r.true_label);
  j["running_accuracy"] = *s.accuracy();
  return {200, j.dump()};
}

Response ChallengeService::stats() const { return {200, stats_json(snapshot()).dump()}; }

Stats ChallengeService::snapshot() const {
  std::lock_guard lock(mutex_);
  return fold(records_);
}

std::size_t ChallengeService::pending() const {
  std::lock_guard lock(mutex_);
  return pending_.size();
}

void install_routes(httplib::Server& server, ChallengeService& service,
                    const std::optional<std::filesystem::path>& static_dir) {
  const auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json; charset=utf-8");
  };
  server.Get("/api/challenge", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.challenge());
  });
  server.Post("/api/guess", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.guess(req.body));
  });
  server.Get("/api/stats", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.stats());
  });
  if (static_dir && !server.set_mount_point("/", static_dir->string())) {
    throw IoError("static directory " + static_dir->string() + " does not exist");
  }
}

}  // namespace corrgan::service
