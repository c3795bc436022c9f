#include "corrgan/ingest.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "corrgan/canonicalize.hpp"
#include "corrgan/errors.hpp"
#include "corrgan/rng.hpp"

namespace corrgan::ingest {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(trim(field));
  return out;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == "NULL";
}

std::vector<std::string> business_days(std::size_t count) {
  using namespace std::chrono;
  std::vector<std::string> out;
  out.reserve(count);
  sys_days day = sys_days{year{2000} / January / 3};  // a Monday
  while (out.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{day};
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    day += days{1};
  }
  return out;
}

double log_binomial(Index n, Index k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

LoadedPanel parse_returns_csv(const std::string& text, ReturnKind kind, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.size() < 2 || header.front() != "date") {
    throw IoError(origin + ": malformed header, expected date,<ticker1>,...");
  }
  std::vector<std::string> tickers(header.begin() + 1, header.end());
  std::set<std::string> seen;
  for (const auto& t : tickers) {
    if (t.empty()) throw IoError(origin + ": empty ticker name in header");
    if (!seen.insert(t).second) throw IoError(origin + ": duplicate ticker " + t);
  }

  LoadReport report;
  std::vector<std::string> dates;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = origin + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) throw IoError(where + ": expected " + std::to_string(header.size()) + " fields");
    ++report.rows_read;
    if (!is_iso_date(fields[0])) throw IoError(where + ": unparseable date '" + fields[0] + "'");
    std::vector<double> row;
    bool missing = false;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const std::string& f = fields[k];
      if (is_missing(f)) {
        missing = true;
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw IoError(where + ": unparseable number '" + f + "'");
      }
      if (!std::isfinite(v)) {
        missing = true;
        continue;
      }
      row.push_back(v);
    }
    if (missing) {
      ++report.drop_count;
      continue;
    }
    dates.push_back(fields[0]);
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw IoError(origin + ": fewer than 2 usable rows");

  Eigen::MatrixXd values(static_cast<Index>(rows.size()), static_cast<Index>(tickers.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < tickers.size(); ++j) values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  try {
    return {ReturnsPanel(std::move(tickers), std::move(dates), std::move(values), kind), report};
  } catch (const StructuralError& e) {
    throw IoError(origin + ": " + e.what());
  }
}

LoadedPanel load_returns_csv(const fs::path& path, ReturnKind kind) {
  return parse_returns_csv(io::read_text(path), kind, path.string());
}

void write_returns_csv(const fs::path& path, const ReturnsPanel& panel) {
  std::string out = "date";
  for (const auto& t : panel.tickers()) out += "," + t;
  out += '\n';
  char buf[64];
  for (Index i = 0; i < panel.days(); ++i) {
    out += panel.dates()[static_cast<std::size_t>(i)];
    for (Index j = 0; j < panel.assets(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof buf, panel.returns()(i, j));
      out += ',';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  io::write_text(path, out);
}

Index window_count(Index days, Index window, Index stride) {
  if (window < 2 || stride < 1) throw ConfigError("window must be >= 2 and stride >= 1");
  if (window > days) return 0;
  return (days - window) / stride + 1;
}

std::vector<ReturnsPanel> rolling_windows(const ReturnsPanel& panel, Index window, Index stride) {
  const Index count = window_count(panel.days(), window, stride);
  if (count == 0) {
    throw ConfigError("window of " + std::to_string(window) + " days exceeds panel length " +
                      std::to_string(panel.days()));
  }
  std::vector<ReturnsPanel> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index w = 0; w < count; ++w) out.push_back(panel.rows(w * stride, window));
  return out;
}

ReturnsPanel random_subuniverse(const ReturnsPanel& panel, Index k, std::uint64_t seed) {
  const Index n = panel.assets();
  if (k < 2 || k > n) {
    throw ConfigError("sub-universe size " + std::to_string(k) + " outside [2, " + std::to_string(n) + "]");
  }
  Philox rng(seed);
  Permutation idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const auto j = static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(n - i))) + i;
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return panel.columns(idx);
}

void FactorMarketParams::validate() const {
  if (n_assets < 2) throw ConfigError("factor market: n_assets must be >= 2");
  if (n_days < 2) throw ConfigError("factor market: n_days must be >= 2");
  if (n_sectors < 1 || n_sectors > n_assets) throw ConfigError("factor market: need 1 <= n_sectors <= n_assets");
  if (!(market_vol > 0.0) || !(idio_vol > 0.0)) throw ConfigError("factor market: volatilities must be > 0");
  if (!(sector_loading >= 0.0)) throw ConfigError("factor market: sector_loading must be >= 0");
  if (!(beta_low <= beta_high)) throw ConfigError("factor market: beta range must satisfy low <= high");
}

Index sector_of(Index asset, Index n_assets, Index n_sectors) { return asset * n_sectors / n_assets; }

ReturnsPanel synth_factor_market(const FactorMarketParams& p) {
  p.validate();
  Philox beta_rng(derive_seed(p.seed, "betas"));
  Philox market_rng(derive_seed(p.seed, "market"));
  Philox sector_rng(derive_seed(p.seed, "sectors"));
  Philox idio_rng(derive_seed(p.seed, "idiosyncratic"));

  Eigen::VectorXd beta(p.n_assets);
  for (Index i = 0; i < p.n_assets; ++i) beta(i) = p.beta_low + (p.beta_high - p.beta_low) * beta_rng.uniform01();

  Eigen::MatrixXd r(p.n_days, p.n_assets);
  Eigen::VectorXd sector(p.n_sectors);
  for (Index t = 0; t < p.n_days; ++t) {
    const double m = p.market_vol * standard_normal(market_rng);
    for (Index s = 0; s < p.n_sectors; ++s) sector(s) = standard_normal(sector_rng);
    for (Index i = 0; i < p.n_assets; ++i) {
      r(t, i) = beta(i) * m + p.sector_loading * sector(sector_of(i, p.n_assets, p.n_sectors)) +
                p.idio_vol * standard_normal(idio_rng);
    }
  }

  std::vector<std::string> tickers;
  for (Index i = 0; i < p.n_assets; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "S%02lld_%04lld", static_cast<long long>(sector_of(i, p.n_assets, p.n_sectors)),
                  static_cast<long long>(i));
    tickers.emplace_back(buf);
  }
  return ReturnsPanel(std::move(tickers), business_days(static_cast<std::size_t>(p.n_days)), std::move(r),
                      ReturnKind::simple);
}

std::string to_string(DataSource source) { return source == DataSource::real ? "real" : "synthetic"; }

DataSource parse_data_source(const std::string& s) {
  if (s == "real") return DataSource::real;
  if (s == "synthetic") return DataSource::synthetic;
  throw ConfigError("unknown data source: " + s);
}

void DatasetConfig::validate() const {
  if (window < 2) throw ConfigError("dataset: window must be >= 2");
  if (stride < 1) throw ConfigError("dataset: stride must be >= 1");
  if (universe_size < 2) throw ConfigError("dataset: universe_size must be >= 2");
  if (target_count < 1) throw ConfigError("dataset: target_count must be >= 1");
}

std::vector<CorrelationMatrix> build_dataset_matrices(const ReturnsPanel& panel, const DatasetConfig& cfg) {
  cfg.validate();
  if (cfg.universe_size > panel.assets()) {
    throw ConfigError("dataset: universe_size " + std::to_string(cfg.universe_size) + " exceeds panel width " +
                      std::to_string(panel.assets()));
  }
  const Index windows = window_count(panel.days(), cfg.window, cfg.stride);
  if (windows == 0) {
    throw ConfigError("dataset: window of " + std::to_string(cfg.window) + " days exceeds panel length " +
                      std::to_string(panel.days()));
  }
  const double log_draws = std::log(static_cast<double>(windows)) + log_binomial(panel.assets(), cfg.universe_size);
  if (log_draws < std::log(static_cast<double>(cfg.target_count)) - 1e-9) {
    throw ConfigError("dataset: panel supports fewer distinct (window, universe) draws than target_count=" +
                      std::to_string(cfg.target_count));
  }

  std::vector<CorrelationMatrix> out;
  out.reserve(cfg.target_count);
  for (std::size_t i = 0; i < cfg.target_count; ++i) {
    Philox rng(cfg.seed, i);
    const auto w = static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(windows)));
    const ReturnsPanel window = panel.rows(w * cfg.stride, cfg.window);
    const ReturnsPanel universe = random_subuniverse(window, cfg.universe_size, mix_seed(cfg.seed, i));
    out.push_back(canon::canonicalize(estimate_correlation(universe)));
  }
  return out;
}

io::KeyValueFile DatasetManifest::to_key_values() const {
  io::KeyValueFile kv;
  kv.add("format", "corrgan-dataset-1");
  kv.add("source", to_string(source));
  kv.add("window_days", window_days);
  kv.add("stride", stride);
  kv.add("universe_size", universe_size);
  kv.add("matrix_count", matrix_count);
  kv.add("canonicalized", canonicalized);
  kv.add("seed", seed);
  for (const auto& f : files) kv.add("file", f);
  return kv;
}

DatasetManifest DatasetManifest::from_key_values(const io::KeyValueFile& kv) {
  DatasetManifest m;
  try {
    m.source = parse_data_source(kv.get("source"));
    m.window_days = std::stoll(kv.get("window_days"));
    m.stride = std::stoll(kv.get("stride"));
    m.universe_size = std::stoll(kv.get("universe_size"));
    m.matrix_count = std::stoull(kv.get("matrix_count"));
    m.canonicalized = kv.get("canonicalized") == "true";
    m.seed = std::stoull(kv.get("seed"));
  } catch (const std::logic_error& e) {
    throw IoError(std::string("dataset manifest: malformed value: ") + e.what());
  }
  m.files = kv.get_all("file");
  if (m.files.size() != m.matrix_count) throw IoError("dataset manifest: matrix_count does not match file list");
  return m;
}

DatasetManifest build_dataset(const ReturnsPanel& panel, const DatasetConfig& cfg, const fs::path& out_dir) {
  const auto matrices = build_dataset_matrices(panel, cfg);
  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.source = cfg.source;
  manifest.window_days = cfg.window;
  manifest.stride = cfg.stride;
  manifest.universe_size = cfg.universe_size;
  manifest.matrix_count = matrices.size();
  manifest.canonicalized = true;
  manifest.seed = cfg.seed;
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    manifest.files.push_back(io::matrix_file_name(i));
    io::write_corrmat_csv(out_dir / manifest.files.back(), matrices[i]);
  }
  manifest.to_key_values().write(out_dir / "manifest");
  return manifest;
}

DatasetManifest read_dataset_manifest(const fs::path& dir) {
  return DatasetManifest::from_key_values(io::KeyValueFile::read(dir / "manifest"));
}

}  // namespace corrgan::ingest
