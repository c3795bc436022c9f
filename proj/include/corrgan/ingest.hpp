#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "corrgan/matrix_io.hpp"
#include "corrgan/returns.hpp"

namespace corrgan::ingest {

namespace fs = std::filesystem;

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t drop_count = 0;
};

struct LoadedPanel {
  ReturnsPanel panel;
  LoadReport report;
};

/// Wide CSV: header `date,<ticker1>,...,<tickerN>`, then one row per date.
/// Rows with a missing value (empty, NA, NaN, null) are dropped and counted.
LoadedPanel parse_returns_csv(const std::string& text, ReturnKind kind = ReturnKind::unspecified,
                              const std::string& origin = "<memory>");
LoadedPanel load_returns_csv(const fs::path& path, ReturnKind kind = ReturnKind::unspecified);
void write_returns_csv(const fs::path& path, const ReturnsPanel& panel);

/// Windows of exactly `window` rows starting at 0, stride, 2*stride, ...
std::vector<ReturnsPanel> rolling_windows(const ReturnsPanel& panel, Index window = 252, Index stride = 252);
Index window_count(Index days, Index window, Index stride);

/// k distinct tickers drawn uniformly without replacement, in draw order.
ReturnsPanel random_subuniverse(const ReturnsPanel& panel, Index k, std::uint64_t seed);

/// One-factor-plus-sectors market:
///   r_it = beta_i * m_t + sector_loading * s_{sector(i),t} + eps_it
/// with m ~ N(0, market_vol^2), s ~ N(0, 1), eps ~ N(0, idio_vol^2) and
/// betas uniform on the given range. Assets are split evenly into sectors.
///
/// The defaults give a mean pairwise correlation of about 0.36 with a
/// dispersion of about 0.13 at n = 20, T = 252 (see README for the sweep).
struct FactorMarketParams {
  Index n_assets = 20;
  Index n_days = 252;
  Index n_sectors = 4;
  double market_vol = 0.017;
  double beta_low = 0.5;
  double beta_high = 1.5;
  double sector_loading = 0.012;
  double idio_vol = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
};

ReturnsPanel synth_factor_market(const FactorMarketParams& params);

/// Sector of asset i under the even split used by synth_factor_market.
Index sector_of(Index asset, Index n_assets, Index n_sectors);

enum class DataSource { real, synthetic };
std::string to_string(DataSource source);
DataSource parse_data_source(const std::string& s);

struct DatasetConfig {
  Index window = 252;
  Index stride = 21;
  Index universe_size = 20;
  std::size_t target_count = 10;
  std::uint64_t seed = 0;
  DataSource source = DataSource::synthetic;

  void validate() const;
};

struct DatasetManifest {
  DataSource source = DataSource::synthetic;
  Index window_days = 0;
  Index stride = 0;
  Index universe_size = 0;
  std::size_t matrix_count = 0;
  bool canonicalized = false;
  std::uint64_t seed = 0;
  std::vector<std::string> files;

  io::KeyValueFile to_key_values() const;
  static DatasetManifest from_key_values(const io::KeyValueFile& kv);
};

/// Each matrix i draws a window and a sub-universe from stream i of cfg.seed,
/// estimates the Pearson correlation and canonicalizes it.
/// Throws ConfigError when the panel cannot supply target_count distinct
/// (window, universe) draws.
std::vector<CorrelationMatrix> build_dataset_matrices(const ReturnsPanel& panel, const DatasetConfig& cfg);

/// build_dataset_matrices, written as corrmat-csv files plus `manifest`.
DatasetManifest build_dataset(const ReturnsPanel& panel, const DatasetConfig& cfg, const fs::path& out_dir);

DatasetManifest read_dataset_manifest(const fs::path& dir);

}  // namespace corrgan::ingest
