#include "cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "corrgan/canonicalize.hpp"
#include "corrgan/elliptope.hpp"
#include "corrgan/errors.hpp"
#include "corrgan/gan/model.hpp"
#include "corrgan/ingest.hpp"
#include "corrgan/matrix_io.hpp"
#include "corrgan/nearest_correlation.hpp"
#include "corrgan/service.hpp"
#include "corrgan/stylized_facts.hpp"

// After Eigen: <resolv.h> defines a `_res` macro.
#include <httplib.h>

namespace corrgan::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kRunManifest = "run-manifest";
constexpr const char* kRunManifestFormat = "corrgan-run-manifest-1";
constexpr const char* kSetFormat = "corrgan-matrix-set-1";

void configure_logging() {
  static const auto logger = [] {
    auto l = spdlog::stderr_logger_mt("corrgan");
    l->set_pattern("[%l] %v");
    return l;
  }();
  const char* level = std::getenv("CORRGAN_LOG");
  logger->set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
  spdlog::set_default_logger(logger);
}

std::vector<Index> parse_widths(const std::string& text, const std::string& flag) {
  std::vector<Index> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<Index>(v));
    } catch (const std::logic_error&) {
      throw ConfigError(flag + ": expected comma-separated positive integers, got '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError(flag + ": no widths given");
  return out;
}

void make_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void require_dir(const fs::path& dir, const std::string& flag) {
  if (!fs::is_directory(dir)) throw IoError(flag + ": no such directory " + dir.string());
}

/// Matrix files plus a `manifest` listing them in order.
template <typename M>
void write_set(const fs::path& dir, const std::vector<M>& matrices, const std::string& kind,
               io::KeyValueFile extra = {}) {
  io::KeyValueFile kv;
  kv.add("format", kSetFormat);
  kv.add("kind", kind);
  kv.add("count", matrices.size());
  for (const auto& [k, v] : extra.entries()) kv.add(k, v);
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const auto name = io::matrix_file_name(i);
    io::write_corrmat_csv(dir / name, matrices[i]);
    kv.add("file", name);
  }
  kv.write(dir / "manifest");
}

/// Full effective option set of the chosen subcommand, so that `rerun` can replay it.
void write_run_manifest(const CLI::App& sub, const fs::path& dir) {
  io::KeyValueFile kv;
  kv.add("format", kRunManifestFormat);
  kv.add("command", sub.get_name());
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    if (opt->get_expected_min() == 0) {
      kv.add("flag." + name, opt->count() > 0);
      continue;
    }
    const std::string value = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
    if (!value.empty()) kv.add("option." + name, value);
  }
  kv.write(dir / kRunManifest);
}

std::vector<std::string> replay_args(const fs::path& manifest, const std::optional<fs::path>& out) {
  const auto kv = io::KeyValueFile::read(manifest);
  if (kv.get_or("format", "") != kRunManifestFormat) throw IoError(manifest.string() + ": not a run manifest");
  std::vector<std::string> args{kv.get("command")};
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("flag.", 0) == 0) {
      if (value == "true") args.push_back("--" + key.substr(5));
    } else if (key.rfind("option.", 0) == 0) {
      const auto name = key.substr(7);
      if (name == "out" && out) continue;
      args.push_back("--" + name);
      args.push_back(value);
    }
  }
  if (out) {
    args.push_back("--out");
    args.push_back(out->string());
  }
  return args;
}

std::atomic<httplib::Server*> active_server{nullptr};

extern "C" void stop_server(int) {
  if (auto* s = active_server.load()) s->stop();
}

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

int fail(std::ostream& err, int code, const std::string& kind, const std::string& message) {
  err << "error code=" << code << " kind=" << kind << ": " << one_line(message) << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Generative modelling and validation of financial correlation matrices", "corrgan"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  fs::path out_dir;
  const auto add_common = [&](CLI::App* s, bool out_required = true) {
    s->add_option("--seed", seed, "Seed for every random draw of the run");
    auto* o = s->add_option("--out", out_dir, "Output directory");
    if (out_required) o->required();
  };

  // sample-elliptope
  auto* sample = app.add_subcommand("sample-elliptope", "Uniform samples from the set of n x n correlation matrices");
  Index sample_n = 0;
  std::size_t sample_count = 0;
  std::string sample_method = "onion";
  sample->add_option("--n", sample_n, "Matrix dimension")->required();
  sample->add_option("--count", sample_count, "Number of matrices")->required();
  sample->add_option("--method", sample_method, "onion or rejection (n <= 4)")
      ->check(CLI::IsMember({"onion", "rejection"}));
  add_common(sample);

  // build-dataset
  auto* dataset = app.add_subcommand("build-dataset", "Rolling-window correlation dataset from returns");
  fs::path returns_csv;
  std::string return_kind = "unspecified";
  ingest::FactorMarketParams market;
  market.n_assets = 100;
  market.n_days = 2520;
  ingest::DatasetConfig dcfg;
  dataset->add_option("--returns", returns_csv, "Wide returns CSV (date,TICKER,...); synthetic market when absent");
  dataset->add_option("--return-kind", return_kind, "simple, log or unspecified")
      ->check(CLI::IsMember({"simple", "log", "unspecified"}));
  dataset->add_option("--assets", market.n_assets, "Synthetic market: number of assets");
  dataset->add_option("--days", market.n_days, "Synthetic market: trading days");
  dataset->add_option("--sectors", market.n_sectors, "Synthetic market: sectors");
  dataset->add_option("--universe-size", dcfg.universe_size, "Assets per matrix");
  dataset->add_option("--window", dcfg.window, "Window length in days");
  dataset->add_option("--stride", dcfg.stride, "Window stride in days");
  dataset->add_option("--count", dcfg.target_count, "Number of matrices");
  add_common(dataset);

  // canonicalize
  auto* canon_cmd = app.add_subcommand("canonicalize", "Reorder matrices into their hierarchical canonical form");
  fs::path canon_in;
  canon_cmd->add_option("--in", canon_in, "Matrix file or directory")->required();
  add_common(canon_cmd);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a GAN on a canonical dataset");
  fs::path train_data;
  std::string variant = "dense", g_widths = "64,64", d_widths = "64,64", g_hidden = "relu", d_hidden = "leaky_relu";
  Index latent = 32;
  bool g_batchnorm = false;
  gan::TrainConfig tcfg;
  train_cmd->add_option("--data", train_data, "Dataset directory")->required();
  train_cmd->add_option("--variant", variant, "dense or conv")->check(CLI::IsMember({"dense", "conv"}));
  train_cmd->add_option("--latent", latent, "Latent dimension");
  train_cmd->add_option("--g-widths", g_widths, "Generator widths (conv: channels), comma-separated");
  train_cmd->add_option("--d-widths", d_widths, "Discriminator widths (conv: channels), comma-separated");
  train_cmd->add_option("--g-hidden", g_hidden, "Generator hidden activation");
  train_cmd->add_option("--d-hidden", d_hidden, "Discriminator hidden activation");
  train_cmd->add_flag("--g-batchnorm", g_batchnorm, "Batch normalization in the dense generator");
  train_cmd->add_option("--batch", tcfg.batch_size, "Batch size");
  train_cmd->add_option("--lr-g", tcfg.lr_generator, "Generator learning rate");
  train_cmd->add_option("--lr-d", tcfg.lr_discriminator, "Discriminator learning rate");
  train_cmd->add_option("--beta1", tcfg.beta1, "Adam first-moment decay");
  train_cmd->add_option("--beta2", tcfg.beta2, "Adam second-moment decay");
  train_cmd->add_option("--epochs", tcfg.epochs, "Epochs");
  train_cmd->add_flag("--label-smoothing", tcfg.label_smoothing, "Real label 0.9");
  train_cmd->add_option("--checkpoint-every", tcfg.checkpoint_every, "Epochs between checkpoints (0 disables)");
  add_common(train_cmd);

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Sample raw matrices from a trained generator");
  fs::path model_path;
  std::size_t gen_count = 0;
  gen_cmd->add_option("--model", model_path, "Checkpoint file")->required();
  gen_cmd->add_option("--count", gen_count, "Number of samples")->required();
  add_common(gen_cmd);

  // repair
  auto* repair_cmd = app.add_subcommand("repair", "Nearest correlation matrix for every raw matrix of a directory");
  fs::path repair_in;
  repair::RepairConfig rcfg;
  repair_cmd->add_option("--in", repair_in, "Directory of raw matrices")->required();
  repair_cmd->add_option("--tol", rcfg.tol, "Convergence tolerance");
  repair_cmd->add_option("--max-iter", rcfg.max_iter, "Iteration cap");
  add_common(repair_cmd);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Stylized-facts comparison of a candidate set with a reference set");
  fs::path ref_dir, cand_dir;
  facts::Thresholds thresholds;
  std::optional<Index> window_days;
  eval_cmd->add_option("--reference", ref_dir, "Reference directory")->required();
  eval_cmd->add_option("--candidate", cand_dir, "Candidate directory")->required();
  eval_cmd->add_option("--window-days", window_days, "Sample length behind the reference (default: its manifest, else 252)");
  eval_cmd->add_option("--mean-diff", thresholds.mean_diff, "Threshold on |mean difference|");
  eval_cmd->add_option("--std-diff", thresholds.std_diff, "Threshold on |std difference|");
  eval_cmd->add_option("--lambda1-ks", thresholds.lambda1_ks, "Threshold on the lambda_1 KS statistic");
  eval_cmd->add_option("--pf-rate-diff", thresholds.pf_rate_diff, "Threshold on the Perron-Frobenius pass-rate deficit");
  eval_cmd->add_option("--hierarchy-ks", thresholds.hierarchy_ks, "Threshold on the hierarchy-score KS statistic");
  eval_cmd->add_option("--degree-chi2", thresholds.degree_chi2, "Threshold on the MST degree chi-square distance");
  add_common(eval_cmd);

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Real-or-fake guessing game over HTTP");
  fs::path real_dir, fake_dir, log_file, static_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::uint64_t> serve_seed;
  long ttl_seconds = 3600;
  serve_cmd->add_option("--real-dir", real_dir, "Directory of real matrices")->required();
  serve_cmd->add_option("--fake-dir", fake_dir, "Directory of repaired generated matrices")->required();
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)");
  serve_cmd->add_option("--log-file", log_file, "Append-only guess log")->required();
  serve_cmd->add_option("--seed", serve_seed, "Seed for label draws (entropy when absent)");
  serve_cmd->add_option("--ttl", ttl_seconds, "Seconds before an unanswered challenge expires");
  serve_cmd->add_option("--static-dir", static_dir, "Serve static files from this directory");
  serve_cmd->add_option("--out", out_dir, "Directory for the run manifest (default: next to the log)");

  // rerun
  auto* rerun_cmd = app.add_subcommand("rerun", "Replay the run recorded in a run-manifest");
  fs::path manifest_path;
  std::optional<fs::path> rerun_out;
  rerun_cmd->add_option("--manifest", manifest_path, "run-manifest file")->required();
  rerun_cmd->add_option("--out", rerun_out, "Output directory (default: the recorded one)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ConversionError& e) {
    return fail(err, invalid, "config", e.what());
  } catch (const CLI::ValidationError& e) {
    return fail(err, invalid, "config", e.what());
  } catch (const CLI::ParseError& e) {
    err << app.help();
    return fail(err, usage, "usage", e.what());
  }

  try {
    if (rerun_cmd->parsed()) return run(replay_args(manifest_path, rerun_out), out, err);

    CLI::App* chosen = app.get_subcommands().front();
    if (chosen != serve_cmd) {
      make_out_dir(out_dir);
      write_run_manifest(*chosen, out_dir);
    }

    if (sample->parsed()) {
      const elliptope::SamplerConfig cfg{sample_n, sample_count, seed};
      const auto set = sample_method == "onion" ? elliptope::sample_onion(cfg) : elliptope::rejection_oracle(cfg).samples;
      io::KeyValueFile extra;
      extra.add("n", sample_n);
      write_set(out_dir, set, "elliptope-" + sample_method, extra);
      out << "wrote " << set.size() << " matrices to " << out_dir.string() << '\n';
      return ok;
    }

    if (dataset->parsed()) {
      ReturnsPanel panel = [&] {
        if (!returns_csv.empty()) {
          const auto kind = return_kind == "simple" ? ReturnKind::simple
                            : return_kind == "log" ? ReturnKind::log
                                                   : ReturnKind::unspecified;
          auto loaded = ingest::load_returns_csv(returns_csv, kind);
          spdlog::info("read {} days x {} assets, dropped {} rows", loaded.panel.days(), loaded.panel.assets(),
                       loaded.report.drop_count);
          dcfg.source = ingest::DataSource::real;
          return std::move(loaded.panel);
        }
        market.seed = derive_seed(seed, "market");
        dcfg.source = ingest::DataSource::synthetic;
        return ingest::synth_factor_market(market);
      }();
      dcfg.seed = derive_seed(seed, "dataset");
      const auto manifest = ingest::build_dataset(panel, dcfg, out_dir);
      out << "wrote " << manifest.matrix_count << " canonical " << dcfg.universe_size << "x" << dcfg.universe_size
          << " matrices to " << out_dir.string() << '\n';
      return ok;
    }

    if (canon_cmd->parsed()) {
      const std::vector<fs::path> files = fs::is_directory(canon_in) ? io::list_matrix_files(canon_in)
                                                                     : std::vector<fs::path>{canon_in};
      std::ostringstream perms;
      io::KeyValueFile kv;
      kv.add("format", kSetFormat);
      kv.add("kind", "canonical");
      kv.add("count", files.size());
      std::size_t ambiguous = 0;
      for (const auto& f : files) {
        const auto form = canon::canonicalize_with_order(io::read_correlation_matrix(f));
        const auto name = f.filename().string();
        io::write_corrmat_csv(out_dir / name, form.matrix);
        kv.add("file", name);
        perms << name << ' ' << (form.permutation.ambiguous ? "ambiguous" : "unique") << ' '
              << io::format_index_line(form.permutation.order) << '\n';
        ambiguous += form.permutation.ambiguous;
      }
      kv.write(out_dir / "manifest");
      io::write_text(out_dir / "permutations.txt", perms.str());
      if (ambiguous > 0) spdlog::warn("{} matrices have tied merge heights; order fixed by index", ambiguous);
      out << "canonicalized " << files.size() << " matrices into " << out_dir.string() << '\n';
      return ok;
    }

    if (train_cmd->parsed()) {
      require_dir(train_data, "--data");
      const auto data = io::read_correlation_dir(train_data);
      if (data.empty()) throw ConfigError("--data: no matrices in " + train_data.string());
      const Index n = data.front().n();
      const auto gw = parse_widths(g_widths, "--g-widths");
      const auto dw = parse_widths(d_widths, "--d-widths");
      auto arch = gan::parse_variant(variant) == gan::Variant::conv ? gan::ArchitectureDescriptor::conv(n, latent, gw, dw)
                                                                    : gan::ArchitectureDescriptor::dense(n, latent, gw, dw);
      arch.generator_hidden = gan::parse_activation(g_hidden);
      arch.discriminator_hidden = gan::parse_activation(d_hidden);
      if (arch.variant == gan::Variant::dense) arch.generator_batchnorm = g_batchnorm;
      tcfg.seed = seed;
      if (tcfg.checkpoint_every > 0) tcfg.checkpoint_dir = out_dir / "checkpoints";
      spdlog::info("training {} GAN on {} matrices of size {}", variant, data.size(), n);
      const auto result = gan::train(data, arch, tcfg);
      gan::save_checkpoint(result.model, out_dir / "model.ckpt");
      io::write_text(out_dir / "training_log.csv", result.log.to_csv());
      out << "trained " << result.log.steps() << " steps; final d_loss " << result.log.d_loss.back() << " g_loss "
          << result.log.g_loss.back() << "; model at " << (out_dir / "model.ckpt").string() << '\n';
      return ok;
    }

    if (gen_cmd->parsed()) {
      const auto model = gan::load_checkpoint(model_path);
      const auto samples = gan::generate(model, gen_count, seed);
      io::KeyValueFile extra;
      extra.add("n", model.arch.n);
      extra.add("model", model_path.string());
      write_set(out_dir, samples, "generated-raw", extra);
      out << "wrote " << samples.size() << " raw samples to " << out_dir.string() << '\n';
      return ok;
    }

    if (repair_cmd->parsed()) {
      require_dir(repair_in, "--in");
      rcfg.validate();
      const auto files = io::list_matrix_files(repair_in);
      std::vector<CorrelationMatrix> repaired;
      std::ostringstream log;
      log << "file,iterations,residual,final_distance,max_distance_increase,converged\n";
      std::size_t failed = 0;
      for (const auto& f : files) {
        const auto name = f.filename().string();
        try {
          const auto r = repair::nearest_correlation(io::read_raw_matrix(f), rcfg);
          log << name << ',' << r.iterations << ',' << io::format_double(r.residual) << ','
              << io::format_double(r.distance_trace.back()) << ',' << io::format_double(r.max_distance_increase)
              << ",true\n";
          repaired.push_back(r.matrix);
        } catch (const repair::NonConvergenceError& e) {
          log << name << ',' << rcfg.max_iter << ',' << io::format_double(e.residual()) << ",,,false\n";
          ++failed;
        }
      }
      write_set(out_dir, repaired, "repaired");
      io::write_text(out_dir / "repair_log.csv", log.str());
      out << "repaired " << repaired.size() << " of " << files.size() << " matrices into " << out_dir.string() << '\n';
      if (failed > 0) {
        return fail(err, failure, "numerical", std::to_string(failed) + " matrices did not converge (see repair_log.csv)");
      }
      return ok;
    }

    if (eval_cmd->parsed()) {
      require_dir(ref_dir, "--reference");
      require_dir(cand_dir, "--candidate");
      if (window_days) {
        thresholds.window_days = *window_days;
      } else if (fs::exists(ref_dir / "manifest") &&
                 io::KeyValueFile::read(ref_dir / "manifest").contains("window_days")) {
        thresholds.window_days = ingest::read_dataset_manifest(ref_dir).window_days;
      }
      const auto reference = io::read_correlation_dir(ref_dir);
      const auto candidate = io::read_correlation_dir(cand_dir);
      const auto report = facts::stylized_report(reference, candidate, thresholds);
      report.to_key_values().write(out_dir / "report.txt");
      report.write_histograms(out_dir);
      for (const auto& v : report.verdicts) out << (v.passed ? "PASS " : "FAIL ") << v.fact << ": " << v.detail << '\n';
      if (report.tail_deficit) out << "note: candidate under-represents high-degree MST hubs\n";
      out << "report at " << (out_dir / "report.txt").string() << '\n';
      return ok;
    }

    if (serve_cmd->parsed()) {
      require_dir(real_dir, "--real-dir");
      require_dir(fake_dir, "--fake-dir");
      if (out_dir.empty()) out_dir = log_file.has_parent_path() ? log_file.parent_path() : fs::path(".");
      make_out_dir(out_dir);
      write_run_manifest(*serve_cmd, out_dir);
      service::ServiceConfig cfg;
      cfg.seed = serve_seed;
      cfg.ttl = std::chrono::seconds(ttl_seconds);
      cfg.log_file = log_file;
      service::ChallengeService svc(io::read_correlation_dir(real_dir), io::read_correlation_dir(fake_dir), cfg);
      httplib::Server server;
      service::install_routes(server, svc, static_dir.empty() ? std::nullopt : std::optional<fs::path>(static_dir));
      const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
      if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
      out << "listening on http://" << host << ':' << bound << '\n' << std::flush;
      active_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      server.listen_after_bind();
      active_server = nullptr;
      return ok;
    }
  } catch (const IoError& e) {
    return fail(err, io_failure, "io", e.what());
  } catch (const ConfigError& e) {
    return fail(err, invalid, "config", e.what());
  } catch (const ShapeError& e) {
    return fail(err, invalid, "data", e.what());
  } catch (const StructuralError& e) {
    return fail(err, invalid, "data", e.what());
  } catch (const DomainError& e) {
    return fail(err, invalid, "data", e.what());
  } catch (const DegenerateDataError& e) {
    return fail(err, invalid, "data", e.what());
  } catch (const std::exception& e) {
    return fail(err, failure, "runtime", e.what());
  }
  return fail(err, usage, "usage", "no subcommand given");
}

}  // namespace corrgan::cli
