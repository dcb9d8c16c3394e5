#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "selreg/abstention.hpp"
#include "selreg/config.hpp"
#include "selreg/data.hpp"
#include "selreg/estimator.hpp"
#include "selreg/experiments.hpp"

#ifndef SELREG_VERSION
#define SELREG_VERSION "unknown"
#endif

namespace selreg::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kRejected = 3 };

struct DecideArgs {
  std::string train;
  std::optional<std::size_t> target_col;  // default: last column
  bool header = false;
  std::vector<double> x;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::optional<double> z;
  std::optional<double> h;  // absent means LOO-CV
  std::string kernel = "gaussian";
};

struct ExperimentArgs {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the config seed
};

struct ValidateArgs {
  std::string csv;
  bool header = false;
  std::optional<std::size_t> target_col;
};

//! "1.5,-2,3e-1" -> {1.5, -2, 0.3}
inline std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  for (auto f : detail::split_fields(text)) {
    double v = 0.0;
    const auto* first = f.data();
    if (!f.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
      throw Error("--x: not a number: '" + std::string(f) + "'");
    out.push_back(v);
  }
  return out;
}

inline nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline int cmd_decide(const DecideArgs& a, std::ostream& out, std::ostream& err) {
  try {
    if (!a.lambda) throw Error("--lambda is required");
    if (a.beta && a.z) throw Error("give --beta or --z, not both");
    if (!a.beta && !a.z) throw Error("one of --beta or --z is required");

    std::ifstream in(a.train);
    if (!in) throw Error("cannot open '" + a.train + "'");
    const auto table = parse_csv(in, a.header);
    const std::size_t target = a.target_col.value_or(table.columns - 1);
    const Dataset train = to_dataset(table, target);
    if (a.x.size() != train.dim())
      throw Error("query has " + std::to_string(a.x.size()) + " coordinates, training data has " +
                  std::to_string(train.dim()) + " features");

    const auto kernel = make_kernel(parse_kernel_kind(a.kernel), train.dim());
    double h = 0.0;
    if (a.h) {
      h = *a.h;
    } else {
      h = resolve_bandwidth(LoocvBandwidth{}, train, kernel);
    }
    const FitState fit(train, kernel, h);

    Decision d;
    if (a.beta) {
      d = decide(fit, a.x, AbstentionConfig{*a.lambda, *a.beta});
    } else {
      if (!(*a.lambda > 0.0)) throw Error("lambda must be positive");
      d = decide_with_z(fit, a.x, *a.lambda, *a.z);
    }

    nlohmann::ordered_json line;
    line["verdict"] = to_string(d.verdict);
    line["reason"] = to_string(d.reason);
    line["f_hat"] = number_or_null(d.eval.f_hat);
    line["sigma2_hat"] = number_or_null(d.eval.sigma2_hat);
    line["p_hat"] = number_or_null(d.eval.p_hat);
    line["threshold"] = number_or_null(d.threshold);
    line["h"] = h;
    out << line.dump() << '\n';
    return d.accepted() ? kOk : kRejected;
  } catch (const std::exception& e) {
    err << "selreg decide: " << e.what() << '\n';
    return kFailure;
  }
}

namespace detail {

//! 64-bit FNV-1a, streamed.
struct Fnv1a {
  std::uint64_t state = 0xcbf29ce484222325ULL;
  void update(const std::string& bytes) {
    for (unsigned char c : bytes) {
      state ^= c;
      state *= 0x100000001b3ULL;
    }
  }
  std::string hex() const {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << state;
    return s.str();
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

//! Data files a config reads, in a fixed order.
inline std::vector<std::string> input_files(const ExperimentConfig& cfg) {
  if (!cfg.source) return {};
  if (const auto* p = std::get_if<CsvPairSource>(&*cfg.source)) return {p->train_csv, p->test_csv};
  if (const auto* s = std::get_if<CsvSplitSource>(&*cfg.source)) return {s->csv};
  return {};
}

}  // namespace detail

//! Runs a scenario from a JSON config. Writes <out-dir>/<output>.csv and,
//! after the table is on disk, <out-dir>/<output>.manifest.json.
inline int cmd_experiment(const ExperimentArgs& a, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const std::string config_text = detail::read_file(a.config);
    nlohmann::json raw;
    try {
      raw = nlohmann::json::parse(config_text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError({std::string("malformed JSON: ") + e.what()});
    }
    if (a.seed && raw.is_object()) raw["seed"] = *a.seed;
    const auto base = std::filesystem::absolute(a.config).parent_path();
    const ExperimentConfig cfg = parse_experiment_config(raw, base);

    std::string name = scenario_name(cfg.scenario);
    if (raw.contains("output")) {
      if (!raw["output"].is_string() || raw["output"].get<std::string>().empty() ||
          raw["output"].get<std::string>().find('/') != std::string::npos)
        throw ConfigError({"config.output must be a plain file stem"});
      name = raw["output"].get<std::string>();
    }

    detail::Fnv1a hash;
    hash.update(raw.dump());
    const auto inputs = detail::input_files(cfg);
    for (const auto& f : inputs) hash.update(detail::read_file(f));

    const Table table = run_experiment(cfg);

    std::filesystem::create_directories(a.out_dir);
    const auto csv_path = (std::filesystem::path(a.out_dir) / (name + ".csv")).string();
    const auto manifest_path = (std::filesystem::path(a.out_dir) / (name + ".manifest.json")).string();
    table.save(csv_path);

    const auto end = std::chrono::system_clock::now();
    nlohmann::ordered_json m;
    m["version"] = SELREG_VERSION;
    m["scenario"] = scenario_name(cfg.scenario);
    m["seed"] = cfg.seed;
    m["config_path"] = std::filesystem::absolute(a.config).string();
    m["config"] = raw;
    m["inputs"] = inputs;
    m["input_hash"] = "fnv1a64:" + hash.hex();
    m["outputs"] = {std::filesystem::absolute(csv_path).string()};
    m["rows"] = table.rows.size();
    m["started_at"] = detail::utc_timestamp(start);
    m["finished_at"] = detail::utc_timestamp(end);
    m["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    {
      std::ofstream mf(manifest_path);
      if (!mf) throw Error("cannot write '" + manifest_path + "'");
      mf << m.dump(2) << '\n';
    }
    out << csv_path << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    err << "selreg experiment: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    err << "selreg experiment: " << e.what() << '\n';
    return kFailure;
  }
}

inline int cmd_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(a.csv);
    if (!in) throw Error("cannot open '" + a.csv + "'");
    const auto table = parse_csv(in, a.header);
    const Dataset data = to_dataset(table, a.target_col);
    out << "ok: " << data.size() << " rows, " << data.dim() << " features"
        << (data.has_response() ? ", 1 response" : "") << '\n';
    return kOk;
  } catch (const std::exception& e) {
    err << "selreg validate: " << a.csv << ": " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace selreg::cli
