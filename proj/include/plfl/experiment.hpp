#pragma once

// Config-driven experiment runner behind the `plfl` command line tool:
// synthetic data generation, single-cell training, optimizer x scheme grids
// and collation of result directories into CSV tables.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "plfl/checkpoint.hpp"
#include "plfl/client_opt.hpp"
#include "plfl/data.hpp"
#include "plfl/federation.hpp"
#include "plfl/metrics.hpp"
#include "plfl/model.hpp"
#include "plfl/server_opt.hpp"

namespace plfl {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataSource {
  std::string source = "synthetic";  // "synthetic" | "csv"
  std::string csv_dir;
  SyntheticSpec synthetic;

  bool operator==(const DataSource&) const = default;
};

struct GridSpec {
  std::vector<ServerOptKind> server_opts = all_server_opts();
  std::vector<ClientOptKind> client_opts = all_client_opts();
  std::vector<SchemeKind> schemes{SchemeKind::p1, SchemeKind::p2, SchemeKind::p3};
  // Per-server-optimizer learning rate; unlisted ones use federation.server.lr.
  std::map<std::string, double> server_lr;

  bool operator==(const GridSpec&) const = default;
};

struct ExperimentConfig {
  DataSource data;
  ModelDims model;
  std::size_t lookahead = 4;
  SplitSpec split;
  FederationConfig federation;
  GridSpec grid;
  std::string output_dir = "results";

  void validate() const {
    if (model.features != kFeatureCount) {
      throw ConfigError("model.features must be " + std::to_string(kFeatureCount) + " for the CSV schema");
    }
    model.validate();
    if (lookahead < 1) throw ConfigError("model.lookahead must be >= 1");
    split.validate();
    federation.validate();
    if (data.source == "synthetic") {
      data.synthetic.validate();
    } else if (data.source == "csv") {
      if (data.csv_dir.empty()) throw ConfigError("data.csv_dir is required when data.source is csv");
    } else {
      throw ConfigError("data.source must be 'synthetic' or 'csv'");
    }
  }

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
      throw ConfigError("unknown config key '" + where + "." + item.key() + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
  }
}

template <typename T, typename Parse>
void read_enum_list(const json& j, const char* key, std::vector<T>& out, Parse parse, const std::string& where) {
  if (!j.contains(key)) return;
  std::vector<std::string> names;
  read(j, key, names, where);
  out.clear();
  try {
    for (const auto& n : names) out.push_back(parse(n));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
std::vector<std::string> names_of(const std::vector<T>& kinds) {
  std::vector<std::string> out;
  for (auto k : kinds) out.push_back(to_string(k));
  return out;
}

}  // namespace detail

inline json to_json(const ExperimentConfig& c) {
  const auto& f = c.federation;
  return json{
      {"seed", f.seed},
      {"output_dir", c.output_dir},
      {"parallel", f.parallel},
      {"data",
       {{"source", c.data.source},
        {"csv_dir", c.data.csv_dir},
        {"clients", c.data.synthetic.clients},
        {"length", c.data.synthetic.length},
        {"scale_spread", c.data.synthetic.scale_spread},
        {"offset_spread", c.data.synthetic.offset_spread},
        {"phase_spread", c.data.synthetic.phase_spread}}},
      {"model",
       {{"hidden", c.model.hidden},
        {"lookback", c.model.lookback},
        {"lookahead", c.lookahead},
        {"features", c.model.features},
        {"mlp_hidden", c.model.mlp_hidden}}},
      {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}},
      {"federation",
       {{"rounds", f.rounds},
        {"scheme", to_string(f.scheme)},
        {"client_opt", to_string(f.client_opt)},
        {"server_opt", to_string(f.server_opt)},
        {"wire_bytes", f.wire_bytes},
        {"evaluate_validation", f.evaluate_validation},
        {"client",
         {{"lr", f.client.lr},
          {"beta1", f.client.beta1},
          {"beta2", f.client.beta2},
          {"eps", f.client.eps},
          {"alpha", f.client.alpha},
          {"local_steps", f.client.local_steps},
          {"batch_size", f.client.batch_size}}},
        {"server",
         {{"lr", f.server.lr},
          {"beta1", f.server.beta1},
          {"beta2", f.server.beta2},
          {"eps", f.server.eps},
          {"weight_by_samples", f.server.weight_by_samples},
          {"literal_formulas", f.server.literal_formulas}}}}},
      {"grid",
       {{"server_opts", detail::names_of(c.grid.server_opts)},
        {"client_opts", detail::names_of(c.grid.client_opts)},
        {"schemes", detail::names_of(c.grid.schemes)},
        {"server_lr", c.grid.server_lr}}},
  };
}

/// Defaults for every key; the JSON only needs to name what differs.
inline ExperimentConfig config_from_json(const json& j) {
  using detail::read;
  ExperimentConfig c;
  auto& f = c.federation;
  detail::check_keys(j, "config", {"seed", "output_dir", "parallel", "data", "model", "split", "federation", "grid"});
  read(j, "seed", f.seed, "config");
  read(j, "output_dir", c.output_dir, "config");
  read(j, "parallel", f.parallel, "config");
  if (j.contains("data")) {
    const auto& d = j["data"];
    detail::check_keys(d, "data", {"source", "csv_dir", "clients", "length", "scale_spread", "offset_spread",
                                   "phase_spread"});
    read(d, "source", c.data.source, "data");
    read(d, "csv_dir", c.data.csv_dir, "data");
    read(d, "clients", c.data.synthetic.clients, "data");
    read(d, "length", c.data.synthetic.length, "data");
    read(d, "scale_spread", c.data.synthetic.scale_spread, "data");
    read(d, "offset_spread", c.data.synthetic.offset_spread, "data");
    read(d, "phase_spread", c.data.synthetic.phase_spread, "data");
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    detail::check_keys(m, "model", {"hidden", "lookback", "lookahead", "features", "mlp_hidden"});
    read(m, "hidden", c.model.hidden, "model");
    read(m, "lookback", c.model.lookback, "model");
    read(m, "lookahead", c.lookahead, "model");
    read(m, "features", c.model.features, "model");
    read(m, "mlp_hidden", c.model.mlp_hidden, "model");
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    detail::check_keys(s, "split", {"train", "val", "test"});
    read(s, "train", c.split.train, "split");
    read(s, "val", c.split.val, "split");
    read(s, "test", c.split.test, "split");
  }
  if (j.contains("federation")) {
    const auto& fj = j["federation"];
    detail::check_keys(fj, "federation", {"rounds", "scheme", "client_opt", "server_opt", "wire_bytes",
                                          "evaluate_validation", "client", "server"});
    read(fj, "rounds", f.rounds, "federation");
    read(fj, "wire_bytes", f.wire_bytes, "federation");
    read(fj, "evaluate_validation", f.evaluate_validation, "federation");
    try {
      if (fj.contains("scheme")) f.scheme = parse_scheme(fj["scheme"].get<std::string>());
      if (fj.contains("client_opt")) f.client_opt = parse_client_opt(fj["client_opt"].get<std::string>());
      if (fj.contains("server_opt")) f.server_opt = parse_server_opt(fj["server_opt"].get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("federation: ") + e.what());
    }
    if (fj.contains("client")) {
      const auto& cj = fj["client"];
      detail::check_keys(cj, "federation.client", {"lr", "beta1", "beta2", "eps", "alpha", "local_steps", "batch_size"});
      read(cj, "lr", f.client.lr, "federation.client");
      read(cj, "beta1", f.client.beta1, "federation.client");
      read(cj, "beta2", f.client.beta2, "federation.client");
      read(cj, "eps", f.client.eps, "federation.client");
      read(cj, "alpha", f.client.alpha, "federation.client");
      read(cj, "local_steps", f.client.local_steps, "federation.client");
      read(cj, "batch_size", f.client.batch_size, "federation.client");
    }
    if (fj.contains("server")) {
      const auto& sj = fj["server"];
      detail::check_keys(sj, "federation.server", {"lr", "beta1", "beta2", "eps", "weight_by_samples", "literal_formulas"});
      read(sj, "lr", f.server.lr, "federation.server");
      read(sj, "beta1", f.server.beta1, "federation.server");
      read(sj, "beta2", f.server.beta2, "federation.server");
      read(sj, "eps", f.server.eps, "federation.server");
      read(sj, "weight_by_samples", f.server.weight_by_samples, "federation.server");
      read(sj, "literal_formulas", f.server.literal_formulas, "federation.server");
    }
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    detail::check_keys(g, "grid", {"server_opts", "client_opts", "schemes", "server_lr"});
    detail::read_enum_list(g, "server_opts", c.grid.server_opts, parse_server_opt, "grid");
    detail::read_enum_list(g, "client_opts", c.grid.client_opts, parse_client_opt, "grid");
    detail::read_enum_list(g, "schemes", c.grid.schemes, parse_scheme, "grid");
    if (g.contains("server_lr")) {
      if (!g["server_lr"].is_object()) throw ConfigError("grid.server_lr must be an object of rates");
      for (const auto& [name, v] : g["server_lr"].items()) {
        try {
          parse_server_opt(name);
        } catch (const std::exception&) {
          throw ConfigError("grid.server_lr: unknown server optimizer '" + name + "'");
        }
        if (!v.is_number() || !(v.get<double>() > 0)) throw ConfigError("grid.server_lr." + name + " must be > 0");
        c.grid.server_lr[name] = v.get<double>();
      }
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

/// Client series named by the config: generated in memory, or every *.csv
/// in csv_dir in lexicographic order.
inline std::vector<ClientSeries> load_client_series(const ExperimentConfig& cfg) {
  if (cfg.data.source == "synthetic") {
    return generate_synthetic(cfg.data.synthetic, derive_seed(cfg.federation.seed, 0xda7aULL));
  }
  if (!fs::is_directory(cfg.data.csv_dir)) throw ConfigError("csv_dir does not exist: " + cfg.data.csv_dir);
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(cfg.data.csv_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw ConfigError("no .csv files in " + cfg.data.csv_dir);
  std::vector<ClientSeries> out;
  for (const auto& p : paths) out.push_back(load_csv(p));
  return out;
}

inline std::vector<DatasetSplits> prepare_datasets(const ExperimentConfig& cfg,
                                                   const std::vector<ClientSeries>& series) {
  std::vector<DatasetSplits> out;
  for (const auto& s : series) out.push_back(split_and_window(s, cfg.split, cfg.model.lookback, cfg.lookahead));
  return out;
}

inline ParamVector initial_params(const ExperimentConfig& cfg, const LstmForecaster& model) {
  Rng rng(derive_seed(cfg.federation.seed, 0x1417ULL));
  return model.init_params(rng);
}

struct ClientStats {
  std::string name;
  double mean = 0.0;
  double std = 0.0;
};

inline std::vector<ClientStats> client_stats(const std::vector<ClientSeries>& series) {
  std::vector<ClientStats> out;
  for (const auto& s : series) {
    double sum = 0.0;
    for (double y : s.load) sum += y;
    const double mean = sum / static_cast<double>(s.size());
    double ss = 0.0;
    for (double y : s.load) ss += (y - mean) * (y - mean);
    out.push_back({s.name, mean, std::sqrt(ss / static_cast<double>(s.size()))});
  }
  return out;
}

/// Writes one CSV per synthetic client into `out_dir` and returns the
/// per-client load mean/std summary.
inline std::vector<ClientStats> cmd_generate(const ExperimentConfig& cfg, const std::string& out_dir,
                                             std::ostream& log) {
  cfg.data.synthetic.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw std::runtime_error("cannot create output directory " + out_dir);
  const auto series = generate_synthetic(cfg.data.synthetic, derive_seed(cfg.federation.seed, 0xda7aULL));
  for (const auto& s : series) write_csv((fs::path(out_dir) / (s.name + ".csv")).string(), s);
  const auto stats = client_stats(series);
  log << std::left << std::setw(12) << "client" << std::right << std::setw(14) << "mean_load" << std::setw(14)
      << "std_load" << '\n';
  log << std::fixed << std::setprecision(3);
  for (const auto& st : stats) {
    log << std::left << std::setw(12) << st.name << std::right << std::setw(14) << st.mean << std::setw(14) << st.std
        << '\n';
  }
  log.unsetf(std::ios::floatfield);
  return stats;
}

struct ResultRow {
  std::string server_opt;
  std::string client_opt;
  std::string scheme;
  std::string status = "ok";  // "ok" or "error: ..."
  double mean_test_mase = 0.0;
  double final_mean_val_mase = 0.0;
  std::vector<double> test_mase;
  std::size_t rounds = 0;
  std::size_t clients = 0;
  std::size_t total_bytes = 0;
  double bytes_per_round_per_client = 0.0;
  double elements_per_round_per_client = 0.0;
  std::string run;  // results subdirectory name
};

inline json to_json(const ResultRow& r) {
  return json{{"run", r.run},
              {"server_opt", r.server_opt},
              {"client_opt", r.client_opt},
              {"scheme", r.scheme},
              {"status", r.status},
              {"mean_test_mase", r.mean_test_mase},
              {"final_mean_val_mase", r.final_mean_val_mase},
              {"test_mase", r.test_mase},
              {"rounds", r.rounds},
              {"clients", r.clients},
              {"total_bytes", r.total_bytes},
              {"bytes_per_round_per_client", r.bytes_per_round_per_client},
              {"elements_per_round_per_client", r.elements_per_round_per_client}};
}

inline ResultRow result_row_from_json(const json& j) {
  ResultRow r;
  r.run = j.at("run").get<std::string>();
  r.server_opt = j.at("server_opt").get<std::string>();
  r.client_opt = j.at("client_opt").get<std::string>();
  r.scheme = j.at("scheme").get<std::string>();
  r.status = j.at("status").get<std::string>();
  r.mean_test_mase = j.at("mean_test_mase").get<double>();
  r.final_mean_val_mase = j.at("final_mean_val_mase").get<double>();
  r.test_mase = j.at("test_mase").get<std::vector<double>>();
  r.rounds = j.at("rounds").get<std::size_t>();
  r.clients = j.at("clients").get<std::size_t>();
  r.total_bytes = j.at("total_bytes").get<std::size_t>();
  r.bytes_per_round_per_client = j.at("bytes_per_round_per_client").get<double>();
  r.elements_per_round_per_client = j.at("elements_per_round_per_client").get<double>();
  return r;
}

inline json to_json(const RoundRecord& rec) {
  json ledger = json::array();
  for (const auto& e : rec.ledger) {
    ledger.push_back({{"client", e.client}, {"direction", to_string(e.direction)}, {"elements", e.elements},
                      {"bytes", e.bytes}});
  }
  return json{{"round", rec.round}, {"train_loss", rec.train_loss}, {"val_mase", rec.val_mase}, {"ledger", ledger}};
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline std::string cell_name(const FederationConfig& f) {
  return to_string(f.server_opt) + "__" + to_string(f.client_opt) + "__" + to_string(f.scheme);
}

/// Runs one (server_opt, client_opt, scheme) cell on prepared data and writes
/// `config.json`, `rounds.jsonl`, `result.json` and checkpoints to out_dir.
inline ResultRow train_cell(const ExperimentConfig& cfg, const std::vector<DatasetSplits>& data,
                            const std::string& out_dir) {
  cfg.validate();
  const LstmForecaster model(cfg.model);
  const ParamVector init = initial_params(cfg, model);
  const auto& f = cfg.federation;
  const FederationResult res = run_pl_fl(f, model, init, data);

  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "checkpoints", ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir + ": " + ec.message());

  {
    // Execution-only settings are left out so reruns compare byte-equal.
    json echo = to_json(cfg);
    echo.erase("parallel");
    echo.erase("output_dir");
    std::ofstream out(fs::path(out_dir) / "config.json");
    out << echo.dump(2) << '\n';
  }
  {
    std::ofstream out(fs::path(out_dir) / "rounds.jsonl");
    if (!out) throw std::runtime_error("cannot write rounds.jsonl in " + out_dir);
    for (const auto& rec : res.rounds) out << to_json(rec).dump() << '\n';
  }

  ResultRow row;
  row.run = fs::path(out_dir).filename().string();
  row.server_opt = to_string(f.server_opt);
  row.client_opt = to_string(f.client_opt);
  row.scheme = to_string(f.scheme);
  row.rounds = f.rounds;
  row.clients = data.size();
  std::vector<const WindowedDataset*> tests;
  for (const auto& d : data) tests.push_back(&d.test);
  row.test_mase = evaluate_round(model, res.client_models, tests, f.parallel);
  row.mean_test_mase = mean_of(row.test_mase);
  if (!res.rounds.empty()) row.final_mean_val_mase = mean_of(res.rounds.back().val_mase);
  row.total_bytes = res.ledger.total_bytes();
  const double denom = static_cast<double>(f.rounds * data.size());
  row.bytes_per_round_per_client = static_cast<double>(row.total_bytes) / denom;
  row.elements_per_round_per_client = static_cast<double>(res.ledger.total_elements()) / denom;

  {
    std::ofstream out(fs::path(out_dir) / "result.json");
    out << to_json(row).dump(2) << '\n';
  }
  write_checkpoint((fs::path(out_dir) / "checkpoints" / "server_shared.ckpt").string(), res.server_shared);
  for (std::size_t c = 0; c < res.client_models.size(); ++c) {
    std::ostringstream name;
    name << "client_" << std::setfill('0') << std::setw(2) << c << ".ckpt";
    write_checkpoint((fs::path(out_dir) / "checkpoints" / name.str()).string(), res.client_models[c]);
  }
  return row;
}

inline ResultRow cmd_train(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const auto series = load_client_series(cfg);
  const auto data = prepare_datasets(cfg, series);
  return train_cell(cfg, data, out_dir);
}

struct ResultTable {
  std::vector<ResultRow> rows;
};

inline void write_grid_tables(const ResultTable& table, const GridSpec& grid, const std::string& out_dir) {
  {
    std::ofstream out(fs::path(out_dir) / "grid.csv");
    out << "server_opt,client_opt,scheme,status,mean_test_mase,final_mean_val_mase,bytes_per_round_per_client,"
           "elements_per_round_per_client,total_bytes\n";
    out << std::setprecision(17);
    for (const auto& r : table.rows) {
      std::string status = r.status;
      std::replace(status.begin(), status.end(), ',', ';');
      std::replace(status.begin(), status.end(), '\n', ' ');
      out << r.server_opt << ',' << r.client_opt << ',' << r.scheme << ',' << status << ',' << r.mean_test_mase
          << ',' << r.final_mean_val_mase << ',' << r.bytes_per_round_per_client << ','
          << r.elements_per_round_per_client << ',' << r.total_bytes << '\n';
    }
  }
  std::ofstream out(fs::path(out_dir) / "grid.txt");
  out << "Mean test MASE (rows: client_opt / scheme, columns: server_opt)\n\n";
  out << std::left << std::setw(22) << "";
  for (auto s : grid.server_opts) out << std::setw(17) << to_string(s);
  out << '\n' << std::fixed << std::setprecision(4);
  for (auto c : grid.client_opts) {
    for (auto p : grid.schemes) {
      out << std::left << std::setw(22) << (to_string(c) + " / " + to_string(p));
      for (auto s : grid.server_opts) {
        std::string cell = "-";
        for (const auto& r : table.rows) {
          if (r.server_opt == to_string(s) && r.client_opt == to_string(c) && r.scheme == to_string(p)) {
            std::ostringstream os;
            os << std::fixed << std::setprecision(4);
            if (r.status == "ok") {
              os << r.mean_test_mase;
            } else {
              os << "ERR";
            }
            cell = os.str();
          }
        }
        out << std::setw(17) << cell;
      }
      out << '\n';
    }
  }
  out << "\nBytes per round per client (down + up)\n\n";
  for (auto p : grid.schemes) {
    for (const auto& r : table.rows) {
      if (r.scheme == to_string(p) && r.status == "ok") {
        out << std::left << std::setw(6) << to_string(p) << std::setprecision(0) << r.bytes_per_round_per_client
            << '\n';
        break;
      }
    }
  }
}

/// Runs every grid cell; a failing cell is recorded in its row and the grid
/// continues. Cells run on up to `parallel` threads (each cell then runs its
/// clients serially).
inline ResultTable cmd_grid(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log) {
  cfg.validate();
  const auto series = load_client_series(cfg);
  const auto data = prepare_datasets(cfg, series);

  std::vector<ExperimentConfig> cells;
  for (auto s : cfg.grid.server_opts) {
    for (auto c : cfg.grid.client_opts) {
      for (auto p : cfg.grid.schemes) {
        ExperimentConfig cell = cfg;
        cell.federation.server_opt = s;
        cell.federation.client_opt = c;
        cell.federation.scheme = p;
        if (auto it = cfg.grid.server_lr.find(to_string(s)); it != cfg.grid.server_lr.end()) {
          cell.federation.server.lr = it->second;
        }
        if (cfg.federation.parallel > 1) cell.federation.parallel = 1;
        cells.push_back(std::move(cell));
      }
    }
  }

  ResultTable table;
  table.rows.resize(cells.size());
  std::mutex log_mutex;
  parallel_for(cells.size(), cfg.federation.parallel, [&](std::size_t i) {
    const auto& cell = cells[i];
    const std::string name = cell_name(cell.federation);
    try {
      table.rows[i] = train_cell(cell, data, (fs::path(out_dir) / name).string());
    } catch (const std::exception& e) {
      ResultRow& r = table.rows[i];
      r.run = name;
      r.server_opt = to_string(cell.federation.server_opt);
      r.client_opt = to_string(cell.federation.client_opt);
      r.scheme = to_string(cell.federation.scheme);
      r.rounds = cell.federation.rounds;
      r.clients = data.size();
      r.status = std::string("error: ") + e.what();
    }
    std::lock_guard lock(log_mutex);
    log << "[" << (i + 1) << "/" << cells.size() << "] " << name << ": " << table.rows[i].status << '\n';
  });
  write_grid_tables(table, cfg.grid, out_dir);
  return table;
}

struct ReportTables {
  std::vector<ResultRow> runs;
  std::vector<std::string> warnings;
};

/// Collates every result.json (and sibling rounds.jsonl) under `results_dir`
/// into mase.csv, bytes.csv and loss.csv in `out_dir`.
inline ReportTables cmd_report(const std::string& results_dir, const std::string& out_dir) {
  if (!fs::is_directory(results_dir)) throw std::runtime_error("results directory not found: " + results_dir);
  std::vector<fs::path> result_files;
  for (const auto& e : fs::recursive_directory_iterator(results_dir)) {
    if (e.is_regular_file() && e.path().filename() == "result.json") result_files.push_back(e.path());
  }
  std::sort(result_files.begin(), result_files.end());

  ReportTables report;
  struct LossRow {
    std::string run;
    std::size_t round, client;
    double loss, val;
  };
  std::vector<LossRow> losses;
  for (const auto& path : result_files) {
    std::ifstream in(path);
    json j;
    try {
      j = json::parse(in);
      report.runs.push_back(result_row_from_json(j));
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed results file " + path.string() + ": " + e.what());
    }
    const fs::path rounds_path = path.parent_path() / "rounds.jsonl";
    std::ifstream rin(rounds_path);
    if (!rin) {
      report.warnings.push_back("no rounds.jsonl next to " + path.string());
      continue;
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(rin, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const json r = json::parse(line);
        const auto tl = r.at("train_loss").get<std::vector<double>>();
        const auto vm = r.at("val_mase").get<std::vector<double>>();
        for (std::size_t c = 0; c < tl.size(); ++c) {
          losses.push_back({report.runs.back().run, r.at("round").get<std::size_t>(), c, tl[c],
                            c < vm.size() ? vm[c] : std::nan("")});
        }
      } catch (const json::exception& e) {
        throw std::runtime_error("malformed results file " + rounds_path.string() + ":" + std::to_string(lineno) +
                                 ": " + e.what());
      }
    }
  }
  if (result_files.empty()) report.warnings.push_back("no result.json files under " + results_dir);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream mase_csv(fs::path(out_dir) / "mase.csv");
  mase_csv << "run,server_opt,client_opt,scheme,status,mean_test_mase,final_mean_val_mase\n" << std::setprecision(17);
  for (const auto& r : report.runs) {
    mase_csv << r.run << ',' << r.server_opt << ',' << r.client_opt << ',' << r.scheme << ','
             << (r.status == "ok" ? "ok" : "error") << ',' << r.mean_test_mase << ',' << r.final_mean_val_mase << '\n';
  }
  auto by_bytes = report.runs;
  std::stable_sort(by_bytes.begin(), by_bytes.end(), [](const ResultRow& a, const ResultRow& b) {
    return a.bytes_per_round_per_client < b.bytes_per_round_per_client;
  });
  std::ofstream bytes_csv(fs::path(out_dir) / "bytes.csv");
  bytes_csv << "run,scheme,bytes_per_round_per_client,elements_per_round_per_client,total_bytes\n"
            << std::setprecision(17);
  for (const auto& r : by_bytes) {
    bytes_csv << r.run << ',' << r.scheme << ',' << r.bytes_per_round_per_client << ','
              << r.elements_per_round_per_client << ',' << r.total_bytes << '\n';
  }
  std::ofstream loss_csv(fs::path(out_dir) / "loss.csv");
  loss_csv << "run,round,client,train_loss,val_mase\n" << std::setprecision(17);
  for (const auto& l : losses) {
    loss_csv << l.run << ',' << l.round << ',' << l.client << ',' << l.loss << ',' << l.val << '\n';
  }
  return report;
}

}  // namespace plfl
