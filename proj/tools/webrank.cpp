// webrank: synthesize data, train the ranking network, rank a query and run
// the cross-validated evaluation.
//
// Exit codes: 0 success, 1 unexpected failure, 2 I/O error, 3 not enough
// data, 4 bad query or arguments.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "webrank/webrank.hpp"

namespace fs = std::filesystem;
using namespace webrank;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kIoError = 2,
  kInsufficientData = 3,
  kBadInput = 4,
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string catalog = "catalog.json";
  std::string log = "log.jsonl";
  std::string model = "model.json";
  std::string time_db;  // default: <model>.time.jsonl
  std::string history;  // default: <model>.history.jsonl
  std::size_t top_n = kDefaultTopN;
  std::size_t hidden = 4;
  double lr = 0.1;
  std::size_t epochs = 500;
  bool shuffle = true;
  std::string hidden_activation = "tansig";
  std::string output_activation = "logistic";
  std::size_t folds = 5;
  std::string lengths = "2,4,6,8";

  // synth
  std::string out_dir = ".";
  std::size_t books = 5800;
  std::size_t events = 6400;
  std::size_t users = 0;  // 0: one user per 200 events

  // train / rank / eval
  std::string dump_training;
  std::string user;
  std::string query;
  std::string report = "eval_report.json";

  std::string time_db_path() const { return time_db.empty() ? model + ".time.jsonl" : time_db; }
  std::string history_path() const { return history.empty() ? model + ".history.jsonl" : history; }
};

std::vector<std::size_t> parse_lengths(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      throw InputError("bad --lengths entry '" + item + "'");
    }
    if (used != item.size() || v == 0) throw InputError("bad --lengths entry '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw InputError("--lengths needs at least one value");
  return out;
}

ModelConfig model_config(const RunConfig& cfg) {
  ModelConfig mc;
  mc.sizes = LayerSizes{FeatureVector::kSize, cfg.hidden, 1};
  auto hidden = parse_activation(cfg.hidden_activation);
  auto output = parse_activation(cfg.output_activation);
  if (!hidden) throw InputError("unknown hidden activation '" + cfg.hidden_activation + "'");
  if (!output) throw InputError("unknown output activation '" + cfg.output_activation + "'");
  if (cfg.hidden == 0) throw InputError("--hidden must be positive");
  if (!(cfg.lr > 0.0)) throw InputError("--lr must be positive");
  mc.hidden_activation = *hidden;
  mc.output_activation = *output;
  mc.train = TrainConfig{cfg.lr, cfg.epochs, cfg.seed, cfg.shuffle};
  return mc;
}

std::vector<Session> load_sessions(const RunConfig& cfg) {
  const auto loaded = load_log(cfg.log);
  std::cout << "log: " << loaded.stats.accepted << " records, " << loaded.stats.skipped << " skipped\n";
  return sessionize(loaded.records);
}

int cmd_synth(const RunConfig& cfg) {
  const std::size_t users = cfg.users ? cfg.users : std::max<std::size_t>(1, cfg.events / 200);
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec || !fs::is_directory(cfg.out_dir)) throw IoError("cannot create output directory " + cfg.out_dir);

  const auto catalog = generate_catalog(cfg.seed, cfg.books);
  const auto log = generate_transactions(catalog, cfg.seed, cfg.events, users);
  const fs::path dir(cfg.out_dir);
  save_catalog(catalog, dir / "catalog.json");
  save_log(log.records, dir / "log.jsonl");
  save_ground_truth(log.planted, dir / "ground_truth.json");

  std::cout << "books: " << catalog.size() << "\n"
            << "events: " << log.records.size() << "\n"
            << "users: " << log.planted.size() << "\n"
            << "wrote " << (dir / "catalog.json").string() << ", " << (dir / "log.jsonl").string() << ", "
            << (dir / "ground_truth.json").string() << "\n";
  return kOk;
}

int cmd_train(const RunConfig& cfg) {
  const auto mc = model_config(cfg);
  CatalogIndex index(load_catalog(cfg.catalog));
  const auto sessions = load_sessions(cfg);
  std::cout << "sessions: " << sessions.size() << "\n";
  if (sessions.empty()) throw InsufficientDataError("the log has no sessions to train on");

  auto fit = fit_ranker(index, sessions, mc);
  if (!cfg.dump_training.empty()) {
    const auto examples = build_training_set(index, sessions, fit.model.time_db, fit.model.history, mc.train.seed);
    save_training_set(examples, cfg.dump_training);
  }
  save_model(fit.model.net, cfg.model);
  save_time_db(fit.model.time_db, cfg.time_db_path());
  save_history(fit.model.history, cfg.history_path());

  char line[96];
  std::cout << "examples: " << fit.n_examples << "\n";
  std::snprintf(line, sizeof line, "initial loss: %.6f\n", fit.initial_loss);
  std::cout << line;
  if (!fit.loss_history.empty()) {
    std::snprintf(line, sizeof line, "epoch 1 loss: %.6f\nepoch %zu loss: %.6f\n", fit.loss_history.front(),
                  fit.loss_history.size(), fit.loss_history.back());
    std::cout << line;
  }
  std::cout << "model: " << cfg.model << "\n";
  return kOk;
}

int cmd_rank(const RunConfig& cfg) {
  const auto query = parse_query(cfg.query);
  CatalogIndex index(load_catalog(cfg.catalog));
  const auto net = load_model(cfg.model);
  if (net.sizes.input != FeatureVector::kSize) throw LoadError("model does not take the five ranking inputs");
  const auto time_db = load_time_db(cfg.time_db_path());
  const auto history = load_history(cfg.history_path());

  std::vector<LogRecord> evidence;
  if (!cfg.user.empty() && fs::exists(cfg.log)) {
    for (auto& r : load_log(cfg.log).records) {
      if (r.user_id == cfg.user && r.event != EventType::purchase) evidence.push_back(std::move(r));
    }
  }

  const auto ranked = rank(query, cfg.user, evidence, index, time_db, history, net);
  char line[64];
  for (std::size_t i = 0; i < ranked.entries.size() && i < cfg.top_n; ++i) {
    const auto& e = ranked.entries[i];
    std::snprintf(line, sizeof line, "%.6f", e.score);
    std::cout << (i + 1) << '\t' << e.doc_id << '\t' << index.find(e.doc_id)->title << '\t' << line << '\n';
  }
  if (ranked.entries.empty()) std::cout << "no candidates\n";
  return kOk;
}

int cmd_eval(const RunConfig& cfg) {
  const auto mc = model_config(cfg);
  const auto lengths = parse_lengths(cfg.lengths);
  if (cfg.folds < 2) throw InputError("--folds must be at least 2");
  CatalogIndex index(load_catalog(cfg.catalog));
  const auto sessions = load_sessions(cfg);

  auto trainer = [&](std::span<const Session> train) {
    auto fit = fit_ranker(index, train, mc);
    return network_ranker(index, std::make_shared<const RankerModel>(std::move(fit.model)));
  };
  const auto reports = cross_validate(sessions, cfg.folds, lengths, cfg.top_n, cfg.seed, trainer);
  write_file_atomic(cfg.report, reports_to_json(reports));

  std::cout << format_report_table(reports);

  // Means over folds.
  std::map<std::size_t, std::pair<double, double>> means;  // 0 = whole sessions
  for (const auto& r : reports) {
    auto& m = means[r.seq_len.value_or(0)];
    m.first += r.precision / static_cast<double>(cfg.folds);
    m.second += r.recall / static_cast<double>(cfg.folds);
  }
  std::cout << "\nmean over " << cfg.folds << " folds\n";
  char line[96];
  for (const auto& [len, m] : means) {
    const std::string label = len == 0 ? "all" : std::to_string(len);
    std::snprintf(line, sizeof line, "%-8s %10.4f %10.4f\n", label.c_str(), m.first, m.second);
    std::cout << line;
  }
  std::cout << "report: " << cfg.report << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Web-log mining page ranker with a back-propagation network"};
  app.set_config("--config", "", "key = value configuration file; command-line flags take precedence");
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app.add_option("--catalog", cfg.catalog, "Catalog JSON file")->capture_default_str();
  app.add_option("--log", cfg.log, "Newline-delimited JSON web log")->capture_default_str();
  app.add_option("--model", cfg.model, "Model file")->capture_default_str();
  app.add_option("--time-db", cfg.time_db, "Dwell-time store (default <model>.time.jsonl)");
  app.add_option("--history", cfg.history, "User history store (default <model>.history.jsonl)");
  app.add_option("--top-n", cfg.top_n, "Recommendations per user")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--hidden", cfg.hidden, "Hidden-layer neurons")->capture_default_str();
  app.add_option("--lr", cfg.lr, "Learning rate")->capture_default_str();
  app.add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
  app.add_option("--shuffle", cfg.shuffle, "Shuffle examples each epoch")->capture_default_str();
  app.add_option("--hidden-activation", cfg.hidden_activation, "tansig | logistic | linear")->capture_default_str();
  app.add_option("--output-activation", cfg.output_activation, "tansig | logistic | linear")->capture_default_str();
  app.add_option("--folds", cfg.folds, "Cross-validation folds")->capture_default_str();
  app.add_option("--lengths", cfg.lengths, "Comma-separated access-sequence lengths")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic catalog, log and ground truth");
  synth->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
  synth->add_option("--books", cfg.books, "Number of books")->capture_default_str();
  synth->add_option("--events", cfg.events, "Number of log events")->capture_default_str();
  synth->add_option("--users", cfg.users, "Number of users (default: events / 200)");

  auto* train_cmd = app.add_subcommand("train", "Build stores and train the ranking network");
  train_cmd->add_option("--dump-training", cfg.dump_training, "Also write the training set here");

  auto* rank_cmd = app.add_subcommand("rank", "Rank catalog pages for a query");
  rank_cmd->add_option("query", cfg.query, "Query text")->required();
  rank_cmd->add_option("--user", cfg.user, "User id for history and feedback");

  auto* eval_cmd = app.add_subcommand("eval", "k-fold evaluation and access-sequence-length sweep");
  eval_cmd->add_option("--report", cfg.report, "JSON report path")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  std::cout << "seed: " << cfg.seed << "\n";
  try {
    if (*synth) return cmd_synth(cfg);
    if (*train_cmd) return cmd_train(cfg);
    if (*rank_cmd) return cmd_rank(cfg);
    if (*eval_cmd) return cmd_eval(cfg);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const LoadError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInsufficientData;
  } catch (const EmptyQueryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
