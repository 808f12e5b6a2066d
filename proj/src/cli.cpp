#include "cqadet/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cqadet/adaptive.hpp"
#include "cqadet/classifier.hpp"
#include "cqadet/corpus.hpp"
#include "cqadet/errors.hpp"
#include "cqadet/features.hpp"
#include "cqadet/http_server.hpp"
#include "cqadet/service.hpp"
#include "cqadet/store.hpp"

namespace cqadet {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string ratio(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::vector<QASession> labeled_only(const std::vector<QASession>& corpus) {
  std::vector<QASession> out;
  for (const auto& s : corpus) {
    if (s.label) out.push_back(s);
  }
  return out;
}

void add_train_options(CLI::App* cmd, TrainOptions& t) {
  cmd->add_option("--learning-rate", t.learning_rate, "Gradient descent step size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", t.max_iters, "Iteration cap");
  cmd->add_option("--tolerance", t.tolerance, "Stop when the cost changes by less than this")
      ->check(CLI::NonNegativeNumber);
}

void write_metrics_table(std::ostream& out, std::span<const IterationReport> reports) {
  out << "iteration,precision,recall,f_measure,accuracy\n";
  for (const auto& r : reports) {
    out << r.iteration_index + 1 << ',' << ratio(r.metrics.precision) << ','
        << ratio(r.metrics.recall) << ',' << ratio(r.metrics.f_measure) << ','
        << ratio(r.metrics.accuracy) << '\n';
  }
}

// ---- subcommands ----------------------------------------------------------------

struct GenArgs {
  SyntheticConfig cfg;
  std::size_t campaign = 2147;
  std::string out;
};

void cmd_gen(GenArgs& a, std::ostream& log) {
  if (a.campaign > a.cfg.total_sessions) throw InvalidConfig("--campaign exceeds --total");
  a.cfg.campaign_fraction =
      a.cfg.total_sessions == 0 ? 0.0
                                : static_cast<double>(a.campaign) / static_cast<double>(a.cfg.total_sessions);
  const auto corpus = generate_synthetic(a.cfg);
  write_corpus(a.out, corpus);
  log << "wrote " << corpus.size() << " sessions (" << campaign_count(a.cfg) << " campaign) to "
      << a.out << '\n';
}

struct TrainArgs {
  std::string corpus;
  std::string out;
  TrainOptions train;
};

void cmd_train(const TrainArgs& a, std::ostream& log) {
  const auto corpus = labeled_only(load_corpus(a.corpus));
  const CountState counts = rebuild_counts(corpus);
  std::vector<PoolEntry> pool;
  pool.reserve(corpus.size());
  for (const auto& s : corpus) pool.emplace_back(s);
  TrainTrace trace;
  const Model m = fit_model(counts, pool, 1, a.train, &trace);
  save_model(a.out, m);
  log << "trained on " << pool.size() << " sessions in " << trace.iterations
      << " iterations, final cost " << num(trace.costs.back()) << '\n';
}

struct ReplayArgs {
  std::string corpus;
  std::string out;
  bool fixed = false;
  ReplayConfig cfg;
};

void cmd_replay(ReplayArgs& a, std::ostream& log) {
  a.cfg.mode = a.fixed ? ReplayMode::Fixed : ReplayMode::Adaptive;
  const auto reports = replay(load_corpus(a.corpus), a.cfg);
  write_replay_report(a.out, reports);
  log << "wrote " << reports.size() << " iterations to " << a.out << '\n';
}

struct ScoreArgs {
  std::string model;
  std::string corpus;
  std::string sessions;
  std::string out;
};

void cmd_score(const ScoreArgs& a, std::ostream& stdout_stream) {
  const Model m = load_model(a.model);
  const CountState counts = rebuild_counts(labeled_only(load_corpus(a.corpus)));
  const auto sessions = load_corpus(a.sessions);

  std::ofstream file;
  if (!a.out.empty()) file = open_out(a.out);
  std::ostream& out = a.out.empty() ? stdout_stream : file;
  out << "url,score,label\n";
  for (const auto& s : sessions) {
    const Verdict v = classify(m, feature_vector(s, counts, false, m.neutral_sgtext));
    out << s.url << ',' << num(v.score) << ',' << to_int(v.label) << '\n';
  }
}

struct DiagArgs {
  std::string corpus;
  std::string out;
};

void cmd_diag(const DiagArgs& a, std::ostream& log) {
  const auto diags = diagnose(load_corpus(a.corpus));
  auto out = open_out(a.out);
  out << "feature,class,value,cumulative\n";
  for (const auto& d : diags) {
    for (const auto& p : d.campaign) out << d.feature << ",campaign," << num(p.value) << ',' << num(p.cumulative) << '\n';
    for (const auto& p : d.normal) out << d.feature << ",normal," << num(p.value) << ',' << num(p.cumulative) << '\n';
  }
  log << "feature,ks,separating\n";
  for (const auto& d : diags) log << d.feature << ',' << ratio(d.ks) << ',' << (d.separating ? "yes" : "no") << '\n';
}

struct ServeArgs {
  std::string config;
  std::string listen;
  std::string corpus;
};

void cmd_serve(const ServeArgs& a, std::ostream& log) {
  ServiceConfig cfg = a.config.empty() ? ServiceConfig{} : load_service_config(a.config);
  if (!a.listen.empty()) cfg.listen = a.listen;
  const auto [host, port] = parse_listen(cfg.listen);
  TokenTable tokens = cfg.token_file.empty() ? TokenTable{} : TokenTable::load(cfg.token_file);

  std::unique_ptr<Store> store =
      cfg.store_dir.empty() ? std::make_unique<Store>() : std::make_unique<Store>(cfg.store_dir);
  if (!a.corpus.empty()) {
    store->ingest_labeled(labeled_only(load_corpus(a.corpus)));
    if (store->scoring_context()->model.cold() && store->labels_since_retrain() > 0) {
      const auto r = store->retrain(cfg.train);
      log << "seed model v" << r.model.version << " trained on " << r.training_size << " sessions\n";
    }
  }

  Service service(*store, std::move(tokens), cfg);
  HttpServer server(service);
  log << "listening on " << host << ':' << port << std::endl;
  server.run(host, port);
}

struct ExportArgs {
  std::string corpus;
  std::string out_dir;
  std::size_t train_count = 3500;
  std::uint64_t split_seed = 7;
  ReplayConfig cfg;
};

void cmd_export(ExportArgs& a, std::ostream& log) {
  const auto corpus = load_corpus(a.corpus);
  if (a.train_count == 0 || a.train_count >= corpus.size())
    throw InvalidConfig("--train-count must be between 1 and the corpus size - 1");
  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);

  const auto holdout = evaluate_holdout(split_train_test(corpus, a.train_count, a.split_seed), a.cfg.train);
  const auto thresholds = default_roc_thresholds();
  {
    auto out = open_out(dir / "roc.csv");
    out << "threshold,fpr,tpr\n";
    for (const auto& p : roc_curve(holdout.scores, holdout.labels, thresholds))
      out << ratio(p.threshold) << ',' << ratio(p.fpr) << ',' << ratio(p.tpr) << '\n';
  }

  a.cfg.mode = ReplayMode::Adaptive;
  const auto adaptive = replay(corpus, a.cfg);
  a.cfg.mode = ReplayMode::Fixed;
  const auto fixed = replay(corpus, a.cfg);
  {
    auto out = open_out(dir / "adaptive_theta.csv");
    out << "iteration,theta1,theta2,theta3,theta4\n";
    for (const auto& r : adaptive) {
      out << r.iteration_index + 1;
      for (double t : r.theta_snapshot) out << ',' << num(t);
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "adaptive_metrics.csv");
    write_metrics_table(out, adaptive);
  }
  {
    auto out = open_out(dir / "fixed_metrics.csv");
    write_metrics_table(out, fixed);
  }
  log << "wrote roc.csv, adaptive_theta.csv, adaptive_metrics.csv, fixed_metrics.csv to "
      << a.out_dir << '\n';
}

int dispatch(CLI::App& app, const std::function<void()>& parse, std::ostream& out,
             std::ostream& err) {
  try {
    parse();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  return -1;
}

}  // namespace

namespace {

int run(std::function<void(CLI::App&)> parse, std::ostream& out, std::ostream& err) {
  CLI::App app{"Campaign Q&A session detector"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic labeled corpus");
  g->add_option("--seed", gen.cfg.rng_seed, "Generator seed");
  g->add_option("--total", gen.cfg.total_sessions, "Number of sessions");
  g->add_option("--campaign", gen.campaign, "Number of campaign sessions");
  g->add_option("--users", gen.cfg.n_users, "Ordinary user population");
  g->add_option("--paid-posters", gen.cfg.n_paid_posters, "Paid poster population");
  g->add_option("--templates", gen.cfg.template_count, "Number of campaign scripts");
  g->add_option("-o,--out", gen.out, "Output corpus file")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model on every labeled session of a corpus");
  t->add_option("--corpus", train.corpus, "Labeled corpus")->required();
  t->add_option("-o,--out", train.out, "Model file to write")->required();
  add_train_options(t, train.train);

  ReplayArgs rep;
  auto* r = app.add_subcommand("replay", "Replay a labeled corpus in close-time order");
  r->add_option("--corpus", rep.corpus, "Labeled corpus")->required();
  r->add_option("-o,--out", rep.out, "Iteration report (CSV)")->required();
  r->add_flag("--fixed", rep.fixed, "Keep the seed model instead of retraining");
  r->add_option("--seed-size", rep.cfg.seed_size, "Initial training set size");
  r->add_option("--batch-size", rep.cfg.batch_size, "Sessions per iteration");
  add_train_options(r, rep.cfg.train);

  ScoreArgs sc;
  auto* s = app.add_subcommand("score", "Score sessions with a saved model");
  s->add_option("--model", sc.model, "Model file")->required();
  s->add_option("--corpus", sc.corpus, "Labeled history the features are computed against")->required();
  s->add_option("--sessions", sc.sessions, "Sessions to score")->required();
  s->add_option("-o,--out", sc.out, "Verdict CSV (default: stdout)");

  DiagArgs dg;
  auto* d = app.add_subcommand("diag", "Per-class CDFs of interval/likes/other-answers");
  d->add_option("--corpus", dg.corpus, "Labeled corpus")->required();
  d->add_option("-o,--out", dg.out, "CDF table (CSV)")->required();

  ServeArgs sv;
  auto* v = app.add_subcommand("serve", "Run the HTTP service");
  v->add_option("--config", sv.config, "Service config file");
  v->add_option("--listen", sv.listen, "host:port (overrides the config)");
  v->add_option("--corpus", sv.corpus, "Labeled seed corpus loaded before serving");

  ExportArgs ex;
  auto* e = app.add_subcommand("export-report", "Plot-ready ROC and replay tables");
  e->add_option("--corpus", ex.corpus, "Labeled corpus")->required();
  e->add_option("-o,--out-dir", ex.out_dir, "Output directory")->required();
  e->add_option("--train-count", ex.train_count, "Holdout training size for the ROC");
  e->add_option("--split-seed", ex.split_seed, "Holdout shuffle seed");
  add_train_options(e, ex.cfg.train);

  if (const int code = dispatch(app, [&] { parse(app); }, out, err); code >= 0) return code;

  try {
    if (*g) cmd_gen(gen, err);
    else if (*t) cmd_train(train, err);
    else if (*r) cmd_replay(rep, err);
    else if (*s) cmd_score(sc, out);
    else if (*d) cmd_diag(dg, out);
    else if (*v) cmd_serve(sv, err);
    else if (*e) cmd_export(ex, err);
    return 0;
  } catch (const DataError& ex_) {
    err << "error: " << ex_.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& ex_) {
    err << "error: " << ex_.what() << '\n';
    return 2;
  } catch (const InvariantViolation& ex_) {
    err << "internal error: " << ex_.what() << '\n';
    return 3;
  } catch (const std::exception& ex_) {
    err << "internal error: " << ex_.what() << '\n';
    return 3;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return run(
      [&](CLI::App& app) {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
      },
      out, err);
}

int run_cli(int argc, char** argv) {
  return run([&](CLI::App& app) { app.parse(argc, argv); }, std::cout, std::cerr);
}

}  // namespace cqadet
