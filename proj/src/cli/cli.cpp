#include "curator/cli/cli.hpp"

#include "curator/catalog/catalog.hpp"
#include "curator/common/errors.hpp"
#include "curator/common/image_io.hpp"
#include "curator/detector/detector.hpp"
#include "curator/service/http.hpp"
#include "curator/service/service.hpp"
#include "curator/workflow/workflow.hpp"

#include <csignal>
#include <cstdio>
#include <iomanip>
#include <set>

#include <pthread.h>

#include "CLI11.hpp"

namespace curator::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string catalog;
  std::string backbone;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> level;
  std::string provider;
  std::vector<std::string> classes;
  std::string keyword;
  std::size_t count = 50;
  std::string out;
  std::string heatmap;
  std::string host;
  std::optional<int> port;
};

std::string fmt(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

workflow::ServiceConfig load(const Options& o) {
  workflow::ServiceConfig c = workflow::load_config(o.config);
  if (!o.catalog.empty()) c.catalog = o.catalog;
  if (!o.backbone.empty()) {
    const auto dim = c.embedder.embedding_dim;
    const auto margin = c.embedder.margin;
    c.embedder = siamese::EmbedderConfig::for_backbone(siamese::parse_backbone(o.backbone));
    c.embedder.embedding_dim = dim;
    c.embedder.margin = margin;
  }
  if (o.epochs) c.training.epochs = *o.epochs;
  if (o.seed) {
    c.training.seed = *o.seed;
    c.embedder.seed = *o.seed;
  }
  if (o.level) c.default_level = *o.level;
  if (!o.provider.empty()) c.default_provider = o.provider;
  if (!o.host.empty()) c.server.host = o.host;
  if (o.port) c.server.port = *o.port;
  c.validate();
  return c;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto config = load(o);
  const auto data = workflow::load_dataset(config);
  out << "training " << siamese::to_string(config.embedder.backbone) << " on " << data.splits.train.size()
      << " items, validating on " << data.splits.val.size() << "\n";
  const auto result = workflow::run_training(config, data, [&](const siamese::EpochMetrics& m) {
    out << "epoch " << m.epoch << " train_loss=" << fmt(m.train_loss) << " val_loss=" << fmt(m.val_loss)
        << " val_average_f1=" << fmt(m.val_average_f1) << std::endl;
  });
  out << "checkpoint " << config.checkpoint.string() << " (epoch " << result.best_epoch
      << ", val average_f1 " << fmt(result.best_val_average_f1) << ")\n";
  if (config.history) out << "history " << config.history->string() << "\n";
  return 0;
}

int cmd_calibrate(const Options& o, std::ostream& out) {
  const auto config = load(o);
  const auto data = workflow::load_dataset(config);
  const auto model = workflow::load_model(config);
  catalog::Catalog cat(config.catalog, config.effective_vocabulary());
  for (const auto& cls : workflow::install_missing_anchors(cat, data.anchors)) out << "anchor installed: " << cls << "\n";
  std::optional<std::vector<std::string>> classes;
  if (!o.classes.empty()) classes = o.classes;
  const auto outcome = workflow::calibrate_classes(cat, model, data.splits.val, classes, config.score_workers);
  for (const auto& p : outcome.profiles) {
    out << p.class_name << " fp0=" << fmt(p.fp0) << " fn0=" << fmt(p.fn0) << " ladder=[";
    for (int l = calibrator::kMinLevel; l <= calibrator::kMaxLevel; ++l) {
      out << (l > calibrator::kMinLevel ? " " : "") << fmt(p.threshold(l));
    }
    out << "]" << (p.degenerate ? " degenerate" : "") << " samples=" << p.sample_count << "\n";
  }
  for (const auto& cls : outcome.skipped) out << cls << " skipped: no validation items of this class\n";
  if (outcome.global) out << "global fp0=" << fmt(outcome.global->fp0) << " fn0=" << fmt(outcome.global->fn0) << "\n";
  if (outcome.profiles.empty()) throw CalibrationError("no class could be calibrated");
  return 0;
}

int cmd_curate(const Options& o, std::ostream& out) {
  const auto config = load(o);
  service::Service svc(config);
  const auto job = svc.wait(svc.submit({o.keyword, o.count, std::nullopt, std::nullopt}));
  out << service::to_json(job).dump(2) << "\n";
  if (job.state != service::JobState::done) return kExitFailure;
  const auto page = svc.results(job.id);
  out << page.total << " of " << job.progress.scored << " crops in the '" << job.keyword << "' keyword space at level "
      << page.level << " (threshold " << fmt(page.threshold) << ")\n";
  return 0;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const auto config = load(o);
  const auto data = workflow::load_dataset(config);
  const auto model = workflow::load_model(config);
  catalog::Catalog cat(config.catalog, config.effective_vocabulary());
  const auto backend = detector::make_backend(config.detector);
  const auto report = workflow::run_evaluation(cat, model, config, data, backend.get(), config.default_level);
  const fs::path csv = o.out.empty() ? config.catalog / "reports" / "compare.csv" : fs::path(o.out);
  if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
  write_file_atomic(csv, report.to_csv());
  out << "report " << csv.string() << "\n";
  if (!o.heatmap.empty()) {
    write_file_atomic(o.heatmap, report.heatmap().dump(2));
    out << "heatmap " << o.heatmap << "\n";
  }
  for (const auto& method : report.methods) {
    out << std::left << std::setw(22) << method << " mean average_f1=" << fmt(report.means.at(method).at("average_f1"))
        << " f1=" << fmt(report.means.at(method).at("f1")) << "\n";
  }
  return 0;
}

int cmd_serve(const Options& o, std::ostream& out) {
  // Signals are taken synchronously; block them before any thread starts.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const auto config = load(o);
  service::Service svc(config);
  service::HttpServer server(svc);
  const int port = server.bind(config.server.host, config.server.port);
  server.start();
  out << "listening on http://" << config.server.host << ":" << port << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  out << "stopping" << std::endl;
  server.stop();
  svc.shutdown();
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Keyword-driven image curation"};
  app.name("curator");
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Service config JSON")->required();
    cmd->add_option("--catalog", o.catalog, "Catalog directory (overrides the config)");
  };

  auto* train = app.add_subcommand("train", "Train the Siamese embedder");
  add_config(train);
  train->add_option("--backbone", o.backbone, "small | large | tiny-test");
  train->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  train->add_option("--seed", o.seed);

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate per-class threshold profiles");
  add_config(calibrate);
  calibrate->add_option("--classes", o.classes, "Only these classes");

  auto* curate = app.add_subcommand("curate", "Run one curation job to completion");
  add_config(curate);
  curate->add_option("--keyword", o.keyword)->required();
  curate->add_option("--count", o.count)->check(CLI::PositiveNumber);
  curate->add_option("--level", o.level)->check(CLI::Range(1, 5));
  curate->add_option("--provider", o.provider);

  auto* evaluate = app.add_subcommand("evaluate", "Compare methods on the test split");
  add_config(evaluate);
  evaluate->add_option("--level", o.level)->check(CLI::Range(1, 5));
  evaluate->add_option("--out", o.out, "CSV report path");
  evaluate->add_option("--heatmap", o.heatmap, "Heatmap JSON path");

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  add_config(serve);
  serve->add_option("--host", o.host);
  serve->add_option("--port", o.port)->check(CLI::Range(0, 65535));
  serve->add_option("--level", o.level)->check(CLI::Range(1, 5));
  serve->add_option("--provider", o.provider);

  static const std::set<std::string> commands = {"train", "calibrate", "curate", "evaluate", "serve"};
  if (argc > 1 && argv[1][0] != '-' && !commands.count(argv[1])) {
    err << "unknown command '" << argv[1] << "'; expected train, calibrate, curate, evaluate or serve\n";
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(o, out);
    if (*calibrate) return cmd_calibrate(o, out);
    if (*curate) return cmd_curate(o, out);
    if (*evaluate) return cmd_evaluate(o, out);
    if (*serve) return cmd_serve(o, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace curator::cli
