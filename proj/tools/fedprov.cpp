#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "fedprov/checkpoint.hpp"
#include "fedprov/config.hpp"
#include "fedprov/csv.hpp"
#include "fedprov/evaluation.hpp"
#include "fedprov/fedavg.hpp"
#include "fedprov/harness.hpp"
#include "fedprov/imputation.hpp"
#include "fedprov/log.hpp"
#include "fedprov/plot.hpp"
#include "fedprov/rng.hpp"
#include "fedprov/synth.hpp"

namespace fs = std::filesystem;
using namespace fedprov;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  bool verbose = false;
  bool quiet = false;
};

struct Options {
  std::string input;
  std::string test;
  std::string output;
  std::string model;
  std::string family = "lr";
  std::string strategy = "none";
  std::string province;
  std::string format = "both";
  std::size_t total = 0;
  std::size_t iterations = 0;
  bool noise = false;
  std::size_t rounds = 0;
  std::size_t participants = 0;
  std::size_t local_epochs = 0;
  std::size_t eval_interval = 0;
  std::size_t bins = 10;
  std::size_t jobs = 0;
  std::vector<std::uint64_t> seeds;
  bool parallel = false;
};

fs::path out_dir(const Globals& g, const ExperimentConfig& cfg) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("FEDPROV_OUT"); env != nullptr && *env != '\0') return env;
  return cfg.output_dir;
}

fs::path resolve(const fs::path& dir, const std::string& given, const std::string& fallback) {
  if (!given.empty()) return given;
  return dir / fallback;
}

ExperimentConfig load_config(const Globals& g) {
  return g.config.empty() ? ExperimentConfig{} : load_experiment_config(g.config);
}

void require_input(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string(what) + " is required");
}

std::map<Province, Dataset> group_by_province(const Dataset& ds) {
  std::map<Province, Dataset> out;
  for (const auto& r : ds.records) out[r.province].records.push_back(r);
  return out;
}

MiceConfig mice_config(const ExperimentConfig& cfg, const Options& o, std::uint64_t seed,
                       std::size_t slot) {
  MiceConfig m = cfg.mice;
  if (o.iterations > 0) m.n_iterations = o.iterations;
  if (o.noise) m.noise = true;
  m.seed = derive_seed(seed, "mice", slot);
  return m;
}

Dataset to_records(const LabeledMatrix& m, Province province) {
  Dataset ds;
  for (Eigen::Index i = 0; i < m.x.rows(); ++i) {
    std::array<double, kNumFeatures> row{};
    for (std::size_t f = 0; f < kNumFeatures; ++f) row[f] = m.x(i, static_cast<Eigen::Index>(f));
    ds.records.push_back(decode_features(row, m.y(i) > 0.5, province));
  }
  return ds;
}

// Imputes each province separately, in province order.
std::vector<std::pair<Province, LabeledMatrix>> impute_by_province(const Dataset& ds,
                                                                   const ExperimentConfig& cfg,
                                                                   const Options& o,
                                                                   std::uint64_t seed) {
  std::vector<std::pair<Province, LabeledMatrix>> out;
  for (const auto& [province, part] : group_by_province(ds)) {
    out.emplace_back(province, mice_impute(part, mice_config(cfg, o, seed,
                                                             static_cast<std::size_t>(province))));
  }
  return out;
}

LabeledMatrix maybe_downsample(const LabeledMatrix& m, Strategy s, std::uint64_t seed) {
  return s == Strategy::kDownsample ? downsample_majority(m, seed) : m;
}

ParamVector fit(ModelFamily family, const LabeledMatrix& data, TrainConfig tc, std::uint64_t seed) {
  tc.seed = seed;
  return family == ModelFamily::kLogistic ? flatten(train_logistic(data, tc))
                                          : flatten(train_mlp(data, tc));
}

int cmd_generate(const Globals& g, const Options& o) {
  ExperimentConfig cfg = load_config(g);
  GeneratorConfig gen = cfg.generator;
  if (!g.config.empty()) {
    // A generate config may also be a bare generator document.
    std::ifstream probe(g.config);
    std::stringstream ss;
    ss << probe.rdbuf();
    if (ss.str().find("\"generator\"") == std::string::npos) gen = parse_generator_config(ss.str());
  }
  if (o.total > 0) gen = scaled_to(gen, o.total);
  const Cohort cohort = generate_cohort(gen, g.seed);
  const fs::path path = resolve(out_dir(g, cfg), o.output, "cohort.csv");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_csv(cohort.data, path);
  for (const auto& [p, b] : cohort.intercepts) {
    log::info("intercept " + std::string(to_string(p)) + " = " + format_double(b));
  }
  std::cout << path.string() << " (" << cohort.data.size() << " rows)\n";
  return 0;
}

int cmd_impute(const Globals& g, const Options& o) {
  require_input(o.input, "--input");
  const ExperimentConfig cfg = load_config(g);
  const Dataset ds = read_csv(fs::path(o.input));
  Dataset out;
  out.provenance = ds.provenance + "+mice";
  for (const auto& [province, m] : impute_by_province(ds, cfg, o, g.seed)) {
    const Dataset part = to_records(m, province);
    out.records.insert(out.records.end(), part.records.begin(), part.records.end());
  }
  const fs::path path = resolve(out_dir(g, cfg), o.output, "imputed.csv");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_csv(out, path);
  std::cout << path.string() << " (" << out.size() << " rows)\n";
  return 0;
}

int cmd_train_single(const Globals& g, const Options& o, bool central) {
  require_input(o.input, "--input");
  const ExperimentConfig cfg = load_config(g);
  const ModelFamily family = parse_family(o.family);
  const Strategy strategy = parse_strategy(o.strategy);
  Dataset ds = read_csv(fs::path(o.input));
  std::string tag = "central";
  if (!central) {
    if (o.province.empty()) throw ValidationError("--province is required");
    const Province p = parse_province(o.province);
    std::erase_if(ds.records, [p](const PatientRecord& r) { return r.province != p; });
    if (ds.empty()) throw ValidationError("no rows for province " + o.province);
    tag = std::string(to_string(p));
  }
  std::vector<const LabeledMatrix*> parts;
  const auto imputed = impute_by_province(ds, cfg, o, g.seed);
  for (const auto& [p, m] : imputed) parts.push_back(&m);
  const LabeledMatrix train = concat(parts);
  const Standardizer s = standardize_fit(train);
  const LabeledMatrix data =
      standardize_apply(s, maybe_downsample(train, strategy, derive_seed(g.seed, "downsample")));
  Checkpoint ckpt;
  ckpt.params = fit(family, data, cfg.train.at(family), derive_seed(g.seed, "train"));
  ckpt.standardizers.emplace_back("*", s);
  const fs::path path = resolve(out_dir(g, cfg), o.output,
                                tag + "_" + std::string(to_string(family)) + ".ckpt");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_checkpoint(ckpt, path);
  std::cout << path.string() << "\n";
  return 0;
}

int cmd_train_fed(const Globals& g, const Options& o) {
  require_input(o.input, "--input");
  const ExperimentConfig cfg = load_config(g);
  const ModelFamily family = parse_family(o.family);
  const Strategy strategy = parse_strategy(o.strategy);
  FedConfig fc = cfg.fed;
  fc.train = cfg.train.at(family);
  fc.seed = derive_seed(g.seed, "fl");
  if (o.rounds > 0) fc.rounds = o.rounds;
  if (o.participants > 0) fc.participants = o.participants;
  if (o.local_epochs > 0) fc.local_epochs = o.local_epochs;
  if (o.eval_interval > 0) fc.eval_interval = o.eval_interval;
  if (o.parallel) fc.parallel = true;

  const Dataset ds = read_csv(fs::path(o.input));
  std::vector<Client> clients;
  Checkpoint ckpt;
  for (const auto& [province, m] : impute_by_province(ds, cfg, o, g.seed)) {
    if (!is_fl_province(province)) {
      log::warn("skipping " + std::string(to_string(province)) + ": not a federated client");
      continue;
    }
    const Standardizer s = standardize_fit(m);
    const std::size_t slot = clients.size();
    const LabeledMatrix local =
        maybe_downsample(m, strategy, derive_seed(fc.seed, "client-downsample", slot));
    clients.emplace_back(province, standardize_apply(s, local), s, fc.seed, slot);
    ckpt.standardizers.emplace_back(std::string(to_string(province)), s);
  }
  if (clients.empty()) throw ValidationError("no federated client rows in " + o.input);
  validate(fc, clients.size());

  GlobalEvaluator evaluator;
  std::vector<std::pair<std::size_t, LabeledMatrix>> test_sets;
  if (!o.test.empty()) {
    const Dataset test = read_csv(fs::path(o.test));
    for (const auto& [province, m] : impute_by_province(test, cfg, o, derive_seed(g.seed, "test"))) {
      for (std::size_t k = 0; k < clients.size(); ++k) {
        if (clients[k].province() == province) test_sets.emplace_back(k, m);
      }
    }
    if (fc.eval_interval == 0) fc.eval_interval = 1;
    evaluator = [&](const ParamVector& params) {
      std::vector<double> probs;
      std::vector<int> labels;
      for (const auto& [k, m] : test_sets) {
        const auto p = clients[k].score(params, m.x);
        const auto l = int_labels(m);
        probs.insert(probs.end(), p.begin(), p.end());
        labels.insert(labels.end(), l.begin(), l.end());
      }
      return roc_auc(probs, labels);
    };
  } else if (fc.eval_interval > 0 || fc.plateau_stop) {
    throw ValidationError("--test is required for round evaluation or plateau stopping");
  }

  const FedResult result = run_fedavg(clients, family, fc, evaluator);
  ckpt.params = result.params;
  const fs::path dir = out_dir(g, cfg);
  const fs::path path = resolve(dir, o.output, "fl_" + std::string(to_string(family)) + ".ckpt");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_checkpoint(ckpt, path);

  std::ostringstream rounds;
  rounds << "round,selected,checksum,auc\n";
  for (const auto& r : result.history) {
    rounds << r.round << ',';
    for (std::size_t i = 0; i < r.selected.size(); ++i) {
      rounds << (i ? ";" : "") << to_string(clients[r.selected[i]].province());
    }
    char hex[20];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(r.checksum));
    rounds << ',' << hex << ',' << (r.metric ? format_double(*r.metric) : "") << '\n';
  }
  const fs::path rounds_path = path.parent_path() / (path.stem().string() + "_rounds.csv");
  write_text_file(rounds_path, rounds.str());
  std::cout << path.string() << "\n" << rounds_path.string() << "\n";
  return 0;
}

int cmd_evaluate(const Globals& g, const Options& o) {
  require_input(o.input, "--input");
  require_input(o.model, "--model");
  const ExperimentConfig cfg = load_config(g);
  const Checkpoint ckpt = read_checkpoint(fs::path(o.model));
  const Dataset ds = read_csv(fs::path(o.input));
  std::vector<double> probs;
  std::vector<int> labels;
  for (const auto& [province, m] : impute_by_province(ds, cfg, o, g.seed)) {
    const Standardizer* s = ckpt.standardizer_for(province);
    if (s == nullptr) {
      throw ValidationError("model has no standardizer for province " +
                            std::string(to_string(province)));
    }
    const auto p = predict(ckpt.params, standardize_apply(*s, m.x));
    const auto l = int_labels(m);
    probs.insert(probs.end(), p.begin(), p.end());
    labels.insert(labels.end(), l.begin(), l.end());
  }
  const MetricsRow row = evaluate_predictions(probs, labels);
  const fs::path dir = out_dir(g, cfg);
  const fs::path path = resolve(dir, o.output, "metrics.csv");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream csv;
  csv << "auc,f1,precision,recall,n\n"
      << format_double(row.auc) << ',' << format_double(row.f1) << ','
      << format_double(row.precision) << ',' << format_double(row.recall) << ',' << probs.size()
      << '\n';
  write_text_file(path, csv.str());
  std::ostringstream js;
  js << "{\"auc\":" << format_double(row.auc) << ",\"f1\":" << format_double(row.f1)
     << ",\"precision\":" << format_double(row.precision)
     << ",\"recall\":" << format_double(row.recall) << ",\"n\":" << probs.size() << "}\n";
  fs::path jsonl = path;
  jsonl.replace_extension(".jsonl");
  write_text_file(jsonl, js.str());
  if (row.precision_undefined) log::warn("precision undefined: no positive predictions");
  if (row.recall_undefined) log::warn("recall undefined: no positive labels");

  const CalibrationCurve curve = calibration_curve(probs, labels, o.bins);
  std::ostringstream cal;
  cal << "bin_lo,bin_hi,mean_pred,obs_frac,count\n";
  for (const auto& b : curve.bins) {
    cal << format_double(b.lo) << ',' << format_double(b.hi) << ','
        << (b.mean_pred ? format_double(*b.mean_pred) : "") << ','
        << (b.obs_frac ? format_double(*b.obs_frac) : "") << ',' << b.count << '\n';
  }
  fs::path cal_path = path.parent_path() / (path.stem().string() + "_calibration.csv");
  write_text_file(cal_path, cal.str());
  std::cout << "auc=" << format_double(row.auc) << " f1=" << format_double(row.f1)
            << " precision=" << format_double(row.precision)
            << " recall=" << format_double(row.recall) << " ece=" << format_double(curve.ece)
            << "\n";
  return 0;
}

void write_all(const ReportTable& t, const std::string& format, const fs::path& dir) {
  if (format != "csv" && format != "markdown" && format != "both") {
    throw ValidationError("--format must be csv, markdown or both");
  }
  std::vector<fs::path> written;
  if (format != "markdown") {
    auto w = emit_report(t, ReportFormat::kCsv, dir);
    written.insert(written.end(), w.begin(), w.end());
  }
  if (format != "csv") {
    auto w = emit_report(t, ReportFormat::kMarkdown, dir);
    written.insert(written.end(), w.begin(), w.end());
  }
  auto w = emit_calibration(t, dir);
  written.insert(written.end(), w.begin(), w.end());
  for (const auto& p : written) std::cout << p.string() << "\n";
}

int cmd_report(const Globals& g, const Options& o) {
  require_input(o.input, "--results");
  const ExperimentConfig cfg = load_config(g);
  const ReportTable t = load_results(fs::path(o.input));
  write_all(t, o.format, out_dir(g, cfg));
  return 0;
}

int cmd_run_matrix(const Globals& g, const Options& o) {
  ExperimentConfig cfg = load_config(g);
  if (!o.seeds.empty()) {
    cfg.seeds = o.seeds;
  } else if (g.config.empty()) {
    cfg.seeds = {g.seed};
  }
  if (o.jobs > 0) cfg.jobs = o.jobs;
  if (o.total > 0) cfg.generator = scaled_to(cfg.generator, o.total);
  const fs::path dir = out_dir(g, cfg);
  const ReportTable t = run_matrix(cfg);
  std::cout << emit_results(t, dir).string() << "\n";
  write_text_file(dir / "config.json", to_json_string(cfg));
  write_all(t, o.format, dir);
  if (!t.failures.empty()) {
    log::warn(std::to_string(t.failures.size()) + " cell(s) failed; see failures.csv");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated diabetes prediction on synthetic provincial cohorts"};
  app.require_subcommand(1);
  Globals g;
  Options o;
  app.add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory (default: $FEDPROV_OUT, then the config)");
  app.add_flag("-v,--verbose", g.verbose, "Log progress to stderr");
  app.add_flag("-q,--quiet", g.quiet, "Only log errors");

  auto* gen = app.add_subcommand("generate", "Write a synthetic cohort CSV");
  gen->add_option("-n,--total", o.total, "Rescale province sizes to this total");
  gen->add_option("-o,--output", o.output, "Output CSV");

  auto* imp = app.add_subcommand("impute", "MICE-impute a cohort CSV per province");
  imp->add_option("-i,--input", o.input, "Input CSV")->required();
  imp->add_option("-o,--output", o.output, "Output CSV");
  imp->add_option("--iterations", o.iterations, "MICE iterations");
  imp->add_flag("--noise", o.noise, "Add residual noise to imputed values");

  auto add_train = [&](CLI::App* c) {
    c->add_option("-i,--input", o.input, "Training CSV")->required();
    c->add_option("-o,--output", o.output, "Checkpoint path");
    c->add_option("-f,--family", o.family, "lr or mlp");
    c->add_option("-s,--strategy", o.strategy, "none or downsample");
  };
  auto* local = app.add_subcommand("train-local", "Train on one province's rows");
  add_train(local);
  local->add_option("-p,--province", o.province, "Province code")->required();
  auto* central = app.add_subcommand("train-central", "Train on all rows pooled");
  add_train(central);
  auto* fed = app.add_subcommand("train-fed", "Train with FedAvg, one client per province");
  add_train(fed);
  fed->add_option("--test", o.test, "Test CSV scored after evaluated rounds");
  fed->add_option("--rounds", o.rounds, "Communication rounds");
  fed->add_option("--participants", o.participants, "Clients per round");
  fed->add_option("--local-epochs", o.local_epochs, "Local epochs per round");
  fed->add_option("--eval-interval", o.eval_interval, "Rounds between evaluations");
  fed->add_flag("--parallel", o.parallel, "Run client updates on threads");

  auto* eval = app.add_subcommand("evaluate", "Score a checkpoint on a CSV");
  eval->add_option("-m,--model", o.model, "Checkpoint")->required();
  eval->add_option("-i,--input", o.input, "Test CSV")->required();
  eval->add_option("-o,--output", o.output, "Metrics CSV");
  eval->add_option("--bins", o.bins, "Calibration bins");

  auto* report = app.add_subcommand("report", "Rebuild tables from results.jsonl");
  report->add_option("-r,--results", o.input, "results.jsonl")->required();
  report->add_option("--format", o.format, "csv, markdown or both");

  auto* matrix = app.add_subcommand("run-matrix", "Run the full experiment matrix");
  matrix->add_option("--seeds", o.seeds, "Replication seeds");
  matrix->add_option("-j,--jobs", o.jobs, "Seeds run concurrently");
  matrix->add_option("-n,--total", o.total, "Rescale province sizes to this total");
  matrix->add_option("--format", o.format, "csv, markdown or both");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (g.verbose) log::set_level(log::Level::kInfo);
  if (g.quiet) log::set_level(log::Level::kError);

  try {
    if (*gen) return cmd_generate(g, o);
    if (*imp) return cmd_impute(g, o);
    if (*local) return cmd_train_single(g, o, false);
    if (*central) return cmd_train_single(g, o, true);
    if (*fed) return cmd_train_fed(g, o);
    if (*eval) return cmd_evaluate(g, o);
    if (*report) return cmd_report(g, o);
    if (*matrix) return cmd_run_matrix(g, o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
