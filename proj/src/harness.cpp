#include "fedprov/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include "json.hpp"

#include "fedprov/log.hpp"
#include "fedprov/plot.hpp"
#include "fedprov/rng.hpp"

namespace fedprov {

using Eigen::Index;

std::string_view to_string(Strategy s) { return s == Strategy::kNone ? "none" : "downsample"; }

Strategy parse_strategy(std::string_view name) {
  if (name == "none") return Strategy::kNone;
  if (name == "downsample") return Strategy::kDownsample;
  throw ValidationError("unknown resample strategy '" + std::string(name) +
                        "' (expected none or downsample)");
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.families.empty()) throw ValidationError("at least one model family is required");
  if (cfg.strategies.empty()) throw ValidationError("at least one resample strategy is required");
  if (cfg.seeds.empty()) throw ValidationError("at least one replication seed is required");
  if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0)) {
    throw ValidationError("split fraction must lie in (0, 1) so both sets are nonempty");
  }
  if (cfg.mice.n_iterations < 1) throw ValidationError("MICE iterations must be >= 1");
  if (cfg.calibration_bins < 2) throw ValidationError("calibration needs at least 2 bins");
  if (cfg.jobs < 1) throw ValidationError("jobs must be >= 1");
  validate(cfg.generator);
  for (ModelFamily f : cfg.families) {
    const auto it = cfg.train.find(f);
    if (it == cfg.train.end()) {
      throw ValidationError("no training config for family " + std::string(to_string(f)));
    }
    validate(it->second);
  }
  validate(cfg.fed, cfg.generator.provinces.size());
}

MetricSummary ReportTable::summary(const CellKey& key) const {
  MetricSummary s;
  const auto it = cells.find(key);
  if (it == cells.end() || it->second.empty()) return s;
  const auto& rows = it->second;
  s.n = rows.size();
  const auto n = static_cast<double>(s.n);
  auto field = [](MetricsRow& r, int i) -> double& {
    switch (i) {
      case 0: return r.auc;
      case 1: return r.f1;
      case 2: return r.precision;
      default: return r.recall;
    }
  };
  for (int i = 0; i < 4; ++i) {
    double sum = 0.0;
    for (auto r : rows) sum += field(r, i);
    const double mean = sum / n;
    double ss = 0.0;
    for (auto r : rows) ss += (field(r, i) - mean) * (field(r, i) - mean);
    field(s.mean, i) = mean;
    field(s.std, i) = s.n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return s;
}

namespace {

// One province after splitting and imputation. Features are on the raw scale.
struct ProvinceData {
  Province province;
  LabeledMatrix train;
  LabeledMatrix test;
  Standardizer standardizer;  // fit on `train`
};

struct Scored {
  std::vector<double> probs;
  std::vector<int> labels;
};

Scored score_with(const ParamVector& params, const Standardizer& s, const LabeledMatrix& test) {
  return Scored{predict(params, standardize_apply(s, test.x)), int_labels(test)};
}

void append(Scored& into, const Scored& part) {
  into.probs.insert(into.probs.end(), part.probs.begin(), part.probs.end());
  into.labels.insert(into.labels.end(), part.labels.begin(), part.labels.end());
}

LabeledMatrix training_matrix(const LabeledMatrix& train, Strategy strategy, std::uint64_t seed) {
  return strategy == Strategy::kDownsample ? downsample_majority(train, seed) : train;
}

std::string family_tag(ModelFamily f) { return std::string(to_string(f)); }

}  // namespace

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedResult out;
  out.seed = seed;

  const Cohort cohort = generate_cohort(cfg.generator, derive_seed(seed, "cohort"));
  const ProvincePartition partition = partition_by_province(cohort.data);

  std::vector<ProvinceData> provinces;
  for (const auto& [province, ds] : partition.parts) {
    const auto idx = fl_index(province);
    auto [train_ds, test_ds] = split_train_test(ds, cfg.split_fraction, derive_seed(seed, "split", idx));
    MiceConfig train_mice = cfg.mice;
    train_mice.seed = derive_seed(seed, "mice-train", idx);
    MiceConfig test_mice = cfg.mice;
    test_mice.seed = derive_seed(seed, "mice-test", idx);
    // Imputed separately: the test set never sees training statistics.
    LabeledMatrix train = mice_impute(train_ds, train_mice);
    LabeledMatrix test = mice_impute(test_ds, test_mice);
    Standardizer s = standardize_fit(train);
    provinces.push_back({province, std::move(train), std::move(test), std::move(s)});
  }
  auto find_province = [&](Province p) -> const ProvinceData* {
    for (const auto& pd : provinces) {
      if (pd.province == p) return &pd;
    }
    return nullptr;
  };

  std::vector<const LabeledMatrix*> train_parts;
  for (const auto& pd : provinces) train_parts.push_back(&pd.train);
  const LabeledMatrix pooled_train = concat(train_parts);
  const Standardizer central_standardizer = standardize_fit(pooled_train);

  for (ModelFamily family : cfg.families) {
    const TrainConfig& base = cfg.train.at(family);
    for (Strategy strategy : cfg.strategies) {
      const std::string strat_tag = std::string(to_string(strategy));
      // A scorer per source: global-test probabilities plus per-province ones
      // for the cross-test layout.
      std::map<std::string, std::function<Scored(const ProvinceData&)>> scorers;
      std::map<std::string, std::string> failed;

      auto fail = [&](const std::string& source, const std::string& reason) {
        failed[source] = reason;
        log::warn("seed " + std::to_string(seed) + " " + family_tag(family) + "/" + strat_tag +
                  "/" + source + ": " + reason);
      };

      std::map<std::string, ParamVector> fitted;
      auto train_one = [&](const std::string& source, const LabeledMatrix& raw_train,
                           const Standardizer& s, std::uint64_t train_seed) {
        try {
          TrainConfig tc = base;
          tc.seed = train_seed;
          const LabeledMatrix data = standardize_apply(
              s, training_matrix(raw_train, strategy, derive_seed(train_seed, "downsample")));
          fitted[source] = family == ModelFamily::kLogistic ? flatten(train_logistic(data, tc))
                                                            : flatten(train_mlp(data, tc));
        } catch (const std::exception& e) {
          fail(source, e.what());
        }
      };

      if (cfg.include_local) {
        for (const auto& pd : provinces) {
          const std::string source(to_string(pd.province));
          train_one(source, pd.train, pd.standardizer,
                    derive_seed(seed, "local-" + family_tag(family), fl_index(pd.province)));
          if (fitted.count(source)) {
            const ParamVector params = fitted.at(source);
            const Standardizer s = pd.standardizer;
            scorers[source] = [params, s](const ProvinceData& target) {
              return score_with(params, s, target.test);
            };
          }
        }
      }

      const std::string cml(kCentralSource);
      train_one(cml, pooled_train, central_standardizer, derive_seed(seed, "cml-" + family_tag(family)));
      if (fitted.count(cml)) {
        const ParamVector params = fitted.at(cml);
        scorers[cml] = [params, &central_standardizer](const ProvinceData& target) {
          return score_with(params, central_standardizer, target.test);
        };
      }

      // Federated: each client standardizes and (optionally) downsamples its
      // own training data; the server only ever sees parameter vectors.
      const std::string fl(kFederatedSource);
      std::vector<Client> clients;
      std::optional<FedResult> fed_result;
      try {
        FedConfig fc = cfg.fed;
        fc.train = base;
        fc.seed = derive_seed(seed, "fl-" + family_tag(family));
        for (std::size_t k = 0; k < provinces.size(); ++k) {
          const auto& pd = provinces[k];
          const LabeledMatrix local = training_matrix(
              pd.train, strategy, derive_seed(fc.seed, "client-downsample", k));
          clients.emplace_back(pd.province, standardize_apply(pd.standardizer, local),
                               pd.standardizer, fc.seed, k);
        }
        fed_result = run_fedavg(clients, family, fc);
      } catch (const std::exception& e) {
        fail(fl, e.what());
      }
      if (fed_result) {
        const ParamVector params = fed_result->params;
        scorers[fl] = [params, &clients](const ProvinceData& target) {
          for (const auto& c : clients) {
            if (c.province() == target.province) {
              return Scored{c.score(params, target.test.x), int_labels(target.test)};
            }
          }
          throw std::logic_error("no client for province");
        };
      }

      // Every source in report order, including ones that failed.
      std::vector<std::string> sources;
      if (cfg.include_local) {
        for (const auto& pd : provinces) sources.emplace_back(to_string(pd.province));
      }
      sources.push_back(cml);
      sources.push_back(fl);

      for (const auto& source : sources) {
        CellKey key{family, source, strategy, std::string(kGlobalTest)};
        if (failed.count(source)) {
          out.failures.push_back({seed, key, failed.at(source)});
          continue;
        }
        try {
          Scored global;
          for (const auto& pd : provinces) append(global, scorers.at(source)(pd));
          out.cells[key] = evaluate_predictions(global.probs, global.labels);
          if (source == cml || source == fl) {
            out.calibration[CalibrationKey{family, strategy, source}] =
                calibration_curve(global.probs, global.labels, cfg.calibration_bins);
          }
        } catch (const std::exception& e) {
          out.failures.push_back({seed, key, e.what()});
        }

        if (std::find(kCrossSources.begin(), kCrossSources.end(), source) == kCrossSources.end()) {
          continue;
        }
        for (Province target : kCrossTestSets) {
          CellKey cross{family, source, strategy, std::string(to_string(target))};
          const ProvinceData* pd = find_province(target);
          if (pd == nullptr) {
            out.failures.push_back({seed, cross, "province not present in cohort"});
            continue;
          }
          try {
            const Scored s = scorers.at(source)(*pd);
            out.cells[cross] = evaluate_predictions(s.probs, s.labels);
          } catch (const std::exception& e) {
            out.failures.push_back({seed, cross, e.what()});
          }
        }
      }
    }
  }
  return out;
}

ReportTable run_matrix(const ExperimentConfig& cfg) {
  validate(cfg);
  ReportTable table;
  table.seeds = cfg.seeds;
  std::vector<SeedResult> results(cfg.seeds.size());
  for (std::size_t start = 0; start < cfg.seeds.size(); start += cfg.jobs) {
    const std::size_t stop = std::min(start + cfg.jobs, cfg.seeds.size());
    if (stop - start == 1) {
      results[start] = run_seed(cfg, cfg.seeds[start]);
      continue;
    }
    std::vector<std::future<SeedResult>> jobs;
    for (std::size_t i = start; i < stop; ++i) {
      jobs.push_back(std::async(std::launch::async, [&cfg, i] { return run_seed(cfg, cfg.seeds[i]); }));
    }
    for (std::size_t i = start; i < stop; ++i) results[i] = jobs[i - start].get();
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    for (auto& [key, row] : r.cells) table.cells[key].push_back(row);
    if (i == 0) table.calibration = r.calibration;
    table.failures.insert(table.failures.end(), r.failures.begin(), r.failures.end());
  }
  return table;
}

// ---------------------------------------------------------------------------
// Report emission

namespace {

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::vector<ModelFamily> families_in(const ReportTable& t) {
  std::vector<ModelFamily> out;
  for (const auto& [key, rows] : t.cells) {
    if (std::find(out.begin(), out.end(), key.family) == out.end()) out.push_back(key.family);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Strategy> strategies_in(const ReportTable& t) {
  std::vector<Strategy> out;
  for (const auto& [key, rows] : t.cells) {
    if (std::find(out.begin(), out.end(), key.strategy) == out.end()) out.push_back(key.strategy);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Report order: provinces, then CML, then FL.
std::vector<std::string> ordered_sources(const ReportTable& t, ModelFamily family,
                                         bool cross_only) {
  std::vector<std::string> order;
  for (Province p : kFlProvinces) order.emplace_back(to_string(p));
  order.emplace_back(kCentralSource);
  order.emplace_back(kFederatedSource);
  std::vector<std::string> out;
  for (const auto& s : order) {
    if (cross_only &&
        std::find(kCrossSources.begin(), kCrossSources.end(), s) == kCrossSources.end()) {
      continue;
    }
    const bool present = std::any_of(t.cells.begin(), t.cells.end(), [&](const auto& kv) {
      return kv.first.family == family && kv.first.source == s;
    });
    if (present) out.push_back(s);
  }
  return out;
}

std::string family_title(ModelFamily f) {
  return f == ModelFamily::kLogistic ? "Logistic regression" : "MLP";
}

std::string ref_cell(const std::optional<MetricsRow>& ref, double MetricsRow::*field) {
  return ref ? fixed((*ref).*field, 4) : "";
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const ReportTable& t, ReportFormat format,
                                               const std::filesystem::path& dir) {
  if (t.cells.empty()) throw ValidationError("report table is empty");
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const bool csv = format == ReportFormat::kCsv;
  const std::string ext = csv ? ".csv" : ".md";

  for (ModelFamily family : families_in(t)) {
    const std::string tag(to_string(family));
    // Global-test layout.
    {
      std::ostringstream out;
      if (csv) {
        out << "source,strategy,auc,f1,precision,recall\n";
      } else {
        out << "# " << family_title(family) << " on the global test set\n\n"
            << "Seed-averaged over " << t.seeds.size() << " seed(s). Reference columns hold "
            << "the published values for the same cell.\n\n"
            << "| Source | Strategy | AUC | F1 | Precision | Recall | Ref AUC | Ref F1 | "
               "Ref Precision | Ref Recall |\n"
            << "|---|---|---|---|---|---|---|---|---|---|\n";
      }
      for (const auto& source : ordered_sources(t, family, false)) {
        for (Strategy strategy : strategies_in(t)) {
          const CellKey key{family, source, strategy, std::string(kGlobalTest)};
          if (!t.cells.count(key)) continue;
          const MetricsRow m = t.summary(key).mean;
          if (csv) {
            out << source << ',' << to_string(strategy) << ',' << fixed(m.auc, 6) << ','
                << fixed(m.f1, 6) << ',' << fixed(m.precision, 6) << ',' << fixed(m.recall, 6)
                << '\n';
          } else {
            const auto ref = published_reference(key);
            out << "| " << source << " | " << to_string(strategy) << " | " << fixed(m.auc, 4)
                << " | " << fixed(m.f1, 4) << " | " << fixed(m.precision, 4) << " | "
                << fixed(m.recall, 4) << " | " << ref_cell(ref, &MetricsRow::auc) << " | "
                << ref_cell(ref, &MetricsRow::f1) << " | "
                << ref_cell(ref, &MetricsRow::precision) << " | "
                << ref_cell(ref, &MetricsRow::recall) << " |\n";
          }
        }
      }
      const auto path = dir / (tag + "_global" + ext);
      write_text_file(path, out.str());
      written.push_back(path);
    }
    // Cross-test layout.
    const auto cross_sources = ordered_sources(t, family, true);
    bool any_cross = false;
    std::ostringstream out;
    if (csv) {
      out << "source,strategy,test_set,auc,f1,precision,recall\n";
    } else {
      out << "# " << family_title(family) << " on the less-sampled provincial test sets\n\n"
          << "| Source | Strategy | Test set | AUC | F1 | Precision | Recall | Ref AUC | "
             "Ref F1 |\n"
          << "|---|---|---|---|---|---|---|---|---|\n";
    }
    for (const auto& source : cross_sources) {
      for (Strategy strategy : strategies_in(t)) {
        for (Province target : kCrossTestSets) {
          const CellKey key{family, source, strategy, std::string(to_string(target))};
          if (!t.cells.count(key)) continue;
          any_cross = true;
          const MetricsRow m = t.summary(key).mean;
          if (csv) {
            out << source << ',' << to_string(strategy) << ',' << key.test_set << ','
                << fixed(m.auc, 6) << ',' << fixed(m.f1, 6) << ',' << fixed(m.precision, 6)
                << ',' << fixed(m.recall, 6) << '\n';
          } else {
            const auto ref = published_reference(key);
            out << "| " << source << " | " << to_string(strategy) << " | " << key.test_set
                << " | " << fixed(m.auc, 4) << " | " << fixed(m.f1, 4) << " | "
                << fixed(m.precision, 4) << " | " << fixed(m.recall, 4) << " | "
                << ref_cell(ref, &MetricsRow::auc) << " | " << ref_cell(ref, &MetricsRow::f1)
                << " |\n";
          }
        }
      }
    }
    if (any_cross) {
      const auto path = dir / (tag + "_cross" + ext);
      write_text_file(path, out.str());
      written.push_back(path);
    }
  }

  // Seed variance for every cell.
  {
    std::ostringstream out;
    if (csv) {
      out << "family,source,strategy,test_set,n_seeds,auc_mean,auc_std,f1_mean,f1_std,"
             "precision_mean,precision_std,recall_mean,recall_std\n";
    } else {
      out << "# Seed variance\n\n"
          << "| Family | Source | Strategy | Test set | Seeds | AUC | F1 | Precision | Recall |\n"
          << "|---|---|---|---|---|---|---|---|---|\n";
    }
    for (const auto& [key, rows] : t.cells) {
      const MetricSummary s = t.summary(key);
      if (csv) {
        out << to_string(key.family) << ',' << key.source << ',' << to_string(key.strategy) << ','
            << key.test_set << ',' << s.n << ',' << fixed(s.mean.auc, 6) << ','
            << fixed(s.std.auc, 6) << ',' << fixed(s.mean.f1, 6) << ',' << fixed(s.std.f1, 6)
            << ',' << fixed(s.mean.precision, 6) << ',' << fixed(s.std.precision, 6) << ','
            << fixed(s.mean.recall, 6) << ',' << fixed(s.std.recall, 6) << '\n';
      } else {
        auto pm = [](double mean, double sd) { return fixed(mean, 4) + " ± " + fixed(sd, 4); };
        out << "| " << to_string(key.family) << " | " << key.source << " | "
            << to_string(key.strategy) << " | " << key.test_set << " | " << s.n << " | "
            << pm(s.mean.auc, s.std.auc) << " | " << pm(s.mean.f1, s.std.f1) << " | "
            << pm(s.mean.precision, s.std.precision) << " | " << pm(s.mean.recall, s.std.recall)
            << " |\n";
      }
    }
    const auto path = dir / ("seed_variance" + ext);
    write_text_file(path, out.str());
    written.push_back(path);
  }

  if (!t.failures.empty()) {
    std::ostringstream out;
    out << "seed,family,source,strategy,test_set,reason\n";
    for (const auto& f : t.failures) {
      std::string reason = f.reason;
      std::replace(reason.begin(), reason.end(), ',', ';');
      std::replace(reason.begin(), reason.end(), '\n', ' ');
      out << f.seed << ',' << to_string(f.key.family) << ',' << f.key.source << ','
          << to_string(f.key.strategy) << ',' << f.key.test_set << ',' << reason << '\n';
    }
    const auto path = dir / "failures.csv";
    write_text_file(path, out.str());
    written.push_back(path);
  }
  return written;
}

std::vector<std::filesystem::path> emit_calibration(const ReportTable& t,
                                                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& [key, curve] : t.calibration) {
    const std::string stem = "calibration_" + std::string(to_string(key.family)) + "_" +
                             std::string(to_string(key.strategy)) + "_" + key.source;
    std::ostringstream csv;
    csv << "bin_lo,bin_hi,mean_pred,obs_frac,count\n";
    for (const auto& bin : curve.bins) {
      csv << fixed(bin.lo, 4) << ',' << fixed(bin.hi, 4) << ','
          << (bin.mean_pred ? fixed(*bin.mean_pred, 6) : "") << ','
          << (bin.obs_frac ? fixed(*bin.obs_frac, 6) : "") << ',' << bin.count << '\n';
    }
    csv << "# ece," << fixed(curve.ece, 6) << '\n';
    const auto csv_path = dir / (stem + ".csv");
    write_text_file(csv_path, csv.str());
    written.push_back(csv_path);

    const std::string title = std::string(key.family == ModelFamily::kLogistic ? "LR" : "MLP") +
                              " " + key.source + " (" + std::string(to_string(key.strategy)) + ")";
    const auto svg_path = dir / (stem + ".svg");
    write_text_file(svg_path, calibration_svg(curve, title));
    written.push_back(svg_path);
  }
  return written;
}

namespace {

using nlohmann::json;

json metrics_json(const MetricsRow& m) {
  return json{{"auc", m.auc}, {"f1", m.f1}, {"precision", m.precision}, {"recall", m.recall}};
}

MetricsRow metrics_from_json(const json& j) {
  MetricsRow m;
  m.auc = j.at("auc").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  return m;
}

}  // namespace

std::filesystem::path emit_results(const ReportTable& t, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream out;
  out << json{{"type", "seeds"}, {"seeds", t.seeds}}.dump() << '\n';
  for (const auto& [key, rows] : t.cells) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      json line = metrics_json(rows[i]);
      line["type"] = "cell";
      line["seed_index"] = i;
      line["family"] = to_string(key.family);
      line["source"] = key.source;
      line["strategy"] = to_string(key.strategy);
      line["test_set"] = key.test_set;
      out << line.dump() << '\n';
    }
  }
  for (const auto& [key, curve] : t.calibration) {
    json bins = json::array();
    for (const auto& b : curve.bins) {
      json jb{{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}};
      if (b.mean_pred) jb["mean_pred"] = *b.mean_pred;
      if (b.obs_frac) jb["obs_frac"] = *b.obs_frac;
      bins.push_back(jb);
    }
    out << json{{"type", "calibration"},   {"family", to_string(key.family)},
                {"strategy", to_string(key.strategy)}, {"source", key.source},
                {"ece", curve.ece},          {"bins", bins}}
               .dump()
        << '\n';
  }
  for (const auto& f : t.failures) {
    out << json{{"type", "failure"},          {"seed", f.seed},
                {"family", to_string(f.key.family)}, {"source", f.key.source},
                {"strategy", to_string(f.key.strategy)}, {"test_set", f.key.test_set},
                {"reason", f.reason}}
               .dump()
        << '\n';
  }
  const auto path = dir / "results.jsonl";
  write_text_file(path, out.str());
  return path;
}

ReportTable load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  ReportTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "seeds") {
        t.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
      } else if (type == "cell") {
        CellKey key{parse_family(j.at("family").get<std::string>()),
                    j.at("source").get<std::string>(),
                    parse_strategy(j.at("strategy").get<std::string>()),
                    j.at("test_set").get<std::string>()};
        t.cells[key].push_back(metrics_from_json(j));
      } else if (type == "calibration") {
        CalibrationCurve c;
        c.ece = j.at("ece").get<double>();
        for (const auto& jb : j.at("bins")) {
          CalibrationBin b;
          b.lo = jb.at("lo").get<double>();
          b.hi = jb.at("hi").get<double>();
          b.count = jb.at("count").get<std::size_t>();
          if (jb.contains("mean_pred")) b.mean_pred = jb.at("mean_pred").get<double>();
          if (jb.contains("obs_frac")) b.obs_frac = jb.at("obs_frac").get<double>();
          c.bins.push_back(b);
        }
        t.calibration[CalibrationKey{parse_family(j.at("family").get<std::string>()),
                                     parse_strategy(j.at("strategy").get<std::string>()),
                                     j.at("source").get<std::string>()}] = c;
      } else if (type == "failure") {
        t.failures.push_back({j.at("seed").get<std::uint64_t>(),
                              CellKey{parse_family(j.at("family").get<std::string>()),
                                      j.at("source").get<std::string>(),
                                      parse_strategy(j.at("strategy").get<std::string>()),
                                      j.at("test_set").get<std::string>()},
                              j.at("reason").get<std::string>()});
      } else {
        throw ValidationError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Published reference values

namespace {

struct RefRow {
  const char* source;
  Strategy strategy;
  MetricsRow row;
};

// Global test set: AUC, F1, precision, recall.
constexpr Strategy N = Strategy::kNone;
constexpr Strategy D = Strategy::kDownsample;

const std::vector<RefRow>& global_reference(ModelFamily f) {
  static const std::vector<RefRow> lr = {
      {"AB", N, {0.8702, 0.8194, 0.8856, 0.7625}}, {"AB", D, {0.8827, 0.7275, 0.6148, 0.8906}},
      {"BC", N, {0.8315, 0.7730, 0.8934, 0.6812}}, {"BC", D, {0.8806, 0.7296, 0.6225, 0.8812}},
      {"MB", N, {0.8579, 0.8125, 0.9140, 0.7312}}, {"MB", D, {0.8754, 0.7462, 0.6679, 0.8453}},
      {"NL", N, {0.8241, 0.7579, 0.8719, 0.6703}}, {"NL", D, {0.8702, 0.6937, 0.5668, 0.8937}},
      {"NS", N, {0.8696, 0.8092, 0.8541, 0.7687}}, {"NS", D, {0.8368, 0.6264, 0.4850, 0.8843}},
      {"ON", N, {0.8703, 0.8262, 0.9082, 0.7578}}, {"ON", D, {0.8878, 0.7729, 0.7043, 0.8562}},
      {"QC", N, {0.8728, 0.7276, 0.6317, 0.8578}}, {"QC", D, {0.8288, 0.6013, 0.4499, 0.9062}},
      {"CML", N, {0.8686, 0.8217, 0.8996, 0.7562}}, {"CML", D, {0.8909, 0.7657, 0.6817, 0.8734}},
      {"FL", N, {0.7388, 0.6211, 0.8075, 0.5046}}, {"FL", D, {0.8134, 0.6041, 0.4730, 0.8359}},
  };
  static const std::vector<RefRow> mlp = {
      {"AB", N, {0.8379, 0.7195, 0.6901, 0.7515}}, {"AB", D, {0.8411, 0.6527, 0.5285, 0.8531}},
      {"BC", N, {0.8167, 0.6942, 0.6812, 0.7078}}, {"BC", D, {0.8228, 0.6173, 0.4856, 0.8468}},
      {"MB", N, {0.8348, 0.7453, 0.7775, 0.7156}}, {"MB", D, {0.8371, 0.6540, 0.5371, 0.8359}},
      {"NL", N, {0.7250, 0.5786, 0.6807, 0.5031}}, {"NL", D, {0.7817, 0.5376, 0.3889, 0.8703}},
      {"NS", N, {0.8431, 0.7298, 0.7039, 0.7578}}, {"NS", D, {0.8102, 0.5897, 0.4502, 0.8546}},
      {"ON", N, {0.8568, 0.7827, 0.8166, 0.7515}}, {"ON", D, {0.8559, 0.6789, 0.5591, 0.8640}},
      {"QC", N, {0.8175, 0.6376, 0.5349, 0.7890}}, {"QC", D, {0.8038, 0.5777, 0.4359, 0.8562}},
      {"CML", N, {0.8499, 0.7759, 0.8205, 0.7359}}, {"CML", D, {0.8496, 0.6741, 0.5585, 0.8500}},
      {"FL", N, {0.8665, 0.8176, 0.8942, 0.7531}}, {"FL", D, {0.8808, 0.7380, 0.6399, 0.8718}},
  };
  return f == ModelFamily::kLogistic ? lr : mlp;
}

struct CrossRef {
  const char* source;
  Strategy strategy;
  // AUC, F1 for BC, MB, NS, QC.
  std::array<std::pair<double, double>, 4> values;
};

const std::vector<CrossRef>& cross_reference(ModelFamily f) {
  static const std::vector<CrossRef> lr = {
      {"AB", N, {{{0.7569, 0.6500}, {0.8786, 0.8318}, {0.9099, 0.8857}, {0.7500, 0.6667}}}},
      {"AB", D, {{{0.8078, 0.6667}, {0.8913, 0.7659}, {0.9060, 0.8045}, {0.7115, 0.6086}}}},
      {"ON", N, {{{0.7569, 0.6500}, {0.8786, 0.8318}, {0.8918, 0.8787}, {0.7692, 0.7000}}}},
      {"ON", D, {{{0.7800, 0.6521}, {0.8920, 0.7938}, {0.9103, 0.8292}, {0.7307, 0.6364}}}},
      {"CML", N, {{{0.7569, 0.6500}, {0.8786, 0.8318}, {0.8874, 0.8656}, {0.7692, 0.7000}}}},
      {"CML", D, {{{0.7800, 0.6521}, {0.8960, 0.7910}, {0.9104, 0.8139}, {0.7307, 0.6364}}}},
      {"FL", N, {{{0.6064, 0.3529}, {0.7786, 0.6930}, {0.7433, 0.6440}, {0.7307, 0.6315}}}},
      {"FL", D, {{{0.8101, 0.6428}, {0.8184, 0.6375}, {0.8432, 0.7096}, {0.7115, 0.6153}}}},
  };
  static const std::vector<CrossRef> mlp = {
      {"AB", N, {{{0.7569, 0.6500}, {0.8670, 0.7656}, {0.8608, 0.7654}, {0.6730, 0.5454}}}},
      {"AB", D, {{{0.8032, 0.6538}, {0.8485, 0.6887}, {0.8297, 0.6956}, {0.6153, 0.5000}}}},
      {"ON", N, {{{0.7685, 0.6511}, {0.8992, 0.8474}, {0.9011, 0.8421}, {0.8076, 0.7500}}}},
      {"ON", D, {{{0.8032, 0.6538}, {0.8764, 0.7412}, {0.8521, 0.7252}, {0.7500, 0.6667}}}},
      {"CML", N, {{{0.7361, 0.6153}, {0.8677, 0.7966}, {0.9099, 0.8857}, {0.7115, 0.6000}}}},
      {"CML", D, {{{0.7476, 0.5660}, {0.8800, 0.7284}, {0.8835, 0.7727}, {0.6153, 0.5161}}}},
      {"FL", N, {{{0.7569, 0.6500}, {0.8807, 0.8392}, {0.9144, 0.8985}, {0.7115, 0.6000}}}},
      {"FL", D, {{{0.7916, 0.6530}, {0.9126, 0.8088}, {0.8700, 0.7586}, {0.7115, 0.6086}}}},
  };
  return f == ModelFamily::kLogistic ? lr : mlp;
}

}  // namespace

std::optional<MetricsRow> published_reference(const CellKey& key) {
  if (key.test_set == kGlobalTest) {
    for (const auto& r : global_reference(key.family)) {
      if (key.source == r.source && key.strategy == r.strategy) return r.row;
    }
    return std::nullopt;
  }
  for (std::size_t i = 0; i < kCrossTestSets.size(); ++i) {
    if (key.test_set != to_string(kCrossTestSets[i])) continue;
    for (const auto& r : cross_reference(key.family)) {
      if (key.source == r.source && key.strategy == r.strategy) {
        MetricsRow m;
        m.auc = r.values[i].first;
        m.f1 = r.values[i].second;
        return m;
      }
    }
  }
  return std::nullopt;
}

}  // namespace fedprov
