#include "fedprov/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace fedprov {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, std::string_view where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string(where) + "." + key + ": wrong type");
  }
}

std::size_t feature_index(const std::string& name) {
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (kFeatureNames[f] == name) return f;
  }
  throw ValidationError("unknown feature '" + name + "'");
}

Distribution parse_distribution(const std::string& s) {
  if (s == "normal") return Distribution::kNormal;
  if (s == "lognormal") return Distribution::kLogNormal;
  throw ValidationError("unknown distribution '" + s + "' (expected normal or lognormal)");
}

void apply_generator(const json& j, GeneratorConfig& g) {
  check_keys(j, "generator", {"features", "missingness", "provinces", "risk", "total_patients"});
  if (j.contains("features")) {
    const json& fj = j.at("features");
    if (!fj.is_object()) throw ValidationError("generator.features: expected an object");
    for (const auto& [name, spec] : fj.items()) {
      const std::size_t f = feature_index(name);
      const std::string where = "generator.features." + name;
      if (is_continuous(f)) {
        check_keys(spec, where, {"distribution", "mean", "std", "lo", "hi"});
        auto& c = g.features.continuous[f];
        if (spec.contains("distribution")) {
          std::string d;
          read(spec, "distribution", d, where);
          c.family = parse_distribution(d);
        }
        read(spec, "mean", c.mean, where);
        read(spec, "std", c.std, where);
        read(spec, "lo", c.lo, where);
        read(spec, "hi", c.hi, where);
      } else {
        check_keys(spec, where, {"positive_rate"});
        read(spec, "positive_rate", g.features.positive_rate[f], where);
      }
    }
  }
  if (j.contains("missingness")) {
    const json& mj = j.at("missingness");
    if (!mj.is_object()) throw ValidationError("generator.missingness: expected an object");
    for (const auto& [name, rate] : mj.items()) {
      if (!rate.is_number()) throw ValidationError("generator.missingness." + name + ": expected a number");
      g.missingness.rate[feature_index(name)] = rate.get<double>();
    }
  }
  if (j.contains("provinces")) {
    const json& pj = j.at("provinces");
    if (!pj.is_array()) throw ValidationError("generator.provinces: expected an array");
    g.provinces.clear();
    for (const auto& p : pj) {
      check_keys(p, "generator.provinces[]", {"code", "n_patients", "positive_rate"});
      ProvinceProfile prof;
      std::string code;
      read(p, "code", code, "generator.provinces[]");
      prof.province = parse_province(code);
      read(p, "n_patients", prof.n_patients, "generator.provinces[]");
      read(p, "positive_rate", prof.target_positive_rate, "generator.provinces[]");
      g.provinces.push_back(prof);
    }
  }
  if (j.contains("risk")) {
    const json& rj = j.at("risk");
    check_keys(rj, "generator.risk", {"intercept", "coefficients"});
    read(rj, "intercept", g.risk.intercept, "generator.risk");
    if (rj.contains("coefficients")) {
      const json& cj = rj.at("coefficients");
      if (!cj.is_object()) throw ValidationError("generator.risk.coefficients: expected an object");
      g.risk.coefficients.fill(0.0);
      for (const auto& [name, v] : cj.items()) {
        if (!v.is_number()) throw ValidationError("generator.risk.coefficients." + name + ": expected a number");
        g.risk.coefficients[feature_index(name)] = v.get<double>();
      }
    }
  }
  if (j.contains("total_patients")) {
    std::size_t total = 0;
    read(j, "total_patients", total, "generator");
    if (total == 0) throw ValidationError("generator.total_patients must be > 0");
    g = scaled_to(g, total);
  }
}

void apply_train(const json& j, TrainConfig& t, std::string_view where) {
  check_keys(j, where,
             {"learning_rate", "l2_alpha", "l1_c", "batch_size", "epochs", "beta1", "beta2",
              "epsilon", "early_stop", "tolerance", "patience", "hidden"});
  read(j, "learning_rate", t.learning_rate, where);
  read(j, "l2_alpha", t.l2_alpha, where);
  read(j, "l1_c", t.l1_c, where);
  read(j, "batch_size", t.batch_size, where);
  read(j, "epochs", t.epochs, where);
  read(j, "beta1", t.beta1, where);
  read(j, "beta2", t.beta2, where);
  read(j, "epsilon", t.epsilon, where);
  read(j, "early_stop", t.early_stop, where);
  read(j, "tolerance", t.tolerance, where);
  read(j, "patience", t.patience, where);
  read(j, "hidden", t.hidden, where);
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json train_json(const TrainConfig& t) {
  return json{{"learning_rate", t.learning_rate}, {"l2_alpha", t.l2_alpha},
              {"l1_c", t.l1_c},                   {"batch_size", t.batch_size},
              {"epochs", t.epochs},               {"beta1", t.beta1},
              {"beta2", t.beta2},                 {"epsilon", t.epsilon},
              {"early_stop", t.early_stop},       {"tolerance", t.tolerance},
              {"patience", t.patience},           {"hidden", t.hidden}};
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  const json j = parse_json(json_text);
  ExperimentConfig cfg;
  check_keys(j, "config",
             {"seeds", "split_fraction", "families", "strategies", "include_local", "jobs",
              "calibration_bins", "output_dir", "mice", "train", "fed", "generator"});
  read(j, "seeds", cfg.seeds, "config");
  read(j, "split_fraction", cfg.split_fraction, "config");
  read(j, "include_local", cfg.include_local, "config");
  read(j, "jobs", cfg.jobs, "config");
  read(j, "calibration_bins", cfg.calibration_bins, "config");
  if (j.contains("output_dir")) {
    std::string dir;
    read(j, "output_dir", dir, "config");
    cfg.output_dir = dir;
  }
  if (j.contains("families")) {
    std::vector<std::string> names;
    read(j, "families", names, "config");
    cfg.families.clear();
    for (const auto& n : names) cfg.families.push_back(parse_family(n));
  }
  if (j.contains("strategies")) {
    std::vector<std::string> names;
    read(j, "strategies", names, "config");
    cfg.strategies.clear();
    for (const auto& n : names) cfg.strategies.push_back(parse_strategy(n));
  }
  if (j.contains("mice")) {
    const json& m = j.at("mice");
    check_keys(m, "mice", {"iterations", "noise"});
    read(m, "iterations", cfg.mice.n_iterations, "mice");
    read(m, "noise", cfg.mice.noise, "mice");
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train", {"lr", "mlp"});
    if (t.contains("lr")) apply_train(t.at("lr"), cfg.train[ModelFamily::kLogistic], "train.lr");
    if (t.contains("mlp")) apply_train(t.at("mlp"), cfg.train[ModelFamily::kMlp], "train.mlp");
  }
  if (j.contains("fed")) {
    const json& f = j.at("fed");
    check_keys(f, "fed",
               {"participants", "rounds", "local_epochs", "eval_interval", "plateau_stop",
                "plateau_delta", "plateau_window", "parallel"});
    read(f, "participants", cfg.fed.participants, "fed");
    read(f, "rounds", cfg.fed.rounds, "fed");
    read(f, "local_epochs", cfg.fed.local_epochs, "fed");
    read(f, "eval_interval", cfg.fed.eval_interval, "fed");
    read(f, "plateau_stop", cfg.fed.plateau_stop, "fed");
    read(f, "plateau_delta", cfg.fed.plateau_delta, "fed");
    read(f, "plateau_window", cfg.fed.plateau_window, "fed");
    read(f, "parallel", cfg.fed.parallel, "fed");
  }
  if (j.contains("generator")) apply_generator(j.at("generator"), cfg.generator);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(slurp(path));
}

GeneratorConfig parse_generator_config(std::string_view json_text) {
  const json j = parse_json(json_text);
  GeneratorConfig g = default_generator_config();
  if (j.is_object() && j.contains("generator")) {
    apply_generator(j.at("generator"), g);
  } else {
    apply_generator(j, g);
  }
  validate(g);
  return g;
}

GeneratorConfig load_generator_config(const std::filesystem::path& path) {
  return parse_generator_config(slurp(path));
}

std::string to_json_string(const ExperimentConfig& cfg) {
  json j;
  j["seeds"] = cfg.seeds;
  j["split_fraction"] = cfg.split_fraction;
  j["include_local"] = cfg.include_local;
  j["jobs"] = cfg.jobs;
  j["calibration_bins"] = cfg.calibration_bins;
  j["output_dir"] = cfg.output_dir.string();
  j["families"] = json::array();
  for (auto f : cfg.families) j["families"].push_back(to_string(f));
  j["strategies"] = json::array();
  for (auto s : cfg.strategies) j["strategies"].push_back(to_string(s));
  j["mice"] = {{"iterations", cfg.mice.n_iterations}, {"noise", cfg.mice.noise}};
  j["train"] = {{"lr", train_json(cfg.train.at(ModelFamily::kLogistic))},
                {"mlp", train_json(cfg.train.at(ModelFamily::kMlp))}};
  j["fed"] = {{"participants", cfg.fed.participants},
              {"rounds", cfg.fed.rounds},
              {"local_epochs", cfg.fed.local_epochs},
              {"eval_interval", cfg.fed.eval_interval},
              {"plateau_stop", cfg.fed.plateau_stop},
              {"plateau_delta", cfg.fed.plateau_delta},
              {"plateau_window", cfg.fed.plateau_window},
              {"parallel", cfg.fed.parallel}};
  const GeneratorConfig& g = cfg.generator;
  json features = json::object();
  json missing = json::object();
  json coefs = json::object();
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const std::string name(kFeatureNames[f]);
    if (is_continuous(f)) {
      const auto& c = g.features.continuous[f];
      features[name] = {{"distribution", c.family == Distribution::kNormal ? "normal" : "lognormal"},
                        {"mean", c.mean}, {"std", c.std}, {"lo", c.lo}, {"hi", c.hi}};
    } else {
      features[name] = {{"positive_rate", g.features.positive_rate[f]}};
    }
    if (is_optional(f)) missing[name] = g.missingness.rate[f];
    if (g.risk.coefficients[f] != 0.0) coefs[name] = g.risk.coefficients[f];
  }
  json provinces = json::array();
  for (const auto& p : g.provinces) {
    provinces.push_back({{"code", to_string(p.province)},
                         {"n_patients", p.n_patients},
                         {"positive_rate", p.target_positive_rate}});
  }
  j["generator"] = {{"features", features},
                    {"missingness", missing},
                    {"provinces", provinces},
                    {"risk", {{"intercept", g.risk.intercept}, {"coefficients", coefs}}}};
  return j.dump(2) + "\n";
}

}  // namespace fedprov
