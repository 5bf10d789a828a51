#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "startomo/experiments.hpp"

using nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitContract = 2;
constexpr int kExitConfig = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::int64_t> n;
  std::optional<std::int64_t> i;
  std::optional<std::int64_t> seed;
  std::optional<std::int64_t> samples;
  std::optional<std::string> out_dir;
};

void print_error(const std::string& kind, const std::string& pointer, const std::string& message) {
  std::cerr << json{{"error", kind}, {"pointer", pointer}, {"message", message}}.dump() << "\n";
}

json load_document(const std::string& experiment, const Overrides& o) {
  json doc = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw startomo::ConfigError("", "cannot open config file " + o.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      doc = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      throw startomo::ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw startomo::ConfigError("", "expected an object");
  }
  if (doc.contains("experiment") && doc["experiment"] != experiment) {
    throw startomo::ConfigError("/experiment", "config is for '" + doc["experiment"].dump() + "', not " + experiment);
  }
  doc["experiment"] = experiment;
  if (o.n) doc["n"] = *o.n;
  if (o.i) doc["i"] = *o.i;
  if (o.seed) doc["seed"] = *o.seed;
  if (o.samples) doc["samples"] = *o.samples;
  if (o.out_dir) doc["out_dir"] = *o.out_dir;
  return doc;
}

int run(const std::string& experiment, const Overrides& o) {
  startomo::ExperimentConfig cfg;
  try {
    cfg = startomo::parse_config(load_document(experiment, o));
  } catch (const startomo::ConfigError& e) {
    print_error("config", e.pointer(), e.what());
    return kExitConfig;
  }
  try {
    const startomo::RunManifest manifest = startomo::run_experiment(cfg);
    std::cout << (manifest.run_dir / "manifest.json").string() << "\n";
    if (!manifest.passed) {
      std::ifstream failure(manifest.run_dir / "failure.json");
      std::cerr << failure.rdbuf();
      return kExitContract;
    }
    return kExitPass;
  } catch (const startomo::LockError& e) {
    print_error("lock", "/out_dir", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    print_error("config", "", e.what());
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on star bodies, intersection bodies and Steiner symmetrization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", startomo::kToolVersion);

  Overrides overrides;
  std::string chosen;
  for (const std::string& name : startomo::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", overrides.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--n", overrides.n, "ambient dimension");
    sub->add_option("--i", overrides.i, "operator order");
    sub->add_option("--seed", overrides.seed, "random seed");
    sub->add_option("--samples", overrides.samples, "Monte Carlo samples");
    sub->add_option("--out-dir", overrides.out_dir, "output directory");
    sub->callback([&chosen, name] { chosen = name; });
  }
  std::string manifest_path;
  CLI::App* verify = app.add_subcommand("verify", "check the artifact digests of a manifest");
  verify->add_option("manifest", manifest_path, "path to manifest.json")->required();
  verify->callback([&chosen] { chosen = "verify"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (chosen == "verify") {
    std::string problem;
    if (startomo::verify_manifest(manifest_path, &problem)) {
      std::cout << "ok\n";
      return kExitPass;
    }
    std::cerr << problem << "\n";
    return kExitContract;
  }
  return run(chosen, overrides);
}
