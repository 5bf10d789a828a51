#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "startomo/radon.hpp"
#include "startomo/star_body.hpp"
#include "startomo/trace.hpp"

namespace startomo {

inline constexpr const char* kToolVersion = "startomo 0.1.0";

const std::vector<std::string>& experiment_names();

/// Either a Gauss-Legendre lat-lon grid (n = 3) or mc_nodes uniform nodes.
struct GridSpec {
  int lat = 128;
  int lon = 256;
  int mc_nodes = 0;
};

struct ExperimentConfig {
  std::string experiment;
  int n = 3;
  int i = 1;
  BodySpec body = BallSpec{1.0};
  GridSpec grid;
  int subsphere_m = kDefaultSubsphereNodes;
  std::int64_t samples = 1000000;
  int blocks = 64;
  std::uint64_t seed = 1;
  int t_grid = 5;
  std::string out_dir = "runs";
  /// Unit symmetrization direction (css-run, css-monotone); e_n by default.
  Vec direction;
  int fiber_count = 128;
  /// Iteration budget (iterate-steiner: 50, iterate-intersection: 8).
  int steps = 0;
  /// Body list for the scans; empty means the default catalog for n.
  std::vector<BodySpec> bodies;
};

/// Schema violation at a JSON-pointer path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& message)
      : std::runtime_error(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
/// Parses JSON text; malformed JSON is reported at pointer "".
ExperimentConfig parse_config(const std::string& text);
inline ExperimentConfig parse_config(const char* text) { return parse_config(std::string(text)); }
/// Canonical form with every default filled in; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& cfg);

nlohmann::json body_to_json(const BodySpec& spec);
BodySpec body_from_json(const nlohmann::json& doc, const std::string& pointer, int n);

/// Catalog used by busemann-scan and fixed-point-scan when no list is given.
std::vector<BodySpec> default_catalog(int n);

/// Random smooth function on S^2: exp(a . u) plus a random cubic polynomial.
SphereFunction random_smooth_function(Rng& rng);

struct Contract {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  /// "<=" or ">=".
  std::string relation = "<=";
  bool passed = false;
};

Contract at_most(std::string name, double value, double bound);
Contract at_least(std::string name, double value, double bound);

struct ExperimentResult {
  FunctionalTrace trace;
  /// Trace columns drawn in the SVG plot.
  std::vector<std::string> plot_columns;
  nlohmann::json report;
  std::vector<Contract> contracts;

  bool passed() const;
};

/// Runs the computation of an experiment without touching the filesystem.
ExperimentResult evaluate_experiment(const ExperimentConfig& cfg);

struct ArtifactRecord {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  nlohmann::json config;
  std::string started;
  std::string finished;
  std::vector<ArtifactRecord> artifacts;
  std::string tool_version = kToolVersion;
  std::filesystem::path run_dir;
  bool passed = false;

  nlohmann::json to_json() const;
};

/// Evaluates the experiment and writes trace.csv, report.json, plot.svg (and
/// failure.json when a contract fails) plus manifest.json into
/// out_dir/{experiment}-{seed}-{timestamp}. out_dir is locked for the
/// duration of the run.
RunManifest run_experiment(const ExperimentConfig& cfg);

/// Checks that every artifact listed in a manifest exists and matches its
/// digest; the first problem found is stored in *problem.
bool verify_manifest(const std::filesystem::path& manifest_path, std::string* problem = nullptr);

std::string sha256_hex(const std::string& bytes);

/// Line plot of the given trace columns against the index.
std::string render_svg(const FunctionalTrace& trace, const std::vector<std::string>& columns, const std::string& title,
                       const std::string& timestamp);

/// Exclusive lock file inside a directory; throws LockError if held.
class LockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace startomo
