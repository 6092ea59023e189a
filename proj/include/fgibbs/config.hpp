#pragma once
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fgibbs {

/// The seven experiment kinds the laboratory runs. Each kind owns a key
/// schema (see config_schema) and a pair of output files plus a manifest.
enum class ExperimentKind {
  GroundState,
  GnsVerify,
  Covariance,
  PartitionLadder,
  ThresholdScan,
  OuRates,
  DriftDivergence,
};

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);
std::vector<ExperimentKind> all_experiments();

/// Configuration problems (parse errors, unknown keys, precondition
/// violations) carry the offending key and line in the message.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One resolved key with provenance, recorded in the run manifest so a
/// reader can tell defaults from file values from command-line overrides.
struct ConfigEntry {
  std::string value;
  int line = 0;  // 1-based file line; 0 when not from the file
  enum class Source { Default, File, Flag } source = Source::Default;
};

const char* to_string(ConfigEntry::Source source);

/// Schema row: every key an experiment accepts, with its default (as text)
/// and a one-line description for the docs and error messages.
struct KeySpec {
  std::string key;
  std::string fallback;
  std::string help;
};

/// The full key table of one experiment kind.
const std::vector<KeySpec>& config_schema(ExperimentKind kind);

/// A validated flat key = value configuration: the experiment kind plus one
/// entry per schema key (defaults filled in). Typed getters parse on access
/// and fail with the key name and source line.
class ExperimentConfig {
 public:
  ExperimentKind kind = ExperimentKind::GroundState;
  std::map<std::string, ConfigEntry> entries;

  bool has(const std::string& key) const;
  const ConfigEntry& entry(const std::string& key) const;

  std::string gets(const std::string& key) const;
  int geti(const std::string& key) const;
  std::uint64_t getu(const std::string& key) const;
  double getd(const std::string& key) const;  // accepts "a/b" fractions
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  /// Sorted "key = value" lines, first line the experiment kind; the text
  /// that is hashed and embedded in the manifest.
  std::string canonical_text() const;
  /// FNV-1a 64 of canonical_text(), as 16 hex digits.
  std::string hash() const;
};

/// All-defaults configuration for a kind (already valid for every kind).
ExperimentConfig default_config(ExperimentKind kind);

/// Parses and validates a config file. The file must name the experiment
/// with an "experiment = <kind>" line.
ExperimentConfig load_config(const std::string& path);

/// Subcommand form: the kind is supplied by the caller; the file's
/// "experiment" line is optional but must agree when present.
ExperimentConfig load_config(const std::string& path, ExperimentKind kind);

/// Parses config text (for tests and embedding); path is used in messages.
ExperimentConfig parse_config_text(const std::string& text, const std::string& path,
                                   const ExperimentKind* expected_kind);

/// Sets one key from a command-line flag and re-validates. Unknown keys are
/// rejected against the kind's schema, same as in files.
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Checks every parameter against the owning module's preconditions; throws
/// ConfigError naming the key (and line, when it came from a file). Called
/// by load_config and apply_override; idempotent.
void validate_config(const ExperimentConfig& config);

/// FNV-1a 64-bit hash, used for the config identity and output checksums.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace fgibbs
