#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "fgibbs/config.hpp"

namespace fgibbs {

/// Tri-state run outcome: threshold scans and ladder verdicts near the
/// transition can be honestly inconclusive without being errors.
enum class RunStatus { Success, Inconclusive, Error };

const char* to_string(RunStatus status);

/// Shell exit code mapping: 0 success, 2 inconclusive, 1 error.
int exit_code(RunStatus status);

struct OutputFile {
  std::string name;       // file name inside the output directory (no path)
  std::uint64_t bytes = 0;
  std::string checksum;   // FNV-1a 64 of the file content, 16 hex digits
};

/// Record of one run: status, a one-line note (verdict or error), and every
/// emitted file with its checksum. Serialized as manifest.json in the output
/// directory; the manifest lists every other file the run wrote.
struct RunManifest {
  ExperimentKind kind = ExperimentKind::GroundState;
  RunStatus status = RunStatus::Success;
  std::string note;
  std::string out_dir;
  std::string config_hash;
  std::vector<OutputFile> files;
  std::string manifest_path;
};

/// Output directory resolution: run.out when set, otherwise $FGIBBS_OUT (or
/// "runs") plus the experiment name.
std::string resolve_out_dir(const ExperimentConfig& config);

/// Dispatches the experiment, writes its CSV/JSON outputs and manifest.json
/// into the resolved output directory, and reports the outcome. Module
/// errors are captured in the manifest (status error, complete = false)
/// rather than thrown; only I/O failures on the manifest itself propagate.
/// For fixed (config, seed) every numeric output is byte-identical
/// regardless of run.workers. Nothing is written outside the directory.
RunManifest run_experiment(const ExperimentConfig& config);

}  // namespace fgibbs
