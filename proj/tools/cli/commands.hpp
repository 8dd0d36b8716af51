#pragma once

#include "run_config.hpp"

#include "usdl/dataio.hpp"
#include "usdl/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace usdl::cli {

enum class Split { Train, Test, All };

Split parse_split(const std::string& text);

// Output files, relative to the command's output directory.
inline constexpr const char* kCheckpointFile = "checkpoint.txt";
inline constexpr const char* kTrainLogFile = "train_log.tsv";
inline constexpr const char* kConfigSnapshotFile = "config.json";
inline constexpr const char* kReportFile = "report.txt";
inline constexpr const char* kPredictionsFile = "predictions.tsv";
inline constexpr const char* kSegmentsFile = "segments.tsv";
inline constexpr const char* kScoresFile = "scores.tsv";
inline constexpr const char* kScatterFile = "scatter.tsv";
inline constexpr const char* kCsCurveFile = "cs_curve.tsv";
inline constexpr const char* kSegmentPlotFile = "segment_distributions.tsv";

/// Trains on the manifest's training split; writes the checkpoint, the
/// per-epoch loss log and the resolved config.
void cmd_train(const RunConfig& config, const std::filesystem::path& out_dir);

/// Scores one split with a checkpoint; writes the report, per-sample
/// predictions and (score-level pooling) per-segment distributions.
EvalReport cmd_eval(const RunConfig& config, const std::filesystem::path& checkpoint,
                    const std::filesystem::path& out_dir, Split split = Split::Test);

/// Predicts final scores for every sample of a features file.
void cmd_infer(const RunConfig& config, const std::filesystem::path& checkpoint,
               const std::filesystem::path& features_path, const std::filesystem::path& out_dir);

/// Turns an eval directory into scatter, CS-curve and segment plot tables.
void cmd_plot_data(const std::filesystem::path& report_dir, const std::filesystem::path& out_dir);

/// Writes manifest.txt, features.txt and annotations.csv for a synthetic set.
void cmd_synth(const SynthConfig& config, std::size_t train_count, const std::filesystem::path& out_dir);

/// Exit code for an exception escaping a command: 1 for validation
/// failures, 2 for runtime failures.
int exit_code_for(const std::exception& e);

/// Full command line entry point (argv[0] is the program name).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace usdl::cli
