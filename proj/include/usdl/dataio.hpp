#pragma once

#include "usdl/multipath.hpp"
#include "usdl/nethead.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace usdl {

struct SampleRecord {
    std::string id;
    FeatureMatrix features;
    double final_score;  // raw units
    std::optional<JudgePanel> judge_panel;
    std::optional<std::string> action_class;
};

/// Judge scores run from min to max in multiples of step.
struct JudgeRange {
    double min = 0.0;
    double max = 10.0;
    double step = 0.5;

    friend bool operator==(const JudgeRange&, const JudgeRange&) = default;
};

struct DatasetManifest {
    std::string name;
    double score_min = 0.0;
    double score_max = 100.0;
    std::size_t judge_count = 0;
    JudgeRange judge_range;
    FusionRule fusion_rule;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;

    void validate() const;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<SampleRecord> records;  // sorted by id

    /// Records whose ids are listed, in id order.
    std::vector<SampleRecord> subset(const std::vector<std::string>& ids) const;
    std::vector<SampleRecord> train() const { return subset(manifest.train_ids); }
    std::vector<SampleRecord> test() const { return subset(manifest.test_ids); }
};

// Score normalization ---------------------------------------------------------

/// Linear map of [s_min, s_max] onto [0, 100].
double normalize_final(double s, double s_min, double s_max);
double denormalize_final(double normalized, double s_min, double s_max);

/// Doubles a half-point judge score into an integer bin label.
int normalize_judge(double s);

// Segment schedules -----------------------------------------------------------

enum class SegmentStrategy { Seg6, Seg10S1, Seg10S2 };

std::string to_string(SegmentStrategy strategy);
SegmentStrategy parse_segment_strategy(const std::string& text);

/// Start frame of every clip. Seg10S1 uses stride floor(len / 10), Seg10S2
/// spreads starts evenly over [0, len - clip], Seg6 uses stride
/// min(clip, floor(len / 6)); starts never exceed len - clip.
std::vector<int> segment_indices(SegmentStrategy strategy, int video_len, int clip_len = 16);

// File formats ----------------------------------------------------------------
//
// Manifest: "key = value" lines, '#' comments. Keys: name, score_min,
//   score_max, judge_count, judge_min, judge_max, judge_step, drop_low,
//   drop_high, multiplier (ground_truth_dd | predicted_dd | none),
//   train_ids, test_ids (comma-separated).
// Annotations: comma-separated with a header row. Required columns id and
//   final_score; optional dd and action; judge columns judge_1..judge_K.
//   Empty dd / action cells mean "absent".
// Features: one line per sample, whitespace-separated:
//   <id> <N> <D> <N*D reals, row-major by segment>
//   Lines starting with '#' are comments.

DatasetManifest read_manifest(std::istream& is);
void write_manifest(std::ostream& os, const DatasetManifest& manifest);

std::map<std::string, FeatureMatrix> read_features(std::istream& is);
void write_features(std::ostream& os, const std::vector<SampleRecord>& records);

struct AnnotationRow {
    std::string id;
    double final_score;
    std::optional<JudgePanel> judge_panel;
    std::optional<std::string> action_class;
};

std::vector<AnnotationRow> read_annotations(std::istream& is);
void write_annotations(std::ostream& os, const std::vector<SampleRecord>& records);

/// Loads and validates a dataset. Records come back sorted by id. Panels whose
/// fused score disagrees with final_score by more than 1e-6 trigger a warning.
Dataset load_dataset(const std::filesystem::path& manifest_path, const std::filesystem::path& features_path,
                     const std::filesystem::path& annotations_path);

/// Loads only a features file (for inference on unlabeled data).
std::map<std::string, FeatureMatrix> load_features(const std::filesystem::path& path);

void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& features_path, const std::filesystem::path& annotations_path);

// Synthetic data --------------------------------------------------------------

struct SynthConfig {
    std::uint64_t seed = 0;
    std::size_t n_samples = 100;
    std::size_t feature_dim = 16;
    std::size_t n_segments = 10;
    std::size_t judge_count = 7;
    FusionRule rule = FusionRule::diving();
    double noise_std = 0.25;
    JudgeRange judge_range;
    std::vector<double> dd_set{2.0, 2.4, 2.8, 3.2, 3.6, 3.8};
    double feature_noise = 0.05;

    void validate() const;
};

/// Judged dataset with a known latent quality per sample. Judges add seeded
/// noise to the latent quality and round to the judge grid; features embed
/// (quality, DD, sorted judge deviations) through a fixed seeded linear map
/// with per-segment noise. Final scores are fused from the panel, so every
/// record is internally consistent. With judge_count = 0 the final score is
/// the latent quality itself and no panel is attached.
std::vector<SampleRecord> synth_dataset(const SynthConfig& config);

/// Manifest covering a synthetic set; the first `train_count` records (in id
/// order) form the training split and the rest the test split.
DatasetManifest synth_manifest(const SynthConfig& config, const std::vector<SampleRecord>& records,
                               std::size_t train_count, const std::string& name = "synthetic");

}  // namespace usdl
