#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "visensor/cascade.hpp"
#include "visensor/detector.hpp"
#include "visensor/sequence.hpp"

namespace visensor {

enum class Outcome { TP, FP, TN, FN };

std::string_view to_string(Outcome o) noexcept;
Outcome outcome_of(bool has_people, bool detected) noexcept;

struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t positives_total() const noexcept { return tp + fn; }
  std::int64_t negatives_total() const noexcept { return tn + fp; }
  void add(Outcome o) noexcept;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// format_percent, or "n/a" for a zero denominator.
std::string rate_or_na(std::int64_t numerator, std::int64_t denominator);

struct OverrideEntry {
  std::string path;
  std::string reason;
};

// One "path,reason" line per entry; blank lines and '#' comments skipped.
// Throws InvalidArgument on a line without a path.
std::vector<OverrideEntry> parse_overrides(std::string_view text);

// One "name,yes|no" line per sequence. Throws InvalidArgument on malformed
// lines or a name listed twice.
std::map<std::string, bool> parse_labels(std::string_view text);

struct EvalOptions {
  DetectionConfig detection;
  AggregationPolicy policy;
  // Annotated PPM copies of detector-positive pictures go here when set.
  std::optional<std::filesystem::path> annotate_dir;
  int threads = 1;
};

struct PictureResult {
  std::string path;
  bool has_people = false;
  bool detected = false;  // raw detector verdict
  bool overridden = false;
  Outcome outcome = Outcome::TN;
  std::vector<Detection> detections;
};

struct Phase1Result {
  std::string model;
  ConfusionMatrix matrix;
  std::vector<PictureResult> pictures;  // sorted by path
  std::vector<std::string> skipped;     // undecodable pictures
};

// Pictures are the regular files directly inside each directory. Override
// entries force a negative verdict; each must name an evaluated picture
// (InvalidOverride otherwise). Throws EmptyCorpus when a directory holds no
// pictures.
std::vector<Phase1Result> run_phase1(const std::filesystem::path& pos_dir, const std::filesystem::path& neg_dir,
                                     std::span<const CascadeModel> models, const EvalOptions& options,
                                     std::span<const OverrideEntry> overrides = {});

struct SequenceVerdict {
  int identified = 0;
  std::string detection_pct;
  Outcome result = Outcome::TN;
};

struct SequenceReportRow {
  std::string name;
  bool has_people = false;
  int total_pictures = 0;
  std::vector<SequenceVerdict> per_model;  // same order as the models
};

struct Phase2Result {
  std::vector<std::string> models;
  std::vector<ConfusionMatrix> matrices;
  std::vector<SequenceReportRow> rows;  // sorted by name
  std::vector<std::string> skipped;
};

// Each subdirectory of sequences_dir is one sequence. Throws EmptyCorpus
// when there are none, MissingLabel when one has no label.
Phase2Result run_phase2(const std::filesystem::path& sequences_dir, const std::map<std::string, bool>& labels,
                        std::span<const CascadeModel> models, const EvalOptions& options);

// CSV text. Matrix columns: model,tp,fp,tn,fn,tp_pct,fp_pct,tn_pct,fn_pct.
// Row columns: name,has_people,total_pictures then identified,detection_pct,
// result per model (prefixed "<model>_" when there is more than one model).
std::string matrix_csv(std::span<const std::string> models, std::span<const ConfusionMatrix> matrices);
std::string rows_csv(std::span<const std::string> models, std::vector<SequenceReportRow> rows);

// Writes phase1_matrix.csv, or phase2_matrix.csv and phase2_sequences.csv,
// into out_dir. Throws StorageFailure.
void write_report(const std::vector<Phase1Result>& results, const std::filesystem::path& out_dir);
void write_report(const Phase2Result& result, const std::filesystem::path& out_dir);

}  // namespace visensor
