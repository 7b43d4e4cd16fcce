#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>

#include "cli_common.hpp"
#include "visensor/cascade.hpp"
#include "visensor/codec.hpp"
#include "visensor/error.hpp"
#include "visensor/eval.hpp"

using namespace visensor;

namespace {

std::string read_text(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

std::vector<CascadeModel> load_models(const std::vector<std::string>& paths) {
  std::vector<CascadeModel> models;
  for (const auto& p : paths) {
    models.push_back(load_cascade_file(p));
    const ValidationReport report = validate_cascade(models.back());
    for (const auto& issue : report) spdlog::warn("{}: {}: {}", p, issue.where, issue.message);
    if (!report.empty()) throw Error(ErrorCode::MalformedModel, p + " failed validation");
  }
  return models;
}

void print_matrix(const std::string& model, const ConfusionMatrix& m) {
  std::cout << model << ": TP " << m.tp << " (" << rate_or_na(m.tp, m.positives_total()) << ")  FN " << m.fn << " ("
            << rate_or_na(m.fn, m.positives_total()) << ")  TN " << m.tn << " ("
            << rate_or_na(m.tn, m.negatives_total()) << ")  FP " << m.fp << " ("
            << rate_or_na(m.fp, m.negatives_total()) << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Picture and sequence evaluation for cascade person detectors"};
  app.require_subcommand(1);

  std::vector<std::string> model_paths;
  std::string out_dir = "out";
  int threads = 1;
  cli::DetectorFlags detector;

  auto* phase1 = app.add_subcommand("phase1", "Per-picture confusion matrix");
  std::string pos_dir, neg_dir, overrides_path;
  phase1->add_option("--pos", pos_dir, "Pictures with people")->required()->check(CLI::ExistingDirectory);
  phase1->add_option("--neg", neg_dir, "Pictures without people")->required()->check(CLI::ExistingDirectory);
  phase1->add_option("--overrides", overrides_path, "path,reason lines forcing a negative")
      ->check(CLI::ExistingFile);

  auto* phase2 = app.add_subcommand("phase2", "Per-sequence confusion matrix and report");
  std::string sequences_dir, labels_path;
  int k = 1;
  phase2->add_option("--sequences", sequences_dir, "One subdirectory per sequence")->required()
      ->check(CLI::ExistingDirectory);
  phase2->add_option("--labels", labels_path, "name,yes|no lines")->required()->check(CLI::ExistingFile);
  phase2->add_option("--k", k, "Positive frames needed for a positive sequence")->check(CLI::PositiveNumber)
      ->capture_default_str();

  for (auto* sub : {phase1, phase2}) {
    sub->add_option("--model", model_paths, "Cascade file, repeatable")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Report directory")->capture_default_str();
    sub->add_option("--threads", threads, "Pictures evaluated in parallel")->check(CLI::PositiveNumber)
        ->capture_default_str();
    detector.add_to(*sub);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    EvalOptions options;
    options.detection = detector.config();
    options.threads = threads;
    const auto models = load_models(model_paths);

    if (*phase1) {
      options.annotate_dir = std::filesystem::path(out_dir) / "annotated";
      std::vector<OverrideEntry> overrides;
      if (!overrides_path.empty()) overrides = parse_overrides(read_text(overrides_path));
      const auto results = run_phase1(pos_dir, neg_dir, models, options, overrides);
      write_report(results, out_dir);
      for (const auto& r : results) {
        print_matrix(r.model, r.matrix);
        if (!r.skipped.empty()) spdlog::warn("{} pictures skipped as undecodable", r.skipped.size());
      }
    } else {
      options.policy.k = k;
      const auto result = run_phase2(sequences_dir, parse_labels(read_text(labels_path)), models, options);
      write_report(result, out_dir);
      for (std::size_t m = 0; m < result.models.size(); ++m) print_matrix(result.models[m], result.matrices[m]);
      if (!result.skipped.empty()) spdlog::warn("{} pictures or sequences skipped", result.skipped.size());
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
