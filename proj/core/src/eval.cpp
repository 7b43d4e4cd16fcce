#include "visensor/eval.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include "visensor/codec.hpp"
#include "visensor/error.hpp"
#include "visensor/percent.hpp"

namespace visensor {

namespace fs = std::filesystem;

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::TP: return "TP";
    case Outcome::FP: return "FP";
    case Outcome::TN: return "TN";
    case Outcome::FN: return "FN";
  }
  return "TN";
}

Outcome outcome_of(bool has_people, bool detected) noexcept {
  if (has_people) return detected ? Outcome::TP : Outcome::FN;
  return detected ? Outcome::FP : Outcome::TN;
}

void ConfusionMatrix::add(Outcome o) noexcept {
  switch (o) {
    case Outcome::TP: ++tp; break;
    case Outcome::FP: ++fp; break;
    case Outcome::TN: ++tn; break;
    case Outcome::FN: ++fn; break;
  }
}

std::string rate_or_na(std::int64_t numerator, std::int64_t denominator) {
  return denominator == 0 ? "n/a" : format_percent(numerator, denominator);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn fn) {
  int lineno = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    fn(line, lineno);
  }
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<fs::path> list_pictures(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::InvalidArgument, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string path_key(const fs::path& p) {
  std::error_code ec;
  fs::path canonical = fs::weakly_canonical(p, ec);
  return (ec ? fs::absolute(p) : canonical).lexically_normal().string();
}

bool safe_detect(const GrayImage& img, const CascadeModel& model, const DetectionConfig& cfg,
                 std::vector<Detection>* detections) {
  try {
    DetectionResult r = detect(img, model, cfg);
    if (detections) *detections = std::move(r.detections);
    return r.person_found;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ImageTooSmall) throw;
    return false;
  }
}

struct Decoded {
  std::optional<DecodedRaster> raster;
  GrayImage gray;
};

std::optional<Decoded> decode_picture(const fs::path& path) {
  try {
    const auto bytes = read_file_bytes(path.string());
    Decoded d;
    d.raster = decode_raster(bytes);
    d.gray = std::visit(
        [](const auto& img) -> GrayImage {
          if constexpr (std::is_same_v<std::decay_t<decltype(img)>, GrayImage>) {
            return img;
          } else {
            return to_grayscale(img);
          }
        },
        *d.raster);
    return d;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::CorruptImage && e.code() != ErrorCode::UnsupportedMedia) throw;
    spdlog::warn("skipping {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void write_annotated(const fs::path& out, const DecodedRaster& raster, const std::vector<Detection>& detections) {
  std::vector<Rect> rects;
  for (const auto& d : detections) rects.push_back(d.rect);
  const ColorImage marked = std::visit([&](const auto& img) { return annotate(img, rects); }, raster);
  std::error_code ec;
  fs::create_directories(out.parent_path(), ec);
  if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + out.parent_path().string());
  write_file_bytes(out.string(), encode_ppm(marked));
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path.string(), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

std::vector<OverrideEntry> parse_overrides(std::string_view text) {
  std::vector<OverrideEntry> out;
  for_each_line(text, [&](std::string_view line, int lineno) {
    const std::size_t comma = line.find(',');
    const std::string_view path = trim(line.substr(0, comma));
    if (path.empty()) throw Error(ErrorCode::InvalidArgument, "overrides line " + std::to_string(lineno) + ": no path");
    out.push_back({std::string(path), comma == std::string_view::npos ? "" : std::string(trim(line.substr(comma + 1)))});
  });
  return out;
}

std::map<std::string, bool> parse_labels(std::string_view text) {
  std::map<std::string, bool> out;
  for_each_line(text, [&](std::string_view line, int lineno) {
    const std::size_t comma = line.rfind(',');
    const std::string where = "labels line " + std::to_string(lineno);
    if (comma == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, where + ": expected name,yes|no");
    const std::string name(trim(line.substr(0, comma)));
    const std::string_view value = trim(line.substr(comma + 1));
    if (name.empty()) throw Error(ErrorCode::InvalidArgument, where + ": empty name");
    bool has_people = false;
    if (value == "yes") {
      has_people = true;
    } else if (value != "no") {
      throw Error(ErrorCode::InvalidArgument, where + ": label must be yes or no");
    }
    if (!out.emplace(name, has_people).second) throw Error(ErrorCode::InvalidArgument, where + ": duplicate " + name);
  });
  return out;
}

std::vector<Phase1Result> run_phase1(const fs::path& pos_dir, const fs::path& neg_dir,
                                     std::span<const CascadeModel> models, const EvalOptions& options,
                                     std::span<const OverrideEntry> overrides) {
  validate_config(options.detection);
  if (models.empty()) throw Error(ErrorCode::InvalidArgument, "no model given");

  struct Item {
    fs::path path;
    bool has_people;
  };
  std::vector<Item> items;
  for (const auto& [dir, label] : {std::pair{pos_dir, true}, std::pair{neg_dir, false}}) {
    const auto pictures = list_pictures(dir);
    if (pictures.empty()) throw Error(ErrorCode::EmptyCorpus, "no pictures in " + dir.string());
    for (const auto& p : pictures) items.push_back({p, label});
  }

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < items.size(); ++i) index.emplace(path_key(items[i].path), i);
  std::set<std::size_t> forced;
  for (const auto& o : overrides) {
    auto it = index.find(path_key(o.path));
    if (it == index.end()) throw Error(ErrorCode::InvalidOverride, "override names no evaluated picture: " + o.path);
    forced.insert(it->second);
  }

  // verdicts[i][m]; nullopt marks an undecodable picture.
  std::vector<std::optional<std::vector<PictureResult>>> verdicts(items.size());
  parallel_for(items.size(), options.threads, [&](std::size_t i) {
    const auto decoded = decode_picture(items[i].path);
    if (!decoded) return;
    std::vector<PictureResult> per_model;
    for (const auto& model : models) {
      PictureResult r;
      r.path = items[i].path.string();
      r.has_people = items[i].has_people;
      r.detected = safe_detect(decoded->gray, model, options.detection, &r.detections);
      r.overridden = forced.contains(i);
      r.outcome = outcome_of(r.has_people, r.detected && !r.overridden);
      if (r.detected && options.annotate_dir) {
        const fs::path out = *options.annotate_dir / model.name / (r.has_people ? "pos" : "neg") /
                             (items[i].path.filename().string() + ".ppm");
        write_annotated(out, *decoded->raster, r.detections);
      }
      per_model.push_back(std::move(r));
    }
    verdicts[i] = std::move(per_model);
  });

  std::vector<Phase1Result> results(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) results[m].model = models[m].name;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t m = 0; m < models.size(); ++m) {
      if (!verdicts[i]) {
        results[m].skipped.push_back(items[i].path.string());
        continue;
      }
      results[m].matrix.add((*verdicts[i])[m].outcome);
      results[m].pictures.push_back(std::move((*verdicts[i])[m]));
    }
  }
  for (auto& r : results) {
    std::sort(r.pictures.begin(), r.pictures.end(),
              [](const PictureResult& a, const PictureResult& b) { return a.path < b.path; });
  }
  return results;
}

Phase2Result run_phase2(const fs::path& sequences_dir, const std::map<std::string, bool>& labels,
                        std::span<const CascadeModel> models, const EvalOptions& options) {
  validate_config(options.detection);
  if (models.empty()) throw Error(ErrorCode::InvalidArgument, "no model given");
  if (options.policy.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  std::error_code ec;
  if (!fs::is_directory(sequences_dir, ec)) {
    throw Error(ErrorCode::InvalidArgument, "not a directory: " + sequences_dir.string());
  }

  std::vector<fs::path> sequences;
  for (const auto& entry : fs::directory_iterator(sequences_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && !name.empty() && name.front() != '.') sequences.push_back(entry.path());
  }
  std::sort(sequences.begin(), sequences.end());
  if (sequences.empty()) throw Error(ErrorCode::EmptyCorpus, "no sequences in " + sequences_dir.string());
  for (const auto& s : sequences) {
    if (!labels.contains(s.filename().string())) {
      throw Error(ErrorCode::MissingLabel, "no label for sequence " + s.filename().string());
    }
  }

  struct Frame {
    std::size_t sequence;
    fs::path path;
  };
  std::vector<Frame> frames;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (const auto& p : list_pictures(sequences[s])) frames.push_back({s, p});
  }

  // positive[f][m]; nullopt for undecodable frames.
  std::vector<std::optional<std::vector<char>>> positive(frames.size());
  parallel_for(frames.size(), options.threads, [&](std::size_t f) {
    const auto decoded = decode_picture(frames[f].path);
    if (!decoded) return;
    std::vector<char> per_model;
    for (const auto& model : models) per_model.push_back(safe_detect(decoded->gray, model, options.detection, nullptr));
    positive[f] = std::move(per_model);
  });

  Phase2Result result;
  for (const auto& m : models) result.models.push_back(m.name);
  result.matrices.resize(models.size());

  std::vector<std::vector<std::vector<bool>>> flags(sequences.size(), std::vector<std::vector<bool>>(models.size()));
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (!positive[f]) {
      result.skipped.push_back(frames[f].path.string());
      continue;
    }
    for (std::size_t m = 0; m < models.size(); ++m) flags[frames[f].sequence][m].push_back((*positive[f])[m] != 0);
  }

  for (std::size_t s = 0; s < sequences.size(); ++s) {
    SequenceReportRow row;
    row.name = sequences[s].filename().string();
    row.has_people = labels.at(row.name);
    row.total_pictures = static_cast<int>(flags[s][0].size());
    if (row.total_pictures == 0) {
      spdlog::warn("skipping sequence {}: no decodable pictures", row.name);
      result.skipped.push_back(sequences[s].string());
      continue;
    }
    for (std::size_t m = 0; m < models.size(); ++m) {
      const auto& v = flags[s][m];
      std::unique_ptr<bool[]> buf(new bool[v.size()]);
      std::copy(v.begin(), v.end(), buf.get());
      SequenceVerdict verdict;
      verdict.identified = static_cast<int>(std::count(v.begin(), v.end(), true));
      verdict.detection_pct = format_percent(verdict.identified, row.total_pictures);
      verdict.result =
          outcome_of(row.has_people, classify_sequence(std::span<const bool>(buf.get(), v.size()), options.policy));
      result.matrices[m].add(verdict.result);
      row.per_model.push_back(std::move(verdict));
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string matrix_csv(std::span<const std::string> models, std::span<const ConfusionMatrix> matrices) {
  std::ostringstream out;
  out << "model,tp,fp,tn,fn,tp_pct,fp_pct,tn_pct,fn_pct\n";
  for (std::size_t i = 0; i < models.size() && i < matrices.size(); ++i) {
    const auto& m = matrices[i];
    out << csv_field(models[i]) << ',' << m.tp << ',' << m.fp << ',' << m.tn << ',' << m.fn << ','
        << rate_or_na(m.tp, m.positives_total()) << ',' << rate_or_na(m.fp, m.negatives_total()) << ','
        << rate_or_na(m.tn, m.negatives_total()) << ',' << rate_or_na(m.fn, m.positives_total()) << '\n';
  }
  return out.str();
}

std::string rows_csv(std::span<const std::string> models, std::vector<SequenceReportRow> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const SequenceReportRow& a, const SequenceReportRow& b) { return a.name < b.name; });
  std::ostringstream out;
  out << "name,has_people,total_pictures";
  for (const auto& m : models) {
    const std::string prefix = models.size() > 1 ? m + "_" : "";
    out << ',' << csv_field(prefix + "identified") << ',' << csv_field(prefix + "detection_pct") << ','
        << csv_field(prefix + "result");
  }
  out << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.name) << ',' << (r.has_people ? "yes" : "no") << ',' << r.total_pictures;
    for (const auto& v : r.per_model) out << ',' << v.identified << ',' << v.detection_pct << ',' << to_string(v.result);
    out << '\n';
  }
  return out.str();
}

void write_report(const std::vector<Phase1Result>& results, const fs::path& out_dir) {
  ensure_out_dir(out_dir);
  std::vector<std::string> models;
  std::vector<ConfusionMatrix> matrices;
  for (const auto& r : results) {
    models.push_back(r.model);
    matrices.push_back(r.matrix);
  }
  write_text(out_dir / "phase1_matrix.csv", matrix_csv(models, matrices));
}

void write_report(const Phase2Result& result, const fs::path& out_dir) {
  ensure_out_dir(out_dir);
  write_text(out_dir / "phase2_matrix.csv", matrix_csv(result.models, result.matrices));
  write_text(out_dir / "phase2_sequences.csv", rows_csv(result.models, result.rows));
}

}  // namespace visensor
