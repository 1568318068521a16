#include "mindface/eval/report.hpp"

#include "mindface/common/csv.hpp"
#include "mindface/errors.hpp"

#include <fstream>

namespace mindface::eval {
namespace {

using nlohmann::json;

json log_to_json(const std::vector<recon::TrainLogRow>& log) {
  json rows = json::array();
  for (const auto& r : log) {
    rows.push_back({{"step", r.step},
                    {"train_loss", r.train_loss},
                    {"val_embedding_similarity", r.val_similarity},
                    {"val_loss", r.val_loss},
                    {"train_embedding_similarity", r.train_similarity}});
  }
  return rows;
}

std::vector<recon::TrainLogRow> log_from_json(const json& rows) {
  std::vector<recon::TrainLogRow> log;
  for (const auto& r : rows) {
    log.push_back({r.at("step").get<int>(), r.at("train_loss").get<double>(),
                   r.at("val_embedding_similarity").get<double>(), r.at("val_loss").get<double>(),
                   r.at("train_embedding_similarity").get<double>()});
  }
  return log;
}

}  // namespace

json report_summary(const StudyReport& r) {
  json curve = json::array();
  for (const auto& p : r.curve) {
    curve.push_back({{"iteration", p.iteration},
                     {"mean_similarity", p.mean_similarity},
                     {"baseline_similarity", p.baseline_similarity},
                     {"mean_change", p.mean_change}});
  }
  json ablation = json::object();
  for (const auto& [label, log] : r.ablation_curves) ablation[label] = log_to_json(log);
  return {{"schema_version", kReportSchemaVersion},
          {"n_targets", r.targets.size()},
          {"mean_similarity", r.mean_similarity},
          {"std_similarity", r.std_similarity},
          {"mean_baseline", r.mean_baseline},
          {"std_baseline", r.std_baseline},
          {"mean_stopped_similarity", r.mean_stopped_similarity},
          {"mean_stop_iteration", r.mean_stop_iteration},
          {"stop_histogram", r.stop_histogram},
          {"curve", curve},
          {"identification_rate", r.identification_rate ? json(*r.identification_rate) : json(nullptr)},
          {"top3_rate", r.top3_rate ? json(*r.top3_rate) : json(nullptr)},
          {"ablation", ablation}};
}

StudyReport report_from_summary(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw FormatError("unsupported report schema version");
    }
    StudyReport r;
    r.mean_similarity = j.at("mean_similarity").get<double>();
    r.std_similarity = j.at("std_similarity").get<double>();
    r.mean_baseline = j.at("mean_baseline").get<double>();
    r.std_baseline = j.at("std_baseline").get<double>();
    r.mean_stopped_similarity = j.at("mean_stopped_similarity").get<double>();
    r.mean_stop_iteration = j.at("mean_stop_iteration").get<double>();
    r.stop_histogram = j.at("stop_histogram").get<std::vector<int>>();
    for (const auto& p : j.at("curve")) {
      r.curve.push_back({p.at("iteration").get<int>(), p.at("mean_similarity").get<double>(),
                         p.at("baseline_similarity").get<double>(), p.at("mean_change").get<double>()});
    }
    if (!j.at("identification_rate").is_null()) r.identification_rate = j["identification_rate"].get<double>();
    if (!j.at("top3_rate").is_null()) r.top3_rate = j["top3_rate"].get<double>();
    for (const auto& [label, rows] : j.at("ablation").items()) r.ablation_curves[label] = log_from_json(rows);
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report summary: ") + e.what());
  }
}

void export_report(const StudyReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "summary.json", std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / "summary.json").string());
    out << report_summary(r).dump(2) << '\n';
    if (!out) throw Error("failed writing summary.json");
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& t : r.targets) {
    rows.push_back({std::to_string(t.index), t.category.name(), format_number(t.similarity),
                    format_number(t.stopped_similarity), format_number(t.baseline_similarity),
                    std::to_string(t.stop_iteration)});
  }
  write_csv(dir / "targets.csv",
            {"index", "category", "similarity", "stopped_similarity", "baseline_similarity", "stop_iteration"},
            rows);
  rows.clear();
  for (const auto& p : r.curve) {
    rows.push_back({std::to_string(p.iteration), format_number(p.mean_similarity),
                    format_number(p.baseline_similarity), format_number(p.mean_change)});
  }
  write_csv(dir / "curve.csv", {"iteration", "mean_similarity", "baseline_similarity", "mean_change"}, rows);
  if (!r.ablation_curves.empty()) {
    rows.clear();
    for (const auto& [label, log] : r.ablation_curves) {
      for (const auto& l : log) {
        rows.push_back({label, std::to_string(l.step), format_number(l.train_loss), format_number(l.val_similarity),
                        format_number(l.val_loss), format_number(l.train_similarity)});
      }
    }
    write_csv(dir / "ablation.csv",
              {"label", "step", "train_loss", "val_embedding_similarity", "val_loss", "train_embedding_similarity"},
              rows);
  }
}

StudyReport read_report_summary(const std::filesystem::path& dir) {
  std::ifstream in(dir / "summary.json", std::ios::binary);
  if (!in) throw NotFound("no report summary in " + dir.string());
  try {
    return report_from_summary(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("cannot parse report summary: ") + e.what());
  }
}

}  // namespace mindface::eval
