#include "sidetect/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sidetect/error.hpp"

namespace sidetect {

using nlohmann::json;

json ResultRow::to_json() const {
  json j = {{"classifier", classifier}, {"feature", feature}, {"status", ok ? "ok" : "failed"}};
  if (!ok) {
    j["error"] = error;
    j["hyperparameters"] = hyperparameters;
    return j;
  }
  j["precision"] = metrics.suicidal.precision;
  j["recall"] = metrics.suicidal.recall;
  j["f1"] = metrics.suicidal.f1;
  j["accuracy"] = metrics.accuracy;
  j["metrics"] = sidetect::to_json(metrics);
  j["confusion"] = sidetect::to_json(confusion);
  j["hyperparameters"] = hyperparameters;
  j["cv_score"] = cv_score ? json(*cv_score) : json(nullptr);
  j["roc_auc"] = roc ? json(roc->auc) : json(nullptr);
  if (external) j["external"] = true;
  return j;
}

json ResultTable::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) rows_json.push_back(r.to_json());
  const auto best = best_rows(*this);
  return {{"seed", seed},
          {"train_size", train_size},
          {"test_size", test_size},
          {"rows", rows_json},
          {"best",
           {{"precision", best.precision}, {"recall", best.recall}, {"f1", best.f1}, {"accuracy", best.accuracy}}}};
}

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  return std::nullopt;
}

BestRows best_rows(const ResultTable& table) {
  BestRows best;
  auto scan = [&](std::vector<std::size_t>& out, auto value) {
    double top = -1.0;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      if (!table.rows[i].ok) continue;
      const double v = value(table.rows[i]);
      if (v > top) {
        top = v;
        out.clear();
      }
      if (v == top) out.push_back(i);
    }
  };
  scan(best.precision, [](const ResultRow& r) { return r.metrics.suicidal.precision; });
  scan(best.recall, [](const ResultRow& r) { return r.metrics.suicidal.recall; });
  scan(best.f1, [](const ResultRow& r) { return r.metrics.suicidal.f1; });
  scan(best.accuracy, [](const ResultRow& r) { return r.metrics.accuracy; });
  return best;
}

std::string report_json(const ResultTable& table) { return table.to_json().dump(2) + "\n"; }

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool contains(const std::vector<std::size_t>& v, std::size_t i) {
  for (auto x : v) {
    if (x == i) return true;
  }
  return false;
}

}  // namespace

std::string report_csv(const ResultTable& table) {
  std::ostringstream out;
  out << "classifier,feature,status,precision,recall,f1,accuracy,macro_precision,macro_recall,macro_f1,roc_auc,"
         "tp,fp,tn,fn,error\n";
  for (const auto& r : table.rows) {
    out << csv_field(r.classifier) << ',' << csv_field(r.feature) << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      const auto& m = r.metrics;
      out << fixed4(m.suicidal.precision) << ',' << fixed4(m.suicidal.recall) << ',' << fixed4(m.suicidal.f1) << ','
          << fixed4(m.accuracy) << ',' << fixed4(m.macro.precision) << ',' << fixed4(m.macro.recall) << ','
          << fixed4(m.macro.f1) << ',' << (r.roc ? fixed4(r.roc->auc) : "") << ',' << r.confusion.tp << ','
          << r.confusion.fp << ',' << r.confusion.tn << ',' << r.confusion.fn << ",\n";
    } else {
      out << ",,,,,,,,,,,," << csv_field(r.error) << '\n';
    }
  }
  return out.str();
}

std::string report_markdown(const ResultTable& table) {
  const auto best = best_rows(table);
  std::ostringstream out;
  out << "| Classifier | Feature | Precision | Recall | F1-score | Accuracy |\n";
  out << "|---|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    out << "| " << r.classifier << " | " << r.feature << " | ";
    if (!r.ok) {
      out << "failed: " << r.error << " | | | |\n";
      continue;
    }
    auto cell = [&](double v, const std::vector<std::size_t>& top) {
      return contains(top, i) ? "**" + fixed4(v) + "**" : fixed4(v);
    };
    out << cell(r.metrics.suicidal.precision, best.precision) << " | " << cell(r.metrics.suicidal.recall, best.recall)
        << " | " << cell(r.metrics.suicidal.f1, best.f1) << " | " << cell(r.metrics.accuracy, best.accuracy)
        << " |\n";
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<std::filesystem::path> emit_report(const ResultTable& table, const std::vector<ReportFormat>& formats,
                                               const std::filesystem::path& dir) {
  if (table.rows.empty()) throw DataError("refusing to emit an empty report");
  std::vector<std::filesystem::path> written;
  for (auto f : formats) {
    switch (f) {
      case ReportFormat::json:
        written.push_back(dir / "report.json");
        write_text_file(written.back(), report_json(table));
        break;
      case ReportFormat::csv:
        written.push_back(dir / "report.csv");
        write_text_file(written.back(), report_csv(table));
        break;
      case ReportFormat::markdown:
        written.push_back(dir / "report.md");
        write_text_file(written.back(), report_markdown(table));
        break;
    }
  }
  return written;
}

}  // namespace sidetect
