#include "protoridge/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "protoridge/types.hpp"

namespace protoridge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string pct(const MeanStd& m) { return fmt::format("{:5.1f} ± {:.1f}", 100.0 * m.mean, 100.0 * m.std); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed on '" + p.string() + "'");
}

}  // namespace

std::string record_to_json(const RunRecord& r) {
  json ledger = json::array();
  for (std::size_t t = 1; t <= r.ledger.task_count(); ++t) {
    json row = json::array();
    for (std::size_t j = 1; j <= t; ++j) row.push_back(r.ledger.at(t, j));
    ledger.push_back(std::move(row));
  }
  json j{{"manifest_hash", r.manifest_hash},
         {"protocol", r.protocol},
         {"method", r.method},
         {"variant", r.variant},
         {"run_seed", r.run_seed},
         {"seeds", r.seeds},
         {"task_order", r.task_order},
         {"class_assignment", r.class_assignment},
         {"lambdas", r.lambdas},
         {"ledger", std::move(ledger)},
         {"stage_seconds", r.stage_seconds},
         {"folds", r.folds},
         {"protocol_violating", r.protocol_violating},
         {"access_violations", r.access_violations},
         {"head_parameters", r.head_parameters},
         {"frozen_parameters", r.frozen_parameters},
         {"config", json::parse(r.config_json.empty() ? "{}" : r.config_json)}};
  return j.dump(2);
}

RunRecord record_from_json(const std::string& text) {
  RunRecord r;
  try {
    const json j = json::parse(text);
    r.manifest_hash = j.at("manifest_hash").get<std::string>();
    r.protocol = j.at("protocol").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.variant = j.value("variant", std::string("full"));
    r.run_seed = j.at("run_seed").get<std::uint64_t>();
    r.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    r.task_order = j.at("task_order").get<std::vector<std::uint32_t>>();
    r.class_assignment = j.at("class_assignment").get<std::vector<std::vector<std::uint32_t>>>();
    r.lambdas = j.at("lambdas").get<std::vector<std::vector<double>>>();
    const auto rows = j.at("ledger").get<std::vector<std::vector<double>>>();
    r.ledger = MetricsLedger(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].size() != t + 1) throw FormatError(fmt::format("run record: ledger row {} has {} cells", t + 1, rows[t].size()));
      for (std::size_t k = 0; k < rows[t].size(); ++k) r.ledger.set(t + 1, k + 1, rows[t][k]);
    }
    r.stage_seconds = j.at("stage_seconds").get<std::vector<double>>();
    r.folds = j.at("folds").get<std::size_t>();
    r.protocol_violating = j.at("protocol_violating").get<bool>();
    r.access_violations = j.at("access_violations").get<std::size_t>();
    r.head_parameters = j.at("head_parameters").get<std::uint64_t>();
    r.frozen_parameters = j.at("frozen_parameters").get<std::uint64_t>();
    r.config_json = j.at("config").dump();
  } catch (const json::exception& e) {
    throw FormatError(std::string("run record: ") + e.what());
  }
  return r;
}

std::string ledger_csv(const MetricsLedger& ledger) {
  const std::size_t T = ledger.task_count();
  std::string out = "stage";
  for (std::size_t j = 1; j <= T; ++j) out += fmt::format(",task_{}", j);
  out += '\n';
  for (std::size_t t = 1; t <= T; ++t) {
    out += std::to_string(t);
    for (std::size_t j = 1; j <= T; ++j) {
      out += ',';
      if (const auto v = ledger.get(t, j)) out += fmt::format("{:.6f}", *v);
    }
    out += '\n';
  }
  return out;
}

fs::path save_record(const RunRecord& record, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string stem = record.variant == "full" ? fmt::format("{}_seed{}", record.method, record.run_seed)
                                                    : fmt::format("{}_{}_seed{}", record.method, record.variant, record.run_seed);
  const fs::path json_path = dir / (stem + ".json");
  spit(json_path, record_to_json(record) + "\n");
  spit(dir / (stem + ".ledger.csv"), ledger_csv(record.ledger));
  return json_path;
}

std::vector<RunRecord> load_records(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("run directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> records;
  for (const auto& f : files) {
    const std::string text = slurp(f);
    const json probe = json::parse(text, nullptr, false);
    if (probe.is_discarded() || !probe.is_object() || !probe.contains("ledger")) continue;  // e.g. a manifest
    records.push_back(record_from_json(text));
  }
  if (records.empty()) throw InvariantError("run directory '" + dir.string() + "' contains no run records");
  return records;
}

std::string report_table(const std::vector<MethodReport>& reports) {
  std::string out = fmt::format("{:<24} {:>5} {:>14} {:>14}\n", "method", "runs", "AA_T (%)", "FR_T (%)");
  for (const auto& r : reports) {
    const std::string name = r.variant == "full" ? r.method : r.method + "/" + r.variant;
    out += fmt::format("{:<24} {:>5} {:>14} {:>14}{}\n", name, r.runs, pct(r.final_aa),
                       r.final_fr ? pct(*r.final_fr) : std::string("-"), r.protocol_violating ? "  (joint: uses past data)" : "");
  }
  return out;
}

std::string report_csv(const std::vector<MethodReport>& reports) {
  std::string out = "method,variant,runs,aa_mean,aa_std,fr_mean,fr_std\n";
  for (const auto& r : reports) {
    out += fmt::format("{},{},{},{:.6f},{:.6f},", r.method, r.variant, r.runs, r.final_aa.mean, r.final_aa.std);
    out += r.final_fr ? fmt::format("{:.6f},{:.6f}\n", r.final_fr->mean, r.final_fr->std) : std::string(",\n");
  }
  return out;
}

std::string stagewise_csv(const std::vector<MethodReport>& reports) {
  std::string out = "method,variant,stage,aa_mean,aa_std,fr_mean,fr_std\n";
  for (const auto& r : reports) {
    for (const auto& s : r.stages) {
      out += fmt::format("{},{},{},{:.6f},{:.6f},", r.method, r.variant, s.stage, s.aa.mean, s.aa.std);
      out += s.fr ? fmt::format("{:.6f},{:.6f}\n", s.fr->mean, s.fr->std) : std::string(",\n");
    }
  }
  return out;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::string out = fmt::format("{:<20} {:>6} {:>14} {:>14} {:>12} {:>12} {:>12}\n", "variant", "Q", "AA_T (%)",
                                "FR_T (%)", "head params", "frozen", "LP params");
  for (const auto& row : rows) {
    out += fmt::format("{:<20} {:>6} {:>14} {:>14} {:>12} {:>12} {:>12}\n", row.variant, row.q, pct(row.report.final_aa),
                       row.report.final_fr ? pct(*row.report.final_fr) : std::string("-"), row.head_parameters,
                       row.frozen_parameters, row.linear_probe_parameters);
  }
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "variant,q,stage,aa_mean,aa_std,head_parameters,frozen_parameters,linear_probe_parameters\n";
  for (const auto& row : rows) {
    for (const auto& s : row.report.stages) {
      out += fmt::format("{},{},{},{:.6f},{:.6f},{},{},{}\n", row.variant, row.q, s.stage, s.aa.mean, s.aa.std,
                         row.head_parameters, row.frozen_parameters, row.linear_probe_parameters);
    }
  }
  return out;
}

}  // namespace protoridge
