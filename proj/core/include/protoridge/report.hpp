#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "protoridge/protocol.hpp"

namespace protoridge {

std::string record_to_json(const RunRecord& record);
RunRecord record_from_json(const std::string& text);

/// Ledger as CSV: header `stage,task_1,...,task_T`; cells above the diagonal are empty.
std::string ledger_csv(const MetricsLedger& ledger);

/// Writes `<method>[_<variant>]_seed<S>.json` and the matching `.ledger.csv` into `dir`.
/// Returns the JSON path.
std::filesystem::path save_record(const RunRecord& record, const std::filesystem::path& dir);

/// Every `*.json` run record in `dir`. Throws InvariantError if there are none.
std::vector<RunRecord> load_records(const std::filesystem::path& dir);

/// Final-stage table, one row per method: AA_T and FR_T as percentage mean +- std.
std::string report_table(const std::vector<MethodReport>& reports);

/// CSV with `method,variant,runs,aa_mean,aa_std,fr_mean,fr_std` for the final stage.
std::string report_csv(const std::vector<MethodReport>& reports);

/// One CSV row per (method, stage t): AA_t and FR_t mean/std.
std::string stagewise_csv(const std::vector<MethodReport>& reports);

/// Ablation rows with parameter accounting.
std::string ablation_table(const std::vector<AblationRow>& rows);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace protoridge
