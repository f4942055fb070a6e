#include <doctest.h>

#include <sstream>

#include <protoridge/manifest.hpp>
#include <protoridge/report.hpp>
#include <protoridge/synth.hpp>

#include "scratch.hpp"

using namespace protoridge;

namespace {

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

RunConfig config(Method m) {
  RunConfig cfg;
  cfg.method = m;
  cfg.proposed.q = 16;
  cfg.probe.lr = 1e-2;
  cfg.probe.max_epochs = 5;
  return cfg;
}

}  // namespace

TEST_CASE("record JSON round trip") {
  const auto data = gen_gaussian_cil(6, 3, 8, 15, 3.0, 2);
  const auto r = run_single(data, config(Method::kProposed), 4);
  const auto back = record_from_json(record_to_json(r));
  CHECK(back.ledger == r.ledger);
  CHECK(back.lambdas == r.lambdas);
  CHECK(back.class_assignment == r.class_assignment);
  CHECK(back.seeds == r.seeds);
  CHECK(back.manifest_hash == r.manifest_hash);
  CHECK(back.head_parameters == r.head_parameters);
  CHECK(record_to_json(back) == record_to_json(r));
  CHECK_THROWS_AS(record_from_json("{\"ledger\": []}"), FormatError);
}

TEST_CASE("ledger CSV leaves the upper triangle empty") {
  MetricsLedger l(2);
  l.set(1, 1, 1.0);
  l.set(2, 1, 0.5);
  l.set(2, 2, 0.25);
  CHECK(ledger_csv(l) == "stage,task_1,task_2\n1,1.000000,\n2,0.500000,0.250000\n");
}

TEST_CASE("saved records load back and skip other JSON") {
  Scratch dir;
  const auto data = gen_gaussian_cil(6, 3, 8, 15, 3.0, 2);
  save_manifest(data.manifest, dir / "manifest.json");
  auto r = run_single(data, config(Method::kNcm), 4);
  const auto path = save_record(r, dir.path());
  CHECK(path.filename() == "ncm_seed4.json");
  CHECK(std::filesystem::exists(dir / "ncm_seed4.ledger.csv"));
  r.variant = "no_projection";
  r.method = "proposed";
  CHECK(save_record(r, dir.path()).filename() == "proposed_no_projection_seed4.json");
  const auto loaded = load_records(dir.path());
  CHECK(loaded.size() == 2);
}

TEST_CASE("empty or missing run directories are errors") {
  Scratch dir;
  CHECK_THROWS_AS(load_records(dir.path()), InvariantError);
  CHECK_THROWS_AS(load_records(dir / "missing"), IoError);
}

TEST_CASE("table and CSV shapes") {
  const auto data = gen_gaussian_cil(6, 3, 8, 15, 3.0, 2);
  std::vector<RunRecord> records;
  for (Method m : {Method::kProposed, Method::kJlpOnline}) {
    for (auto rec : run_protocol(data, config(m), {1, 2})) records.push_back(rec);
  }
  const auto reports = aggregate_by_method(records);
  const auto table = report_table(reports);
  CHECK(line_count(table) == 3);
  CHECK(table.find("AA_T") != std::string::npos);
  CHECK(table.find("FR_T") != std::string::npos);
  CHECK(table.find("joint") != std::string::npos);

  CHECK(line_count(report_csv(reports)) == 3);
  const auto stagewise = stagewise_csv(reports);
  CHECK(line_count(stagewise) == 1 + 2 * 3);
  std::istringstream in(stagewise);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "method,variant,stage,aa_mean,aa_std,fr_mean,fr_std");
  CHECK(first.rfind("proposed,full,1,", 0) == 0);
  CHECK(first.substr(first.size() - 2) == ",,");
}

TEST_CASE("ablation rendering") {
  const auto data = gen_gaussian_cil(4, 2, 8, 15, 3.0, 2);
  RunConfig base = config(Method::kProposed);
  const auto rows = run_ablation(data, {AblationKind::kQSweep, {8, 16}}, base, {1});
  const auto table = ablation_table(rows);
  CHECK(line_count(table) == 3);
  CHECK(table.find("q_sweep_16") != std::string::npos);
  CHECK(line_count(ablation_csv(rows)) == 1 + 2 * 2);
}
