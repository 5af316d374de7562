#pragma once

// CSV and JSON output of experiment runs.

#include "oedgrid/case_io.hpp"
#include "oedgrid/experiment_loop.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace oedgrid {

// iter, mre_g, mre_b, trace_v, <input names>, objective, wall_ms
std::vector<std::string> run_csv_header(const std::vector<std::string>& input_names);

// One row per record, numbers printed with 17 significant digits. wall_ms is
// written as 0 unless with_timing is set, so that seeded runs are byte-identical.
void write_run_csv(std::ostream& out, const std::vector<EstimateRecord>& records,
                   const std::vector<std::string>& input_names, bool with_timing = false);

struct CsvRow {
  int iter = 0;
  double mre_g = 0.0;
  double mre_b = 0.0;
  double trace_v = 0.0;
  Vector u;
  double objective = 0.0;
  double wall_ms = 0.0;
};

struct RunCsv {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
};

// Reads a file written by write_run_csv. Throws ParseError.
RunCsv read_run_csv(std::istream& in);

void write_summary_csv(std::ostream& out, const std::vector<ComparisonSummary>& rows);

// Ground truth and final estimate per line, buses by external id.
std::string truth_json(const CaseProblem& problem, const EstimateRecord* final_record, int indent = 2);

}  // namespace oedgrid
