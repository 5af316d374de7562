#include "oedgrid/records.hpp"

#include "oedgrid/errors.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace oedgrid {

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw MalformedRow("bad number '" + s + "'", line);
  return v;
}

}  // namespace

std::vector<std::string> run_csv_header(const std::vector<std::string>& input_names) {
  std::vector<std::string> h{"iter", "mre_g", "mre_b", "trace_v"};
  h.insert(h.end(), input_names.begin(), input_names.end());
  h.emplace_back("objective");
  h.emplace_back("wall_ms");
  return h;
}

void write_run_csv(std::ostream& out, const std::vector<EstimateRecord>& records,
                   const std::vector<std::string>& input_names, bool with_timing) {
  out << fmt::format("{}\n", fmt::join(run_csv_header(input_names), ","));
  for (const auto& r : records) {
    if (r.u.size() != static_cast<int>(input_names.size())) {
      throw DimensionMismatch("record input does not match the column names");
    }
    std::string line = fmt::format("{},{},{},{}", r.iter, num(r.mre_g), num(r.mre_b),
                                   num(r.total_variance));
    for (int i = 0; i < r.u.size(); ++i) line += "," + num(r.u.values[i]);
    line += "," + num(r.oed_objective) + "," + num(with_timing ? r.wall_ms : 0.0);
    out << line << '\n';
  }
}

RunCsv read_run_csv(std::istream& in) {
  RunCsv csv;
  std::string line;
  if (!std::getline(in, line)) throw MissingBlock("empty CSV", 0);
  csv.header = split(line);
  const int cols = static_cast<int>(csv.header.size());
  if (cols < 6 || csv.header[0] != "iter" || csv.header[cols - 1] != "wall_ms") {
    throw MalformedRow("unexpected CSV header", 1);
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (static_cast<int>(cells.size()) != cols) throw MalformedRow("wrong number of columns", lineno);
    CsvRow row;
    row.iter = static_cast<int>(to_double(cells[0], lineno));
    row.mre_g = to_double(cells[1], lineno);
    row.mre_b = to_double(cells[2], lineno);
    row.trace_v = to_double(cells[3], lineno);
    row.u.resize(cols - 6);
    for (int i = 0; i < cols - 6; ++i) row.u[i] = to_double(cells[4 + i], lineno);
    row.objective = to_double(cells[cols - 2], lineno);
    row.wall_ms = to_double(cells[cols - 1], lineno);
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

void write_summary_csv(std::ostream& out, const std::vector<ComparisonSummary>& rows) {
  out << "seed,iterations,oed_mre_g,oed_mre_b,oed_trace,constant_mre_g,constant_mre_b,"
         "constant_trace,crossover\n";
  for (const auto& s : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", s.seed, s.iterations, num(s.oed_mre_g),
                       num(s.oed_mre_b), num(s.oed_trace), num(s.baseline_mre_g),
                       num(s.baseline_mre_b), num(s.baseline_trace), s.crossover);
  }
}

std::string truth_json(const CaseProblem& problem, const EstimateRecord* final_record, int indent) {
  using nlohmann::json;
  const Network& net = problem.network;
  json lines = json::array();
  for (int i = 0; i < net.n_lines(); ++i) {
    const Line& l = net.lines()[i];
    json row{{"from", problem.bus_ids[l.from]},
             {"to", problem.bus_ids[l.to]},
             {"g_true", problem.y_true.g(i)},
             {"b_true", problem.y_true.b(i)}};
    if (final_record) {
      const double g = final_record->y.g(i);
      const double b = final_record->y.b(i);
      row["g_est"] = g;
      row["b_est"] = b;
      row["g_rel_err"] = std::abs(g - problem.y_true.g(i)) / std::abs(problem.y_true.g(i));
      row["b_rel_err"] = std::abs(b - problem.y_true.b(i)) / std::abs(problem.y_true.b(i));
    }
    lines.push_back(std::move(row));
  }
  json doc{{"base_mva", net.base_mva()}, {"lines", std::move(lines)}};
  if (final_record) {
    doc["iterations"] = final_record->iter;
    doc["mre_g"] = final_record->mre_g;
    doc["mre_b"] = final_record->mre_b;
    doc["trace_v"] = final_record->total_variance;
  }
  return doc.dump(indent);
}

}  // namespace oedgrid
