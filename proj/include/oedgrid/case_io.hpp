#pragma once

// MATPOWER-style case files (bus, gen, branch, baseMVA subset) and the JSON
// network description.
//
// JSON schema (all electrical quantities per-unit, buses 1-based):
//   {
//     "base_mva": 100, "base_kv": 230, "slack_voltage": 1.0,
//     "buses": [{"id": 1, "p_demand": 0, "q_demand": 0}, ...],   first entry is the slack
//     "lines": [{"from": 1, "to": 2, "g": 3.52, "b": -35.2}, ...], g/b are the true admittances
//     "generators": [{"bus": 3, "p": 3.23, "q": 0,
//                     "p_min": 0, "p_max": 5.2, "q_min": -3.9, "q_max": 3.9}, ...],
//     "state_bounds": {"v_min": [...], "v_max": [...], "theta_min": [...], "theta_max": [...]},
//     "slack_bounds": {"p_min": ..., "p_max": ..., "q_min": ..., "q_max": ...}
//   }
// "generators" lists non-slack generators only; the slack generator is implied.

#include "oedgrid/grid_model.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace oedgrid {

struct CaseBus {
  int id = 0;
  int type = 0;
  double p_demand = 0.0;  // MW
  double q_demand = 0.0;  // MVAr
  double g_shunt = 0.0;
  double b_shunt = 0.0;
  double vm = 1.0;
  double base_kv = 0.0;
  double v_max = 1.1;
  double v_min = 0.9;
  int line = 0;  // source line
};

struct CaseGenerator {
  int bus = 0;
  double pg = 0.0;
  double qg = 0.0;
  double q_max = 0.0;
  double q_min = 0.0;
  double vg = 1.0;
  int status = 1;
  double p_max = 0.0;
  double p_min = 0.0;
  int line = 0;
};

struct CaseBranch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double charging = 0.0;
  double ratio = 0.0;
  double angle = 0.0;
  int status = 1;
  int line = 0;
};

struct CaseFile {
  double base_mva = 100.0;
  std::vector<CaseBus> buses;
  std::vector<CaseGenerator> generators;
  std::vector<CaseBranch> branches;
};

// Throws MissingBlock, MalformedRow or UnsupportedFeature (all ParseError).
CaseFile parse_case_text(std::string_view text);
CaseFile parse_case(const std::filesystem::path& path);

struct Admittance {
  double g = 0.0;
  double b = 0.0;
};

// Series impedance r + jx to admittance g + jb. Throws ZeroImpedance.
Admittance branch_to_admittance(double r, double x);

enum class SlackBoxPolicy {
  Wide,     // +/- total generator capability of the case
  Dataset,  // the slack bus generators' own limits
};

struct CaseOptions {
  SlackBoxPolicy slack_box = SlackBoxPolicy::Wide;
  double angle_limit = 1.5707963267948966;  // |theta| bound, rad
};

// Network, ground truth and nominal dispatch derived from a case. The first bus
// of the case becomes the slack bus (index 0).
struct CaseProblem {
  Network network;
  AdmittanceParams y_true;
  GeneratorInput u_nominal;
  std::vector<int> bus_ids;  // external id of each internal bus index
  std::vector<std::string> warnings;
};

CaseProblem build_problem(const CaseFile& file, const CaseOptions& options = {});

std::string problem_to_json(const CaseProblem& problem, int indent = 2);
CaseProblem problem_from_json(std::string_view text);

// Reads a .json network description or a MATPOWER-style case, by extension.
CaseProblem load_problem(const std::filesystem::path& path, const CaseOptions& options = {});

// Column names of u: p_g<id>, q_g<id> per controllable generator.
std::vector<std::string> input_names(const CaseProblem& problem);

}  // namespace oedgrid
