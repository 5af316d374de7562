#include "oedgrid/case_io.hpp"

#include "oedgrid/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace oedgrid {

namespace {

using json = nlohmann::json;

struct NumericBlock {
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;
  int line = 0;
};

class CaseScanner {
 public:
  explicit CaseScanner(std::string_view text) : text_(text) {}

  void scan() {
    while (!at_end()) {
      skip_blank();
      if (at_end()) break;
      const char c = peek();
      if (is_ident_start(c)) {
        statement();
      } else {
        skip_line();  // stray text is ignored, not rejected
      }
    }
  }

  std::map<std::string, NumericBlock> blocks;
  std::map<std::string, std::pair<double, int>> scalars;

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  char advance() {
    const char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident(char c) { return is_ident_start(c) || (c >= '0' && c <= '9') || c == '.'; }

  void skip_line() {
    while (!at_end() && peek() != '\n') advance();
  }

  // Whitespace, newlines and % comments.
  void skip_blank() {
    while (!at_end()) {
      const char c = peek();
      if (c == '%') {
        skip_line();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  void skip_inline_space() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }

  void statement() {
    const int line = line_;
    std::string name;
    while (!at_end() && is_ident(peek())) name.push_back(advance());
    if (name == "function") {
      skip_line();
      return;
    }
    skip_inline_space();
    if (at_end() || peek() != '=') {
      skip_statement();
      return;
    }
    advance();
    skip_inline_space();
    if (name.rfind("mpc.", 0) == 0) name = name.substr(4);
    if (at_end()) return;
    const char c = peek();
    if (c == '[') {
      advance();
      NumericBlock block = matrix(line);
      if (name == "bus" || name == "gen" || name == "branch") blocks[name] = std::move(block);
    } else if (c == '{') {
      skip_cell();
    } else if (c == '\'' || c == '"') {
      skip_string();
      skip_statement();
    } else {
      std::string value;
      while (!at_end() && peek() != ';' && peek() != '\n' && peek() != '%') value.push_back(advance());
      if (name == "baseMVA") {
        auto v = number(trim(value));
        if (!v) throw MalformedRow("baseMVA is not a number: '" + trim(value) + "'", line);
        scalars[name] = {*v, line};
      }
      skip_statement();
    }
  }

  void skip_statement() {
    while (!at_end() && peek() != ';' && peek() != '\n') {
      if (peek() == '%') {
        skip_line();
        return;
      }
      advance();
    }
    if (!at_end() && peek() == ';') advance();
  }

  void skip_string() {
    const char quote = advance();
    while (!at_end() && peek() != quote && peek() != '\n') advance();
    if (!at_end() && peek() == quote) advance();
  }

  void skip_cell() {
    const int line = line_;
    int depth = 0;
    while (!at_end()) {
      const char c = peek();
      if (c == '%') {
        skip_line();
        continue;
      }
      if (c == '\'' || c == '"') {
        skip_string();
        continue;
      }
      advance();
      if (c == '{') ++depth;
      if (c == '}' && --depth == 0) return;
    }
    throw MalformedRow("unterminated cell array", line);
  }

  NumericBlock matrix(int start_line) {
    NumericBlock block;
    block.line = start_line;
    std::vector<double> row;
    int row_line = line_;
    auto finish_row = [&]() {
      if (!row.empty()) {
        if (!block.rows.empty() && row.size() != block.rows.front().size()) {
          throw MalformedRow("row has " + std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(block.rows.front().size()),
                             row_line);
        }
        block.rows.push_back(std::move(row));
        block.row_lines.push_back(row_line);
        row.clear();
      }
    };
    for (;;) {
      if (at_end()) throw MalformedRow("unterminated matrix", start_line);
      const char c = peek();
      if (c == ']') {
        advance();
        finish_row();
        skip_statement();
        return block;
      }
      if (c == '%') {
        skip_line();
      } else if (c == ';' || c == '\n') {
        advance();
        finish_row();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
        advance();
      } else {
        if (row.empty()) row_line = line_;
        std::string token;
        while (!at_end()) {
          const char t = peek();
          if (t == ' ' || t == '\t' || t == '\r' || t == '\n' || t == ',' || t == ';' ||
              t == ']' || t == '%') {
            break;
          }
          token.push_back(advance());
        }
        if (token == "...") {
          skip_line();
          if (!at_end()) advance();
          continue;
        }
        auto v = number(token);
        if (!v) throw MalformedRow("not a number: '" + token + "'", line_);
        row.push_back(*v);
      }
    }
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::optional<double> number(const std::string& token) {
    if (token.empty()) return std::nullopt;
    std::string t = token;
    std::string lower;
    for (char c : t) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "inf" || lower == "+inf") return std::numeric_limits<double>::infinity();
    if (lower == "-inf") return -std::numeric_limits<double>::infinity();
    const char* first = t.data();
    if (*first == '+') ++first;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    return v;
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
};

void require_columns(const NumericBlock& block, size_t min_cols, const std::string& name) {
  if (block.rows.empty()) throw MissingBlock("block '" + name + "' is empty", block.line);
  if (block.rows.front().size() < min_cols) {
    throw MalformedRow("block '" + name + "' needs at least " + std::to_string(min_cols) +
                           " columns",
                       block.row_lines.front());
  }
}

int as_int(double v, int line, const char* what) {
  if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 1e9) {
    throw MalformedRow(std::string(what) + " must be an integer", line);
  }
  return static_cast<int>(v);
}

}  // namespace

CaseFile parse_case_text(std::string_view text) {
  CaseScanner scanner(text);
  scanner.scan();

  for (const char* name : {"bus", "gen", "branch"}) {
    if (!scanner.blocks.count(name)) throw MissingBlock(std::string("missing block '") + name + "'", 0);
  }
  if (!scanner.scalars.count("baseMVA")) throw MissingBlock("missing baseMVA", 0);

  CaseFile file;
  file.base_mva = scanner.scalars["baseMVA"].first;
  if (!(file.base_mva > 0.0) || !std::isfinite(file.base_mva)) {
    throw MalformedRow("baseMVA must be positive", scanner.scalars["baseMVA"].second);
  }

  const auto& bus = scanner.blocks["bus"];
  require_columns(bus, 10, "bus");
  for (size_t i = 0; i < bus.rows.size(); ++i) {
    const auto& r = bus.rows[i];
    const int line = bus.row_lines[i];
    CaseBus b;
    b.id = as_int(r[0], line, "bus id");
    b.type = as_int(r[1], line, "bus type");
    b.p_demand = r[2];
    b.q_demand = r[3];
    b.g_shunt = r[4];
    b.b_shunt = r[5];
    b.vm = r[7];
    b.base_kv = r[9];
    if (r.size() > 12) {
      b.v_max = r[11];
      b.v_min = r[12];
    }
    b.line = line;
    for (double v : {b.p_demand, b.q_demand, b.vm}) {
      if (!std::isfinite(v)) throw MalformedRow("bus values must be finite", line);
    }
    if (!(b.vm > 0.0)) throw MalformedRow("bus voltage magnitude must be positive", line);
    if (!(b.v_min <= b.v_max) || !std::isfinite(b.v_min) || !std::isfinite(b.v_max)) {
      throw MalformedRow("bus voltage limits invalid", line);
    }
    for (const auto& other : file.buses) {
      if (other.id == b.id) throw MalformedRow("duplicate bus id " + std::to_string(b.id), line);
    }
    file.buses.push_back(b);
  }
  auto bus_exists = [&](int id) {
    return std::any_of(file.buses.begin(), file.buses.end(),
                       [id](const CaseBus& b) { return b.id == id; });
  };

  const auto& gen = scanner.blocks["gen"];
  require_columns(gen, 10, "gen");
  for (size_t i = 0; i < gen.rows.size(); ++i) {
    const auto& r = gen.rows[i];
    const int line = gen.row_lines[i];
    CaseGenerator g;
    g.bus = as_int(r[0], line, "generator bus");
    g.pg = r[1];
    g.qg = r[2];
    g.q_max = r[3];
    g.q_min = r[4];
    g.vg = r[5];
    g.status = as_int(r[7], line, "generator status");
    g.p_max = r[8];
    g.p_min = r[9];
    g.line = line;
    if (!bus_exists(g.bus)) {
      throw MalformedRow("generator references unknown bus " + std::to_string(g.bus), line);
    }
    if (g.status != 0 && g.status != 1) {
      throw UnsupportedFeature("generator status must be 0 or 1", line);
    }
    for (double v : {g.pg, g.qg, g.q_max, g.q_min, g.p_max, g.p_min}) {
      if (!std::isfinite(v)) throw MalformedRow("generator values must be finite", line);
    }
    if (g.p_min > g.p_max || g.q_min > g.q_max) {
      throw MalformedRow("generator limits invalid", line);
    }
    file.generators.push_back(g);
  }

  const auto& branch = scanner.blocks["branch"];
  require_columns(branch, 11, "branch");
  for (size_t i = 0; i < branch.rows.size(); ++i) {
    const auto& r = branch.rows[i];
    const int line = branch.row_lines[i];
    CaseBranch br;
    br.from = as_int(r[0], line, "branch from-bus");
    br.to = as_int(r[1], line, "branch to-bus");
    br.r = r[2];
    br.x = r[3];
    br.charging = r[4];
    br.ratio = r[8];
    br.angle = r[9];
    br.status = as_int(r[10], line, "branch status");
    br.line = line;
    if (!bus_exists(br.from) || !bus_exists(br.to)) {
      throw MalformedRow("branch references an unknown bus", line);
    }
    if (br.from == br.to) throw MalformedRow("branch connects a bus to itself", line);
    if (br.status != 0 && br.status != 1) {
      throw UnsupportedFeature("branch status must be 0 or 1", line);
    }
    if (!std::isfinite(br.r) || !std::isfinite(br.x)) {
      throw MalformedRow("branch impedance must be finite", line);
    }
    if (br.status == 1 && br.r * br.r + br.x * br.x <= 0.0) {
      throw MalformedRow("in-service branch has zero impedance", line);
    }
    file.branches.push_back(br);
  }
  return file;
}

CaseFile parse_case(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open case file " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_case_text(ss.str());
}

Admittance branch_to_admittance(double r, double x) {
  const double z2 = r * r + x * x;
  if (!(z2 > 0.0) || !std::isfinite(z2)) throw ZeroImpedance("branch impedance is zero");
  return {r / z2, -x / z2};
}

CaseProblem build_problem(const CaseFile& file, const CaseOptions& options) {
  const int n = static_cast<int>(file.buses.size());
  if (n < 2) throw UnsupportedFeature("case needs at least two buses", 0);
  const double base = file.base_mva;

  std::map<int, int> index;
  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) {
    index[file.buses[i].id] = i;
    ids[i] = file.buses[i].id;
  }

  std::vector<std::string> warnings;
  NetworkSpec spec;
  spec.n_buses = n;
  spec.base_mva = base;
  spec.base_kv = file.buses.front().base_kv;
  spec.slack_voltage = file.buses.front().vm;
  spec.p_demand = Vector(n);
  spec.q_demand = Vector(n);
  bool shunts = false;
  for (int i = 0; i < n; ++i) {
    spec.p_demand[i] = file.buses[i].p_demand / base;
    spec.q_demand[i] = file.buses[i].q_demand / base;
    shunts = shunts || file.buses[i].g_shunt != 0.0 || file.buses[i].b_shunt != 0.0;
  }
  if (shunts) warnings.push_back("bus shunts discarded (model has no shunt elements)");

  // In-service branches, parallel branches merged, canonical (from < to) order.
  std::map<std::pair<int, int>, Admittance> merged;
  bool charging = false;
  bool taps = false;
  for (const auto& br : file.branches) {
    if (br.status == 0) continue;
    int a = index.at(br.from);
    int b = index.at(br.to);
    if (a > b) std::swap(a, b);
    const Admittance y = branch_to_admittance(br.r, br.x);
    auto [it, inserted] = merged.try_emplace({a, b}, y);
    if (!inserted) {
      it->second.g += y.g;
      it->second.b += y.b;
      warnings.push_back("parallel branches " + std::to_string(br.from) + "-" +
                         std::to_string(br.to) + " merged");
    }
    charging = charging || br.charging != 0.0;
    taps = taps || (br.ratio != 0.0 && br.ratio != 1.0) || br.angle != 0.0;
  }
  if (charging) warnings.push_back("line charging susceptance discarded");
  if (taps) warnings.push_back("transformer taps and phase shifts discarded");
  Vector y_true(2 * merged.size());
  int li = 0;
  for (const auto& [key, y] : merged) {
    spec.lines.push_back({key.first, key.second});
    y_true[2 * li] = y.g;
    y_true[2 * li + 1] = y.b;
    ++li;
  }

  // Generators aggregated per bus.
  struct Aggregate {
    double pg = 0, qg = 0, p_min = 0, p_max = 0, q_min = 0, q_max = 0;
  };
  std::map<int, Aggregate> agg;
  double p_cap = 0.0;
  double q_cap = 0.0;
  for (const auto& g : file.generators) {
    if (g.status == 0) continue;
    auto& a = agg[index.at(g.bus)];
    a.pg += g.pg / base;
    a.qg += g.qg / base;
    a.p_min += g.p_min / base;
    a.p_max += g.p_max / base;
    a.q_min += g.q_min / base;
    a.q_max += g.q_max / base;
    p_cap += std::max(std::abs(g.p_max), std::abs(g.p_min)) / base;
    q_cap += std::max(std::abs(g.q_max), std::abs(g.q_min)) / base;
  }
  if (!agg.count(0)) {
    throw UnsupportedFeature("the first bus (slack) must carry an in-service generator",
                             file.buses.front().line);
  }
  for (const auto& [bus, a] : agg) spec.generators.push_back(bus);

  const int nu = 2 * (static_cast<int>(agg.size()) - 1);
  Vector u(nu);
  spec.bounds.u_lo.resize(nu);
  spec.bounds.u_hi.resize(nu);
  int slot = 0;
  for (const auto& [bus, a] : agg) {
    if (bus == 0) continue;
    u[2 * slot] = a.pg;
    u[2 * slot + 1] = a.qg;
    spec.bounds.u_lo[2 * slot] = a.p_min;
    spec.bounds.u_hi[2 * slot] = a.p_max;
    spec.bounds.u_lo[2 * slot + 1] = a.q_min;
    spec.bounds.u_hi[2 * slot + 1] = a.q_max;
    ++slot;
  }

  const int nx = 2 * (n - 1);
  spec.bounds.x_lo.resize(nx);
  spec.bounds.x_hi.resize(nx);
  for (int k = 1; k < n; ++k) {
    spec.bounds.x_lo[2 * (k - 1)] = file.buses[k].v_min;
    spec.bounds.x_hi[2 * (k - 1)] = file.buses[k].v_max;
    spec.bounds.x_lo[2 * (k - 1) + 1] = -options.angle_limit;
    spec.bounds.x_hi[2 * (k - 1) + 1] = options.angle_limit;
  }
  if (options.slack_box == SlackBoxPolicy::Dataset) {
    const auto& a = agg.at(0);
    spec.bounds.slack_lo << a.p_min, a.q_min;
    spec.bounds.slack_hi << a.p_max, a.q_max;
  } else {
    spec.bounds.slack_lo << -p_cap, -q_cap;
    spec.bounds.slack_hi << p_cap, q_cap;
  }

  return CaseProblem{Network(std::move(spec)), AdmittanceParams(std::move(y_true)),
                     GeneratorInput(std::move(u)), std::move(ids), std::move(warnings)};
}

std::vector<std::string> input_names(const CaseProblem& problem) {
  std::vector<std::string> names;
  for (int bus : problem.network.controllable_generators()) {
    const int id = problem.bus_ids.at(bus);
    names.push_back("p_g" + std::to_string(id));
    names.push_back("q_g" + std::to_string(id));
  }
  return names;
}

std::string problem_to_json(const CaseProblem& problem, int indent) {
  const Network& net = problem.network;
  const Bounds& bd = net.bounds();
  json j;
  j["base_mva"] = net.base_mva();
  j["base_kv"] = net.base_kv();
  j["slack_voltage"] = net.slack_voltage();
  j["buses"] = json::array();
  for (int k = 0; k < net.n_buses(); ++k) {
    j["buses"].push_back({{"id", problem.bus_ids.at(k)},
                          {"p_demand", net.p_demand()[k]},
                          {"q_demand", net.q_demand()[k]}});
  }
  j["lines"] = json::array();
  for (int i = 0; i < net.n_lines(); ++i) {
    const Line& l = net.lines()[i];
    j["lines"].push_back({{"from", problem.bus_ids.at(l.from)},
                          {"to", problem.bus_ids.at(l.to)},
                          {"g", problem.y_true.g(i)},
                          {"b", problem.y_true.b(i)}});
  }
  j["generators"] = json::array();
  const auto& gens = net.controllable_generators();
  for (size_t s = 0; s < gens.size(); ++s) {
    json g = {{"bus", problem.bus_ids.at(gens[s])},
              {"p", problem.u_nominal.values[2 * s]},
              {"q", problem.u_nominal.values[2 * s + 1]}};
    if (bd.u_lo.size() > 0) {
      g["p_min"] = bd.u_lo[2 * s];
      g["p_max"] = bd.u_hi[2 * s];
      g["q_min"] = bd.u_lo[2 * s + 1];
      g["q_max"] = bd.u_hi[2 * s + 1];
    }
    j["generators"].push_back(g);
  }
  if (bd.x_lo.size() > 0) {
    json sb;
    for (int k = 1; k < net.n_buses(); ++k) {
      sb["v_min"].push_back(bd.x_lo[2 * (k - 1)]);
      sb["v_max"].push_back(bd.x_hi[2 * (k - 1)]);
      sb["theta_min"].push_back(bd.x_lo[2 * (k - 1) + 1]);
      sb["theta_max"].push_back(bd.x_hi[2 * (k - 1) + 1]);
    }
    j["state_bounds"] = sb;
  }
  j["slack_bounds"] = {{"p_min", bd.slack_lo[0]},
                       {"p_max", bd.slack_hi[0]},
                       {"q_min", bd.slack_lo[1]},
                       {"q_max", bd.slack_hi[1]}};
  return j.dump(indent);
}

CaseProblem problem_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON network: ") + e.what(), 0);
  }
  try {
    NetworkSpec spec;
    spec.base_mva = j.value("base_mva", 100.0);
    spec.base_kv = j.value("base_kv", 230.0);
    spec.slack_voltage = j.value("slack_voltage", 1.0);
    const auto& buses = j.at("buses");
    const int n = static_cast<int>(buses.size());
    spec.n_buses = n;
    spec.p_demand = Vector(n);
    spec.q_demand = Vector(n);
    std::map<int, int> index;
    std::vector<int> ids(n);
    for (int k = 0; k < n; ++k) {
      ids[k] = buses[k].at("id").get<int>();
      if (!index.emplace(ids[k], k).second) throw ParseError("duplicate bus id in JSON", 0);
      spec.p_demand[k] = buses[k].value("p_demand", 0.0);
      spec.q_demand[k] = buses[k].value("q_demand", 0.0);
    }
    auto bus_at = [&](const json& v) {
      auto it = index.find(v.get<int>());
      if (it == index.end()) throw ParseError("JSON references an unknown bus", 0);
      return it->second;
    };

    std::vector<std::pair<Line, Admittance>> lines;
    for (const auto& l : j.at("lines")) {
      Line line{bus_at(l.at("from")), bus_at(l.at("to"))};
      if (line.from > line.to) std::swap(line.from, line.to);
      lines.push_back({line, {l.at("g").get<double>(), l.at("b").get<double>()}});
    }
    std::sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) {
      return std::pair(a.first.from, a.first.to) < std::pair(b.first.from, b.first.to);
    });
    Vector y(2 * lines.size());
    for (size_t i = 0; i < lines.size(); ++i) {
      spec.lines.push_back(lines[i].first);
      y[2 * i] = lines[i].second.g;
      y[2 * i + 1] = lines[i].second.b;
    }

    struct Gen {
      int bus;
      json data;
    };
    std::vector<Gen> gens;
    for (const auto& g : j.value("generators", json::array())) gens.push_back({bus_at(g.at("bus")), g});
    std::sort(gens.begin(), gens.end(), [](const Gen& a, const Gen& b) { return a.bus < b.bus; });
    spec.generators.push_back(0);
    const int nu = 2 * static_cast<int>(gens.size());
    Vector u(nu);
    bool has_u_bounds = !gens.empty() && gens.front().data.contains("p_min");
    if (has_u_bounds) {
      spec.bounds.u_lo.resize(nu);
      spec.bounds.u_hi.resize(nu);
    }
    for (size_t s = 0; s < gens.size(); ++s) {
      if (gens[s].bus == 0) throw ParseError("JSON generators must exclude the slack bus", 0);
      spec.generators.push_back(gens[s].bus);
      u[2 * s] = gens[s].data.value("p", 0.0);
      u[2 * s + 1] = gens[s].data.value("q", 0.0);
      if (has_u_bounds) {
        spec.bounds.u_lo[2 * s] = gens[s].data.at("p_min").get<double>();
        spec.bounds.u_hi[2 * s] = gens[s].data.at("p_max").get<double>();
        spec.bounds.u_lo[2 * s + 1] = gens[s].data.at("q_min").get<double>();
        spec.bounds.u_hi[2 * s + 1] = gens[s].data.at("q_max").get<double>();
      }
    }
    if (j.contains("state_bounds")) {
      const auto& sb = j["state_bounds"];
      const int nx = 2 * (n - 1);
      spec.bounds.x_lo.resize(nx);
      spec.bounds.x_hi.resize(nx);
      for (int k = 1; k < n; ++k) {
        spec.bounds.x_lo[2 * (k - 1)] = sb.at("v_min").at(k - 1).get<double>();
        spec.bounds.x_hi[2 * (k - 1)] = sb.at("v_max").at(k - 1).get<double>();
        spec.bounds.x_lo[2 * (k - 1) + 1] = sb.at("theta_min").at(k - 1).get<double>();
        spec.bounds.x_hi[2 * (k - 1) + 1] = sb.at("theta_max").at(k - 1).get<double>();
      }
    }
    if (j.contains("slack_bounds")) {
      const auto& s = j["slack_bounds"];
      spec.bounds.slack_lo << s.at("p_min").get<double>(), s.at("q_min").get<double>();
      spec.bounds.slack_hi << s.at("p_max").get<double>(), s.at("q_max").get<double>();
    }
    return CaseProblem{Network(std::move(spec)), AdmittanceParams(std::move(y)),
                       GeneratorInput(std::move(u)), std::move(ids), {}};
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON network: ") + e.what(), 0);
  }
}

CaseProblem load_problem(const std::filesystem::path& path, const CaseOptions& options) {
  if (path.extension() == ".json") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open network file " + path.string(), 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return problem_from_json(ss.str());
  }
  return build_problem(parse_case(path), options);
}

}  // namespace oedgrid
