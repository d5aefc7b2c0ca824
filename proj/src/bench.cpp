#include "lssem/bench.hpp"

#include "lssem/examples.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace lssem {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("bad value for " + key + ": '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw ConfigError("bad value for " + key + ": '" + text + "'");
}

std::vector<int> parse_orders(const std::string& text) {
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const int lo = parse_number<int>("W", trim(text.substr(0, dots)));
    const int hi = parse_number<int>("W", trim(text.substr(dots + 2)));
    if (hi < lo) throw ConfigError("empty W range: " + text);
    std::vector<int> out;
    for (int w = lo; w <= hi; ++w) out.push_back(w);
    return out;
  }
  std::string spaced = text;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  std::istringstream in(spaced);
  std::vector<int> out;
  for (std::string tok; in >> tok;) out.push_back(parse_number<int>("W", tok));
  return out;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (example.empty()) throw ConfigError("example id missing");
  if (!(nu1 > 0.0) || !(nu2 > 0.0)) throw ConfigError("viscosities must be positive");
  if (orders.empty()) throw ConfigError("W list is empty");
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (orders[i] < 2) throw ConfigError("W values must be at least 2");
    if (orders[i] > kMaxOrder) throw ConfigError("W value above " + std::to_string(kMaxOrder));
    if (i > 0 && orders[i] <= orders[i - 1]) throw ConfigError("W list must be strictly increasing");
  }
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw ConfigError("tol must lie in (0, 1)");
  if (max_iterations < 1) throw ConfigError("maxit must be positive");
  if (variant != 0 && variant != 2 && variant != 3) throw ConfigError("variant must be 0, 2 or 3");
  if (metric_extra_degree < 0) throw ConfigError("metric_extra_degree must be non-negative");
  if (orders.back() + metric_extra_degree > kMaxOrder) {
    throw ConfigError("W + metric_extra_degree exceeds " + std::to_string(kMaxOrder));
  }
}

RunConfig parse_config(std::istream& in) {
  RunConfig c;
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
      {"example", [&](auto&, auto& v) { c.example = v; }},
      {"nu1", [&](auto& k, auto& v) { c.nu1 = parse_number<double>(k, v); }},
      {"nu2", [&](auto& k, auto& v) { c.nu2 = parse_number<double>(k, v); }},
      {"W", [&](auto&, auto& v) { c.orders = parse_orders(v); }},
      {"tol", [&](auto& k, auto& v) { c.tolerance = parse_number<double>(k, v); }},
      {"maxit", [&](auto& k, auto& v) { c.max_iterations = parse_number<int>(k, v); }},
      {"variant", [&](auto& k, auto& v) { c.variant = parse_number<int>(k, v); }},
      {"output_dir", [&](auto&, auto& v) { c.output_dir = v; }},
      {"seed", [&](auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"metric_extra_degree",
       [&](auto& k, auto& v) { c.metric_extra_degree = parse_number<int>(k, v); }},
      {"record_seconds", [&](auto& k, auto& v) { c.record_seconds = parse_bool(k, v); }},
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key: " + key);
    if (value.empty()) throw ConfigError("empty value for " + key);
    it->second(key, value);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in);
}

std::string csv_row(const SweepRow& row, bool record_seconds) {
  std::ostringstream out;
  out << row.order << ',' << fmt("%.6e", row.errors.e_u) << ',' << fmt("%.6e", row.errors.e_p)
      << ',' << fmt("%.6e", row.errors.e_c) << ',' << row.report.iterations << ','
      << fmt("%.6e", row.report.relative_residual) << ','
      << fmt("%.3f", record_seconds ? row.report.seconds : 0.0);
  return out.str();
}

ProblemSpec config_problem(const RunConfig& config) {
  if (config.example == "custom") {
    throw ConfigError("custom problems are supplied through the library API");
  }
  const auto& ids = builtin_problem_ids();
  if (std::find(ids.begin(), ids.end(), config.example) == ids.end()) {
    throw ConfigError("unknown example id: " + config.example);
  }
  return builtin_problem(config.example, config.nu1, config.nu2);
}

SweepRow run_order(const Mesh& mesh, const ProblemSpec& problem, const RunConfig& config,
                   int order) {
  PcgOptions options;
  options.tolerance = config.tolerance;
  options.max_iterations = config.max_iterations;
  SolveResult solved =
      solve_problem(mesh, problem, order, config.variant, options, config.metric_extra_degree);
  SweepRow row;
  row.order = order;
  row.report = solved.report;
  const Vector corrected = make_conforming(mesh, order, solved.solution);
  if (problem.exact) {
    ErrorOptions eo;
    eo.align_pressure = problem.pin_pressure;
    row.errors = compute_errors(mesh, order, corrected, solved.solution, problem, eo);
  } else {
    const double nan = std::nan("");
    row.errors = {nan, nan, std::sqrt(field_norms(mesh, order, corrected).divergence_l2_sq),
                  std::sqrt(field_norms(mesh, order, solved.solution).divergence_l2_sq)};
  }
  return row;
}

SweepResult run_sweep(const RunConfig& config, const ProblemSpec* custom) {
  config.validate();
  const ProblemSpec problem = custom ? *custom : config_problem(config);
  const Mesh mesh = build_mesh(problem);

  std::filesystem::create_directories(config.output_dir);
  std::ofstream csv(config.output_dir / "errors.csv");
  if (!csv) throw ConfigError("cannot write to " + config.output_dir.string());
  csv << kCsvHeader << '\n' << std::flush;

  SweepResult result;
  for (int order : config.orders) {
    try {
      result.rows.push_back(run_order(mesh, problem, config, order));
    } catch (const std::runtime_error& e) {
      result.failure = "W=" + std::to_string(order) + ": " + e.what();
      result.exit_code = kExitNonconvergence;
      break;
    }
    csv << csv_row(result.rows.back(), config.record_seconds) << '\n' << std::flush;
    if (!result.rows.back().report.converged) result.exit_code = kExitNonconvergence;
  }

  if (result.rows.size() >= 3) {
    std::vector<int> w;
    std::vector<double> eu, ep;
    for (const auto& r : result.rows) {
      w.push_back(r.order);
      eu.push_back(r.errors.e_u);
      ep.push_back(r.errors.e_p);
    }
    result.slope_u = fit_log_slope(w, eu);
    result.slope_p = fit_log_slope(w, ep);
  }

  std::ofstream plot(config.output_dir / "plot.dat");
  plot << "# W log10_E_u log10_E_p\n";
  for (const auto& r : result.rows) {
    plot << r.order << ' ' << fmt("%.6f", std::log10(r.errors.e_u)) << ' '
         << fmt("%.6f", std::log10(r.errors.e_p)) << '\n';
  }
  std::ofstream(config.output_dir / "report.json") << sweep_report(config, result) << '\n';
  return result;
}

std::string sweep_report(const RunConfig& config, const SweepResult& result) {
  using nlohmann::ordered_json;
  const auto number = [](double v) -> ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  ordered_json j;
  j["config"] = {{"example", config.example},
                 {"nu1", config.nu1},
                 {"nu2", config.nu2},
                 {"W", config.orders},
                 {"tol", config.tolerance},
                 {"maxit", config.max_iterations},
                 {"variant", config.variant},
                 {"seed", config.seed},
                 {"metric_extra_degree", config.metric_extra_degree}};
  ordered_json rows = ordered_json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"W", r.order},
                    {"E_u_H1", number(r.errors.e_u)},
                    {"E_p_L2", number(r.errors.e_p)},
                    {"E_c_L2", number(r.errors.e_c)},
                    {"E_c_L2_nonconforming", number(r.errors.e_c_raw)},
                    {"iters", r.report.iterations},
                    {"rel_residual", r.report.relative_residual},
                    {"precond_residual", r.report.preconditioned_residual},
                    {"functional", r.report.functional},
                    {"converged", r.report.converged},
                    {"seconds", r.report.seconds},
                    {"message", r.report.message}});
  }
  j["runs"] = rows;
  const auto slope = [&](const std::optional<SlopeFit>& s) -> ordered_json {
    if (!s) return nullptr;
    return {{"slope", s->slope}, {"intercept", s->intercept}, {"converging", s->converging}};
  };
  if (result.rows.size() >= 3) {
    j["slope_log10_E_u"] = slope(result.slope_u);
    j["slope_log10_E_p"] = slope(result.slope_p);
  }
  if (!result.failure.empty()) j["failure"] = result.failure;
  j["exit_code"] = result.exit_code;
  return j.dump(2);
}

}  // namespace lssem
