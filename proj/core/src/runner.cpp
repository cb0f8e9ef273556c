#include "rpinn/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rpinn/baseline.hpp"
#include "rpinn/csv.hpp"
#include "rpinn/oracles.hpp"

namespace rpinn {

namespace fs = std::filesystem;

Method parse_method(std::string_view name) {
  if (name == "reduced") return Method::Reduced;
  if (name == "classical") return Method::Classical;
  if (name == "bdf") return Method::Bdf;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected reduced, classical or bdf)");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Classical:
      return "classical";
    case Method::Bdf:
      return "bdf";
    case Method::Reduced:
      break;
  }
  return "reduced";
}

namespace {

std::string trimmed(std::string s) {
  boost::algorithm::trim(s);
  return s;
}

double to_double(const std::string& key, const std::string& text) {
  const std::string s = trimmed(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("'" + key + "' expects a number, got '" + s + "'");
  return v;
}

std::size_t to_size(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v < 0.0 || v != std::floor(v)) throw ConfigError("'" + key + "' expects a non-negative integer");
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string s = boost::algorithm::to_lower_copy(trimmed(text));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("'" + key + "' expects a boolean, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  const std::string s = trimmed(text);
  if (s.empty()) return parts;
  boost::algorithm::split(parts, s, boost::is_any_of(","));
  for (auto& p : parts) p = trimmed(p);
  return parts;
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split_list(text)) out.push_back(to_double(key, p));
  if (out.empty()) throw ConfigError("'" + key + "' expects a comma-separated list of numbers");
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& p : split_list(text)) out.push_back(to_size(key, p));
  if (out.empty()) throw ConfigError("'" + key + "' expects a comma-separated list of integers");
  return out;
}

struct Resolved {
  ProblemInstance instance;
  SegmentPlan plan;
  BdfConfig bdf;
  ClassicalPinnConfig classical;
};

ProblemInstance load_problem(const RunConfig& cfg) {
  if (!cfg.inline_problem) return make_problem(cfg.problem, cfg.parameters);
  if (!cfg.parameters.empty()) throw ConfigError("parameter overrides do not apply to inline problems");
  return make_inline_problem(*cfg.inline_problem);
}

Resolved resolve(const RunConfig& cfg) {
  Resolved r{load_problem(cfg), {}, {}, {}};
  const auto& inst = r.instance;
  TrainConfig train = inst.default_plan.per_segment;
  if (cfg.epochs) train.epochs = *cfg.epochs;
  if (cfg.collocation) train.collocation_count = *cfg.collocation;
  if (cfg.learning_rate) train.optimizer.learning_rate = *cfg.learning_rate;
  if (cfg.beta1) train.optimizer.beta1 = *cfg.beta1;
  if (cfg.beta2) train.optimizer.beta2 = *cfg.beta2;
  if (cfg.epsilon) train.optimizer.epsilon = *cfg.epsilon;
  if (cfg.loss_tolerance) train.loss_tolerance = *cfg.loss_tolerance;
  if (cfg.seed) train.seed = *cfg.seed;
  if (cfg.hidden_layers) train.hidden_layers = *cfg.hidden_layers;
  if (cfg.activation) train.activation = *cfg.activation;
  if (cfg.normalize_input) train.normalize_input = *cfg.normalize_input;
  if (cfg.quadrature) train.transfer = *cfg.quadrature;
  train.validate();

  const Interval& domain = problem_domain(inst.problem);
  if (cfg.segments) {
    r.plan = SegmentPlan{*cfg.segments, train};
  } else if (cfg.segment_count) {
    const bool log = cfg.log_spacing.value_or(inst.name == "rober");
    r.plan = log ? SegmentPlan::logarithmic(domain, *cfg.segment_count, train)
                 : SegmentPlan::uniform(domain, *cfg.segment_count, train);
  } else {
    r.plan = SegmentPlan{inst.default_plan.boundaries, train};
    if (cfg.log_spacing && inst.default_plan.segment_count() > 1) {
      const std::size_t m = inst.default_plan.segment_count();
      r.plan = *cfg.log_spacing ? SegmentPlan::logarithmic(domain, m, train) : SegmentPlan::uniform(domain, m, train);
    }
  }
  r.plan.validate();
  if (cfg.max_segments) r.plan = r.plan.truncated(std::min(*cfg.max_segments, r.plan.segment_count()));
  if (r.plan.boundaries.front() != domain.a || r.plan.boundaries.back() > domain.b) {
    throw ConfigError("segment boundaries must start at the problem's initial time and stay inside its domain");
  }

  r.bdf = inst.bdf;
  if (cfg.bdf_order) r.bdf.order = *cfg.bdf_order;
  if (cfg.bdf_step) r.bdf.step_size = *cfg.bdf_step;
  if (cfg.newton_tol) r.bdf.newton_tol = *cfg.newton_tol;
  if (cfg.newton_max_iter) r.bdf.newton_max_iter = *cfg.newton_max_iter;
  r.bdf.validate();

  auto& c = r.classical;
  c.collocation_count = train.collocation_count;
  c.epochs = train.epochs;
  c.optimizer = train.optimizer;
  c.loss_tolerance = train.loss_tolerance;
  c.seed = train.seed;
  c.hidden_layers = train.hidden_layers;
  c.activation = cfg.activation.value_or(Activation::Tanh);
  c.normalize_input = train.normalize_input;
  if (cfg.ic_weights) c.ic_weights = *cfg.ic_weights;
  c.validate();
  return r;
}

FirstOrderSystem as_system(const Problem& problem) {
  if (const auto* sys = std::get_if<FirstOrderSystem>(&problem)) return *sys;
  return to_first_order(std::get<LinearIVP>(problem));
}

// Keep the first `species` columns (drops companion-form derivatives).
StateTable leading_columns(const StateTable& table, std::size_t species) {
  StateTable out;
  out.grid = table.grid;
  out.values.reserve(table.values.size());
  for (const auto& row : table.values) out.values.emplace_back(row.begin(), row.begin() + species);
  return out;
}

void write_convergence(const fs::path& dir, std::size_t index, const TrainReport& report) {
  csv::Table t;
  t.header = {"epoch", "loss", "normalized_loss"};
  const auto norm = report.normalized_history();
  for (std::size_t e = 0; e < report.loss_history.size(); ++e) {
    t.rows.push_back({static_cast<double>(e), report.loss_history[e], norm[e]});
  }
  char name[64];
  std::snprintf(name, sizeof name, "convergence_segment_%03zu.csv", index);
  csv::write(dir / name, t);
}

void write_checkpoints(const fs::path& dir, std::size_t index, const SegmentSolution& seg,
                       const std::vector<std::string>& species) {
  const fs::path ckpt = dir / "checkpoints";
  std::error_code ec;
  fs::create_directories(ckpt, ec);
  if (ec) throw OutputError("cannot create " + ckpt.string() + ": " + ec.message());
  for (std::size_t i = 0; i < seg.nets.size(); ++i) {
    char name[96];
    std::snprintf(name, sizeof name, "segment_%03zu_%s.txt", index, species.at(i).c_str());
    std::ofstream os(ckpt / name);
    if (!os) throw OutputError("cannot write checkpoint " + (ckpt / name).string());
    save_checkpoint(seg.nets[i], os);
  }
}

csv::Table solution_table(const RunResult& r) {
  csv::Table t;
  t.header.push_back("x");
  for (const auto& s : r.species) t.header.push_back(s + "_pred");
  if (r.reference) {
    for (const auto& s : r.species) t.header.push_back(s + "_ref");
    for (const auto& s : r.species) t.header.push_back(s + "_abs_err");
  }
  const std::size_t n = r.species.size();
  for (std::size_t j = 0; j < r.solution.size(); ++j) {
    std::vector<double> row{r.solution.grid[j]};
    for (std::size_t i = 0; i < n; ++i) row.push_back(r.solution.values[j][i]);
    if (r.reference) {
      for (std::size_t i = 0; i < n; ++i) row.push_back(r.reference->values[j][i]);
      for (std::size_t i = 0; i < n; ++i) row.push_back(std::abs(r.solution.values[j][i] - r.reference->values[j][i]));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void error_norms(const StateTable& a, const StateTable& b, std::vector<double>& max_abs, std::vector<double>& l2) {
  const std::size_t n = a.dim();
  max_abs.assign(n, 0.0);
  l2.assign(n, 0.0);
  for (std::size_t j = 0; j < a.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::abs(a.values[j][i] - b.values[j][i]);
      max_abs[i] = std::max(max_abs[i], d);
      l2[i] += d * d;
    }
  }
  for (auto& v : l2) v = a.size() ? std::sqrt(v / static_cast<double>(a.size())) : 0.0;
}

std::string join_numbers(const std::vector<double>& xs) {
  std::vector<std::string> parts;
  for (double x : xs) parts.push_back(csv::format(x));
  return boost::algorithm::join(parts, ",");
}

void write_summary(const fs::path& dir, const RunConfig& cfg, const Resolved& res, const RunResult& r,
                   const std::string& status) {
  std::ofstream os(dir / "summary.txt", std::ios::trunc);
  if (!os) throw OutputError("cannot write " + (dir / "summary.txt").string());
  const auto& train = res.plan.per_segment;
  os << "problem = " << res.instance.name << '\n';
  os << "method = " << to_string(cfg.method) << '\n';
  os << "status = " << status << '\n';
  os << "species = " << boost::algorithm::join(r.species, ",") << '\n';
  os << "points = " << r.solution.size() << '\n';
  os << "has_reference = " << (r.reference ? "true" : "false") << '\n';
  if (r.reference) {
    for (std::size_t i = 0; i < r.species.size(); ++i) {
      os << "max_abs_error." << r.species[i] << " = " << csv::format(r.max_abs_error[i]) << '\n';
      os << "l2_error." << r.species[i] << " = " << csv::format(r.l2_error[i]) << '\n';
    }
  }
  for (std::size_t k = 0; k < r.reports.size(); ++k) {
    os << "segment." << k << ".final_normalized_loss = " << csv::format(r.reports[k].normalized_final_loss())
       << '\n';
  }
  os << "wall_seconds = " << csv::format(r.wall_seconds) << '\n';
  os << "\n[config]\n";
  for (const auto& [k, v] : res.instance.parameters) os << "param." << k << " = " << csv::format(v) << '\n';
  os << "segments = " << join_numbers(res.plan.boundaries) << '\n';
  os << "epochs = " << train.epochs << '\n';
  os << "collocation = " << train.collocation_count << '\n';
  os << "lr = " << csv::format(train.optimizer.learning_rate) << '\n';
  os << "seed = " << train.seed << '\n';
  os << "activation = "
     << to_string(cfg.method == Method::Classical ? res.classical.activation : train.activation) << '\n';
  os << "normalize_input = " << (train.normalize_input ? "true" : "false") << '\n';
  os << "quadrature = " << to_string(train.transfer) << '\n';
  os << "bdf_order = " << res.bdf.order << '\n';
  os << "bdf_step = " << csv::format(res.bdf.step_size) << '\n';
}

std::map<std::string, std::string> read_summary(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out.emplace(trimmed(line.substr(0, eq)), trimmed(line.substr(eq + 1)));
  }
  return out;
}

StateTable sample_reference(const Resolved& res, const StateTable& solution, const RunConfig& cfg) {
  StateTable ref;
  ref.grid = solution.grid;
  if (res.instance.exact) {
    for (double x : solution.grid) ref.values.push_back(res.instance.exact(x));
    return ref;
  }
  const std::size_t steps = (res.plan.per_segment.collocation_count - 1) * std::max<std::size_t>(cfg.reference_refine, 1);
  const StateTable traj = segmented_bdf_reference(res.instance.problem, res.plan.boundaries, res.bdf, steps);
  for (double x : solution.grid) ref.values.push_back(interpolate(traj, x));
  return ref;
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  RunConfig cfg;
  static const std::set<std::string> sections{"problem", "plan", "train", "classical", "bdf", "run"};
  for (const auto& [section, body] : tree) {
    if (!sections.contains(section) || body.empty()) {
      throw ConfigError("unknown config section '" + section + "'");
    }
    for (const auto& [key, node] : body) {
      const std::string value = node.get_value<std::string>();
      const std::string full = section + "." + key;
      if (section == "problem") {
        if (key == "name") {
          cfg.problem = trimmed(value);
        } else if (key == "type") {
          if (trimmed(value) != "linear") throw ConfigError("problem.type must be 'linear'");
          if (!cfg.inline_problem) cfg.inline_problem.emplace();
        } else if (key == "forcing" || key == "domain" || key == "init" || key.starts_with("coeff")) {
          if (!cfg.inline_problem) cfg.inline_problem.emplace();
          auto& spec = *cfg.inline_problem;
          if (key == "forcing") {
            spec.forcing = trimmed(value);
          } else if (key == "domain") {
            const auto d = to_doubles(full, value);
            if (d.size() != 2) throw ConfigError("problem.domain expects 'a, b'");
            spec.domain = {d[0], d[1]};
          } else if (key == "init") {
            spec.init_values = to_doubles(full, value);
          } else {
            const std::size_t i = to_size(full, key.substr(5));
            if (i < 1) throw ConfigError("coefficients are numbered from coeff1");
            if (spec.coeffs.size() < i) spec.coeffs.resize(i);
            spec.coeffs[i - 1] = trimmed(value);
          }
        } else {
          cfg.parameters[key] = to_double(full, value);
        }
      } else if (section == "plan") {
        if (key == "segments") {
          cfg.segments = to_doubles(full, value);
        } else if (key == "count") {
          cfg.segment_count = to_size(full, value);
        } else if (key == "spacing") {
          const std::string s = trimmed(value);
          if (s != "log" && s != "linear") throw ConfigError("plan.spacing must be 'log' or 'linear'");
          cfg.log_spacing = s == "log";
        } else if (key == "max_segments") {
          cfg.max_segments = to_size(full, value);
        } else {
          throw ConfigError("unknown key '" + full + "'");
        }
      } else if (section == "train") {
        if (key == "epochs") cfg.epochs = to_size(full, value);
        else if (key == "collocation") cfg.collocation = to_size(full, value);
        else if (key == "lr") cfg.learning_rate = to_double(full, value);
        else if (key == "beta1") cfg.beta1 = to_double(full, value);
        else if (key == "beta2") cfg.beta2 = to_double(full, value);
        else if (key == "epsilon") cfg.epsilon = to_double(full, value);
        else if (key == "loss_tolerance") cfg.loss_tolerance = to_double(full, value);
        else if (key == "seed") cfg.seed = to_size(full, value);
        else if (key == "hidden") cfg.hidden_layers = to_sizes(full, value);
        else if (key == "activation") cfg.activation = parse_activation(trimmed(value));
        else if (key == "normalize_input") cfg.normalize_input = to_bool(full, value);
        else if (key == "quadrature") cfg.quadrature = parse_transfer_rule(trimmed(value));
        else throw ConfigError("unknown key '" + full + "'");
      } else if (section == "classical") {
        if (key == "ic_weights") cfg.ic_weights = to_doubles(full, value);
        else throw ConfigError("unknown key '" + full + "'");
      } else if (section == "bdf") {
        if (key == "order") cfg.bdf_order = static_cast<int>(to_size(full, value));
        else if (key == "step") cfg.bdf_step = to_double(full, value);
        else if (key == "newton_tol") cfg.newton_tol = to_double(full, value);
        else if (key == "newton_max_iter") cfg.newton_max_iter = to_size(full, value);
        else if (key == "reference_refine") cfg.reference_refine = to_size(full, value);
        else throw ConfigError("unknown key '" + full + "'");
      } else {
        if (key == "method") cfg.method = parse_method(trimmed(value));
        else if (key == "out") cfg.out_dir = trimmed(value);
        else if (key == "save_checkpoints") cfg.save_checkpoints = to_bool(full, value);
        else throw ConfigError("unknown key '" + full + "'");
      }
    }
  }
  return cfg;
}

fs::path output_directory(const RunConfig& cfg) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* env = std::getenv("RPINN_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "rpinn-out";
}

std::vector<double> interpolate(const StateTable& table, double x) {
  if (table.size() == 0) throw ArgumentError("cannot interpolate an empty table");
  if (x <= table.grid.front()) return table.values.front();
  if (x >= table.grid.back()) return table.values.back();
  const auto it = std::upper_bound(table.grid.begin(), table.grid.end(), x);
  const auto hi = static_cast<std::size_t>(it - table.grid.begin());
  const std::size_t lo = hi - 1;
  const double w = (x - table.grid[lo]) / (table.grid[hi] - table.grid[lo]);
  std::vector<double> out(table.dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - w) * table.values[lo][i] + w * table.values[hi][i];
  }
  return out;
}

StateTable segmented_bdf_reference(const Problem& problem, const std::vector<double>& boundaries,
                                   const BdfConfig& cfg, std::size_t min_steps) {
  if (boundaries.size() < 2) throw ArgumentError("reference needs at least one segment");
  const FirstOrderSystem sys = as_system(problem);
  const std::size_t species = network_count(problem);
  StateTable out;
  std::vector<double> state = sys.init_values();
  for (std::size_t k = 0; k + 1 < boundaries.size(); ++k) {
    const Interval seg{boundaries[k], boundaries[k + 1]};
    BdfConfig local = cfg;
    local.step_size = std::min(cfg.step_size, seg.length() / static_cast<double>(std::max<std::size_t>(min_steps, 1)));
    const StateTable part = bdf_integrate(sys.restricted(seg, state), local, seg);
    for (std::size_t j = k == 0 ? 0 : 1; j < part.size(); ++j) {
      out.grid.push_back(part.grid[j]);
      out.values.push_back(part.values[j]);
    }
    state = part.values.back();
  }
  return leading_columns(out, species);
}

RunResult execute(const RunConfig& cfg, std::ostream* log) {
  const auto started = std::chrono::steady_clock::now();
  const Resolved res = resolve(cfg);
  const fs::path dir = output_directory(cfg);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create output directory " + dir.string());

  RunResult result;
  result.out_dir = dir;
  result.species = res.instance.species;
  const auto& problem = res.instance.problem;
  const std::size_t segments = res.plan.segment_count();

  auto progress = [&](std::size_t k, const TrainReport& rep) {
    if (!log) return;
    char line[256];
    std::snprintf(line, sizeof line, "segment %zu/%zu [%.6g, %.6g]: loss %.3e -> %.3e (normalized %.3e), %zu epochs, %.2f s\n",
                  k + 1, segments, rep.segment.a, rep.segment.b, rep.initial_loss, rep.final_loss,
                  rep.normalized_final_loss(), rep.loss_history.size(), rep.wall_seconds);
    *log << line << std::flush;
  };

  auto finish = [&](const std::string& status) {
    if (result.solution.size() > 0) {
      if (cfg.method != Method::Bdf || res.instance.exact) {
        result.reference = sample_reference(res, result.solution, cfg);
        error_norms(result.solution, *result.reference, result.max_abs_error, result.l2_error);
      }
      csv::write(dir / "solution.csv", solution_table(result));
    }
    for (std::size_t k = 0; k < result.reports.size(); ++k) write_convergence(dir, k, result.reports[k]);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_summary(dir, cfg, res, result, status);
  };

  try {
    switch (cfg.method) {
      case Method::Reduced: {
        auto sol = solve_sequential(problem, res.plan, [&](std::size_t k, const SegmentSolution& seg) {
          progress(k, seg.report);
          if (cfg.save_checkpoints) write_checkpoints(dir, k, seg, result.species);
        });
        result.solution = leading_columns(sol.table, result.species.size());
        result.reports = std::move(sol.reports);
        break;
      }
      case Method::Classical: {
        if (const auto* ivp = std::get_if<LinearIVP>(&problem); ivp && ivp->order() != 1) {
          throw ConfigError("the classical baseline is restricted to first-order problems");
        }
        auto sol = solve_classical_sequential(as_system(problem), res.plan.boundaries, res.classical);
        for (std::size_t k = 0; k < sol.reports.size(); ++k) progress(k, sol.reports[k]);
        result.solution = leading_columns(sol.table, result.species.size());
        result.reports = std::move(sol.reports);
        break;
      }
      case Method::Bdf: {
        const Interval span{res.plan.boundaries.front(), res.plan.boundaries.back()};
        const auto traj = bdf_integrate(as_system(problem).restricted(span, problem_initial_values(problem)), res.bdf, span);
        result.solution = leading_columns(traj, result.species.size());
        if (log) *log << "bdf" << res.bdf.order << ": " << traj.size() - 1 << " steps\n";
        break;
      }
    }
  } catch (const SegmentDiverged& e) {
    const auto& partial = e.partial();
    result.solution = leading_columns(partial.table, result.species.size());
    result.reports = partial.reports;
    finish("diverged at segment " + std::to_string(e.segment()));
    throw;
  }
  finish("ok");
  return result;
}

int run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    const auto result = execute(cfg, &log);
    log << "wrote " << (result.out_dir / "solution.csv").string() << '\n';
    for (std::size_t i = 0; i < result.max_abs_error.size(); ++i) {
      log << "  " << result.species[i] << ": max abs error " << csv::format(result.max_abs_error[i]) << ", l2 "
          << csv::format(result.l2_error[i]) << '\n';
    }
    return exit_code::kOk;
  } catch (const UnknownProblem& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kUnknownProblem;
  } catch (const TrainingDiverged& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kDiverged;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kOutputError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kBadConfig;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kBadConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kFailure;
  }
}

RunSource RunSource::parse(std::string_view text) {
  RunSource src;
  std::string s(text);
  constexpr std::string_view suffix = ":reference";
  if (s.size() > suffix.size() && s.ends_with(suffix)) {
    src.use_reference = true;
    s.resize(s.size() - suffix.size());
  }
  src.dir = s;
  return src;
}

ComparisonReport compare_runs(const RunSource& a, const RunSource& b, const fs::path& out_dir) {
  const auto sa = read_summary(a.dir / "summary.txt");
  const auto sb = read_summary(b.dir / "summary.txt");
  auto field = [](const std::map<std::string, std::string>& m, const std::string& key, const fs::path& dir) {
    const auto it = m.find(key);
    if (it == m.end()) throw ConfigError(dir.string() + "/summary.txt lacks '" + key + "'");
    return it->second;
  };
  ComparisonReport report;
  report.problem = field(sa, "problem", a.dir);
  if (field(sb, "problem", b.dir) != report.problem) {
    throw ArgumentError("cannot compare runs of different problems ('" + report.problem + "' vs '" +
                        field(sb, "problem", b.dir) + "')");
  }
  if (field(sa, "species", a.dir) != field(sb, "species", b.dir)) {
    throw ArgumentError("runs disagree on the species list");
  }
  report.species = split_list(field(sa, "species", a.dir));

  auto load = [&](const RunSource& src) {
    const auto table = csv::read(src.dir / "solution.csv");
    StateTable st;
    st.grid = table.column("x");
    st.values.assign(st.grid.size(), std::vector<double>(report.species.size()));
    for (std::size_t i = 0; i < report.species.size(); ++i) {
      const auto col = table.column(report.species[i] + (src.use_reference ? "_ref" : "_pred"));
      for (std::size_t j = 0; j < col.size(); ++j) st.values[j][i] = col[j];
    }
    return st;
  };
  const StateTable ta = load(a);
  const StateTable tb = load(b);

  const std::size_t n = report.species.size();
  csv::Table merged;
  merged.header.push_back("x");
  for (const auto& s : report.species) {
    merged.header.push_back(s + "_a");
    merged.header.push_back(s + "_b");
    merged.header.push_back(s + "_abs_diff");
  }
  report.max_abs_diff.assign(n, 0.0);
  report.l2_diff.assign(n, 0.0);
  std::vector<double> lo(n, std::numeric_limits<double>::infinity()), hi(n, -std::numeric_limits<double>::infinity());
  for (const auto& row : tb.values) {
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], row[i]);
      hi[i] = std::max(hi[i], row[i]);
    }
  }
  for (std::size_t j = 0; j < ta.size(); ++j) {
    const double x = ta.grid[j];
    if (x < tb.grid.front() || x > tb.grid.back()) continue;
    const auto vb = interpolate(tb, x);
    std::vector<double> row{x};
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::abs(ta.values[j][i] - vb[i]);
      row.insert(row.end(), {ta.values[j][i], vb[i], d});
      report.max_abs_diff[i] = std::max(report.max_abs_diff[i], d);
      report.l2_diff[i] += d * d;
    }
    merged.rows.push_back(std::move(row));
    ++report.points;
  }
  if (report.points == 0) throw ArgumentError("the two runs do not overlap in x");
  report.relative_max_diff.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    report.l2_diff[i] = std::sqrt(report.l2_diff[i] / static_cast<double>(report.points));
    const double range = hi[i] - lo[i];
    report.relative_max_diff[i] = range > 0.0 ? report.max_abs_diff[i] / range : report.max_abs_diff[i];
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw OutputError("cannot create output directory " + out_dir.string());
  csv::write(out_dir / "comparison.csv", merged);
  std::ofstream os(out_dir / "comparison_summary.txt", std::ios::trunc);
  if (!os) throw OutputError("cannot write comparison summary in " + out_dir.string());
  os << "problem = " << report.problem << '\n';
  os << "a = " << a.dir.string() << (a.use_reference ? ":reference" : "") << '\n';
  os << "b = " << b.dir.string() << (b.use_reference ? ":reference" : "") << '\n';
  os << "points = " << report.points << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    os << "max_abs_diff." << report.species[i] << " = " << csv::format(report.max_abs_diff[i]) << '\n';
    os << "l2_diff." << report.species[i] << " = " << csv::format(report.l2_diff[i]) << '\n';
    os << "relative_max_diff." << report.species[i] << " = " << csv::format(report.relative_max_diff[i]) << '\n';
  }
  return report;
}

}  // namespace rpinn
