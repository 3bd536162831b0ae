// locc: command-line front end for the detection, search, simulation and
// estimation library.
//
// Exit codes: 0 success, 1 validation violations, 2 bad input, 3 solver
// failure.

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "locc/detection.hpp"
#include "locc/error.hpp"
#include "locc/gap_search.hpp"
#include "locc/io.hpp"
#include "locc/reference_tables.hpp"
#include "locc/simulator.hpp"

using nlohmann::json;
using namespace locc;

namespace {

constexpr int kExitViolations = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitSolver = 3;

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[digest[k] >> 4]);
    out.push_back(hex[digest[k] & 15]);
  }
  return out;
}

const std::vector<std::string> kBundledFiles = {
    "joint_instructions.csv", "decision_probabilities.csv", "locc_px.csv",        "locc_py_given_ax.csv",
    "lo_pxy.csv",           "merged_px.csv",     "merged_pyprime_given_ax.csv",
};

class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

  json params = json::object();
  std::optional<std::uint64_t> seed;

  void input(const std::string& path) {
    inputs_.push_back({{"path", path}, {"sha256", sha256_hex(io::read_file(path))}});
  }
  void reference_inputs() {
    for (const auto& f : kBundledFiles) input(io::data_dir() + "/" + f);
  }

  void write(const std::string& path) const {
    json doc{{"command", command_},
             {"params", params},
             {"version", LOCC_VERSION},
             {"inputs", inputs_},
             {"duration_seconds",
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()}};
    doc["seed"] = seed ? json(*seed) : json(nullptr);
    io::write_file(path, doc.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  json inputs_ = json::array();
};

// Writes to `out` (plus a sidecar manifest) or to stdout.
void emit(const std::string& out, const std::string& text, const Manifest& m) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  io::write_file(out, text);
  m.write(out + ".manifest.json");
}

std::string default_state_path() { return io::data_dir() + "/optimized_state.json"; }

DensityMatrix load_state(std::string& path, Manifest& m) {
  if (path.empty()) path = default_state_path();
  m.input(path);
  return read_state_file(path);
}

MeasurementModel bases_named(const std::string& name) {
  if (name == "calibrated") return standard_bases();
  if (name == "uncalibrated") return uncalibrated_bases();
  throw InvalidInput("unknown bases '" + name + "' (expected calibrated or uncalibrated)");
}

struct InstructionSource {
  std::string file;
  bool bundled = false;
  std::string scenario = "lo";
};

InstructionSet load_instructions(const InstructionSource& src, Manifest& m) {
  if (src.bundled == !src.file.empty()) throw InvalidInput("give exactly one of --instructions or --paper-tables");
  if (src.bundled) {
    m.reference_inputs();
    const ReferenceTables t = load_reference_tables();
    return parse_scenario(src.scenario) == Scenario::lo ? t.lo : t.locc;
  }
  m.input(src.file);
  return read_instructions_file(src.file);
}

double tolerance_for(const InstructionSource& src, std::optional<double> tol) {
  if (tol) return *tol;
  return src.bundled ? kReferenceTableTol : 1e-6;
}

void add_source_options(CLI::App* cmd, InstructionSource& src) {
  cmd->add_option("--instructions", src.file, "instruction set JSON file");
  cmd->add_flag("--paper-tables", src.bundled, "use the bundled reference tables");
  cmd->add_option("--scenario", src.scenario, "lo or 1locc")->check(CLI::IsMember({"lo", "1locc"}));
}

json source_json(const InstructionSource& src) {
  return {{"instructions", src.file}, {"bundled_tables", src.bundled}, {"scenario", src.scenario}};
}

// --- solve ---------------------------------------------------------------------

struct SolveArgs {
  std::string state, scenario = "lo", bound = "outer", bases = "calibrated", out;
  double p1 = 0.0;
  int samples = 10000;
  std::uint64_t seed = 0;
};

int cmd_solve(SolveArgs a) {
  Manifest m("solve");
  const DensityMatrix rho = load_state(a.state, m);
  const MeasurementModel mm = bases_named(a.bases);
  const Scenario scenario = parse_scenario(a.scenario);
  const BoundType bound = parse_bound(a.bound);
  m.params = {{"state", a.state}, {"p1", a.p1},       {"scenario", a.scenario}, {"bound", a.bound},
              {"bases", a.bases}, {"samples", a.samples}, {"seed", a.seed}};
  m.seed = a.seed;
  DetectionResult r;
  if (bound == BoundType::outer_sdp) {
    r = solve_detection(rho, mm, a.p1, scenario);
  } else {
    if (a.samples < 1) throw InvalidInput("--samples must be at least 1");
    r = solve_inner_lp(rho, mm, a.p1, sample_product_states(a.samples, a.seed), scenario);
  }
  emit(a.out, detection_result_to_json(r) + "\n", m);
  if (!r.ok()) {
    std::cerr << "solver finished with status " << conic::to_string(r.status) << "\n";
    return kExitSolver;
  }
  return 0;
}

// --- curve ---------------------------------------------------------------------

struct CurveArgs {
  std::string state, scenario = "lo", bound = "outer", bases = "calibrated", out;
  int grid = 100, samples = 10000, threads = 0;
  std::uint64_t seed = 0;
};

int cmd_curve(CurveArgs a) {
  Manifest m("curve");
  const DensityMatrix rho = load_state(a.state, m);
  const MeasurementModel mm = bases_named(a.bases);
  const Scenario scenario = parse_scenario(a.scenario);
  const BoundType bound = parse_bound(a.bound);
  if (a.grid < 2) throw InvalidInput("--grid must be at least 2");
  m.params = {{"state", a.state}, {"scenario", a.scenario}, {"bound", a.bound}, {"bases", a.bases},
              {"grid", a.grid},   {"samples", a.samples},   {"seed", a.seed}};
  m.seed = a.seed;
  const auto grid = uniform_grid(a.grid);
  TradeoffCurve c;
  if (bound == BoundType::outer_sdp) {
    c = tradeoff_curve(rho, mm, scenario, grid, a.threads);
  } else {
    if (a.samples < 1) throw InvalidInput("--samples must be at least 1");
    c = inner_tradeoff_curve(rho, mm, scenario, grid, sample_product_states(a.samples, a.seed), a.threads);
  }
  emit(a.out, curve_to_csv(c), m);
  for (std::size_t k = 0; k < c.status.size(); ++k) {
    if (c.status[k] != conic::SolverStatus::optimal && c.status[k] != conic::SolverStatus::near_optimal) {
      std::cerr << "solver failed at p1 = " << c.p1_grid[k] << " (" << conic::to_string(c.status[k]) << ")\n";
      return kExitSolver;
    }
  }
  return 0;
}

// --- gap-search ----------------------------------------------------------------

struct GapArgs {
  std::string config, out, bases = "calibrated";
  std::optional<std::uint64_t> seed;
};

int cmd_gap_search(const GapArgs& a) {
  Manifest m("gap-search");
  m.input(a.config);
  SearchConfig cfg = parse_search_config(io::read_file(a.config));
  if (a.seed) cfg.seed = *a.seed;
  const MeasurementModel mm = bases_named(a.bases);
  m.params = {{"config", a.config},
              {"bases", a.bases},
              {"restarts", cfg.restarts},
              {"iterations", cfg.iterations},
              {"optimizer", to_string(cfg.optimizer)},
              {"step", cfg.step},
              {"perturbation", cfg.initial_perturbation}};
  m.seed = cfg.seed;
  const SearchResult r = search(cfg, mm);
  std::filesystem::create_directories(a.out);
  io::write_file(a.out + "/trace.csv", trace_to_csv(r.trace));
  json best = json::parse(params_to_json(r.best));
  best["p2_lo"] = r.best_eval.p2_lo;
  best["p2_locc"] = r.best_eval.p2_locc;
  best["gap"] = r.best_eval.gap;
  io::write_file(a.out + "/best.json", best.dump(2) + "\n");
  m.write(a.out + "/manifest.json");
  std::cout << "best gap " << io::format_double(r.best_eval.gap) << " after " << r.trace.entries.size()
            << " evaluations\n";
  return 0;
}

// --- simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::string state, bases = "calibrated", out, replay, write_tables;
  InstructionSource src;
  bool shuffled = false;
  std::uint64_t rounds = 0, seed = 0;
  std::optional<double> tol, merge_weight;
  std::size_t table_length = 0;
  int threads = 1;
};

int cmd_simulate(SimulateArgs a) {
  Manifest m("simulate");
  const DensityMatrix rho = load_state(a.state, m);
  const MeasurementModel mm = bases_named(a.bases);
  if (a.rounds == 0) throw InvalidInput("--rounds must be at least 1");
  const double tol = tolerance_for(a.src, a.tol);
  m.params = source_json(a.src);
  m.params.update(json{{"state", a.state},
                       {"bases", a.bases},
                       {"rounds", a.rounds},
                       {"shuffled", a.shuffled},
                       {"tol", tol},
                       {"replay", a.replay},
                       {"merge_weight", a.merge_weight ? json(*a.merge_weight) : json(nullptr)}});
  m.seed = a.seed;
  json summary{{"rounds", a.rounds}, {"seed", a.seed}};
  std::string records;

  if (a.shuffled) {
    if (!a.src.bundled) throw InvalidInput("--shuffled needs --paper-tables");
    m.reference_inputs();
    const ReferenceTables t = load_reference_tables();
    const MergedInstructionSet merged = a.merge_weight ? merge_shuffled(t.lo, t.locc, *a.merge_weight) : t.merged;
    ShuffledResult r;
    if (!a.replay.empty()) {
      r = run_shuffled_replay(rho, mm, merged, read_rng_tables(a.replay), a.rounds, a.seed, tol);
    } else {
      r = run_shuffled(rho, mm, merged, a.rounds, a.seed, tol);
    }
    if (!a.write_tables.empty()) {
      const std::size_t len = a.table_length ? a.table_length : a.rounds;
      write_rng_tables(generate_rng_tables(merged, a.seed, {len, len, len}), a.write_tables);
    }
    std::vector<std::uint64_t> x_count(t.shape.settings, 0);
    for (const RoundRecord& rec : r.records) ++x_count[rec.x];
    std::vector<double> x_freq;
    for (std::uint64_t n : x_count) x_freq.push_back(static_cast<double>(n) / static_cast<double>(a.rounds));
    summary["mode"] = "shuffled";
    summary["lo_rounds"] = r.lo_rounds;
    summary["locc_rounds"] = r.locc_rounds;
    summary["p2_lo"] = r.p2_lo ? json(*r.p2_lo) : json(nullptr);
    summary["p2_locc"] = r.p2_locc ? json(*r.p2_locc) : json(nullptr);
    summary["x_frequencies"] = x_freq;
    summary["pm_x"] = merged.pm_x;
    records = records_to_csv(r.records);
  } else {
    const InstructionSet instr = load_instructions(a.src, m);
    const SimulationResult r = run_rounds(rho, mm, instr, a.rounds, a.seed, tol, a.threads);
    const double exact = (assemble_povm(instr, mm, tol).m_n * rho.mat()).trace().real();
    std::uint64_t no = 0;
    for (const RoundRecord& rec : r.records) no += rec.verdict == Verdict::no;
    summary["mode"] = to_string(instr.scenario);
    summary["n_count"] = no;
    summary["empirical_p2"] = r.empirical_p2;
    summary["exact_p2"] = exact;
    summary["standard_error"] = std::sqrt(std::max(0.0, exact * (1.0 - exact)) / static_cast<double>(a.rounds));
    summary["resampled"] = r.resampled;
    records = records_to_csv(r.records);
  }

  if (a.out.empty()) {
    std::cout << summary.dump(2) << "\n";
    return 0;
  }
  std::filesystem::create_directories(a.out);
  io::write_file(a.out + "/records.csv", records);
  io::write_file(a.out + "/summary.json", summary.dump(2) + "\n");
  m.write(a.out + "/manifest.json");
  return 0;
}

// --- expectations / estimate -------------------------------------------------

struct ExpectationArgs {
  std::string state, bases = "calibrated", out;
  InstructionSource src;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

int cmd_expectations(ExpectationArgs a) {
  Manifest m("expectations");
  const DensityMatrix rho = load_state(a.state, m);
  const MeasurementModel mm = bases_named(a.bases);
  const InstructionSet instr = load_instructions(a.src, m);
  m.params = source_json(a.src);
  m.params.update(json{{"state", a.state}, {"bases", a.bases}, {"noise", a.noise}});
  m.seed = a.seed;
  ExpectationData data = exact_expectations(rho, mm, instruction_support(instr));
  if (a.noise > 0.0) data = perturb_expectations(data, a.noise, a.seed);
  emit(a.out, expectations_to_csv(data), m);
  return 0;
}

struct EstimateArgs {
  std::string expectations, bases = "calibrated", out;
};

int cmd_estimate(const EstimateArgs& a) {
  Manifest m("estimate");
  m.input(a.expectations);
  m.params = {{"expectations", a.expectations}, {"bases", a.bases}};
  const ExpectationData data = read_expectations_csv(a.expectations);
  const EstimateResult r = estimate_state(data, bases_named(a.bases));
  json doc = json::parse(state_to_json(r.rho));
  doc["residual"] = r.residual;
  doc["status"] = conic::to_string(r.status);
  doc["entries"] = data.entries.size();
  doc["min_eigenvalue"] = min_eigenvalue(r.rho.mat());
  emit(a.out, doc.dump(2) + "\n", m);
  return 0;
}

// --- validate ------------------------------------------------------------------

struct ValidateArgs {
  InstructionSource src;
  std::optional<double> tol;
  bool cross_check = false;
  std::string out;
};

int cmd_validate(const ValidateArgs& a) {
  Manifest m("validate");
  const double tol = tolerance_for(a.src, a.tol);
  m.params = source_json(a.src);
  m.params.update(json{{"tol", tol}, {"cross_check", a.cross_check}});
  std::string report;
  std::size_t problems = 0;

  if (a.cross_check) {
    if (!a.src.bundled) throw InvalidInput("--cross-check needs --paper-tables");
    m.reference_inputs();
    const ReferenceTables t = load_reference_tables();
    const Shape sh = t.shape;
    for (const auto& [name, stored, rebuilt] :
         {std::tuple{"LO", &t.lo, recombine_lo(t)}, std::tuple{"1LOCC", &t.locc, recombine_locc(t)}}) {
      double worst = 0.0;
      std::string worst_at;
      for (int x = 0; x < sh.settings; ++x)
        for (int y = 0; y < sh.settings; ++y)
          for (int aa = 0; aa < sh.outcomes; ++aa)
            for (int b = 0; b < sh.outcomes; ++b) {
              const int k = sh.n_index(x, y, aa, b);
              const double d = std::abs(stored->n_table[k] - rebuilt.n_table[k]);
              if (d > worst) {
                worst = d;
                worst_at = "x=" + std::to_string(x + 1) + " y=" + std::to_string(y + 1) +
                           " a=" + std::to_string(aa + 1) + " b=" + std::to_string(b + 1);
              }
            }
      const bool bad = worst > tol;
      problems += bad;
      report += std::string("cross-check ") + name + ": max |recombined - stored| = " + io::format_double(worst) +
                (worst_at.empty() ? "" : " at " + worst_at) + (bad ? "  VIOLATION\n" : "  ok\n");
    }
  } else {
    const InstructionSet instr = load_instructions(a.src, m);
    const auto violations = validate(instr, tol);
    problems = violations.size();
    for (const Violation& v : violations) report += v.describe() + "\n";
    report += to_string(instr.scenario) + ": " + std::to_string(violations.size()) + " violation(s) at tol " +
              io::format_double(tol) + "\n";
  }
  emit(a.out, report, m);
  return problems ? kExitViolations : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement detection under local operations and one-way LOCC"};
  app.set_version_flag("--version", std::string(LOCC_VERSION));
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "optimal p2 at one false-positive level");
  s->add_option("--state", solve.state, "state JSON (default: bundled optimized state)");
  s->add_option("--p1", solve.p1, "false-positive level")->required();
  s->add_option("--scenario", solve.scenario, "lo or 1locc")->check(CLI::IsMember({"lo", "1locc"}));
  s->add_option("--bound", solve.bound, "outer or inner")->check(CLI::IsMember({"outer", "inner"}));
  s->add_option("--samples", solve.samples, "product states for the inner bound");
  s->add_option("--seed", solve.seed);
  s->add_option("--bases", solve.bases, "calibrated or uncalibrated");
  s->add_option("--out", solve.out, "output JSON (default stdout)");

  CurveArgs curve;
  auto* c = app.add_subcommand("curve", "p2 over a uniform p1 grid");
  c->add_option("--state", curve.state);
  c->add_option("--scenario", curve.scenario)->check(CLI::IsMember({"lo", "1locc"}));
  c->add_option("--grid", curve.grid, "grid points including both endpoints");
  c->add_option("--bound", curve.bound)->check(CLI::IsMember({"outer", "inner"}));
  c->add_option("--samples", curve.samples);
  c->add_option("--seed", curve.seed);
  c->add_option("--threads", curve.threads);
  c->add_option("--bases", curve.bases);
  c->add_option("--out", curve.out, "output CSV (default stdout)");

  GapArgs gap;
  auto* g = app.add_subcommand("gap-search", "maximize the 1-LOCC advantage over preparable states");
  g->add_option("--config", gap.config, "search config JSON")->required();
  g->add_option("--out", gap.out, "output directory")->required();
  g->add_option("--seed", gap.seed, "overrides the config seed");
  g->add_option("--bases", gap.bases);

  SimulateArgs sim;
  auto* r = app.add_subcommand("simulate", "Monte Carlo detection rounds");
  r->add_option("--state", sim.state);
  add_source_options(r, sim.src);
  r->add_flag("--shuffled", sim.shuffled, "interleave LO and 1-LOCC rounds via the merged tables");
  r->add_option("--rounds", sim.rounds)->required();
  r->add_option("--seed", sim.seed);
  r->add_option("--tol", sim.tol, "table validation tolerance");
  r->add_option("--threads", sim.threads);
  r->add_option("--merge-weight", sim.merge_weight, "rebuild the merged tables with this LO share");
  r->add_option("--replay", sim.replay, "directory of random-number tables to consume");
  r->add_option("--write-tables", sim.write_tables, "directory to write random-number tables to");
  r->add_option("--table-length", sim.table_length, "digits per written table (default: rounds)");
  r->add_option("--bases", sim.bases);
  r->add_option("--out", sim.out, "output directory (default: summary to stdout)");

  ExpectationArgs ex;
  auto* e = app.add_subcommand("expectations", "exact (optionally noisy) expectation values on a table support");
  e->add_option("--state", ex.state);
  add_source_options(e, ex.src);
  e->add_option("--noise", ex.noise, "standard deviation of added Gaussian noise");
  e->add_option("--seed", ex.seed);
  e->add_option("--bases", ex.bases);
  e->add_option("--out", ex.out);

  EstimateArgs est;
  auto* t = app.add_subcommand("estimate", "least-squares state estimate from expectation values");
  t->add_option("--expectations", est.expectations, "CSV a,b,x,y,value")->required();
  t->add_option("--bases", est.bases);
  t->add_option("--out", est.out);

  ValidateArgs val;
  auto* v = app.add_subcommand("validate", "check instruction-set constraints");
  add_source_options(v, val.src);
  v->add_option("--tol", val.tol);
  v->add_flag("--cross-check", val.cross_check, "recombine the factor tables and diff against the joint table");
  v->add_option("--out", val.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitBadInput;
  }

  try {
    if (s->parsed()) return cmd_solve(solve);
    if (c->parsed()) return cmd_curve(curve);
    if (g->parsed()) return cmd_gap_search(gap);
    if (r->parsed()) return cmd_simulate(sim);
    if (e->parsed()) return cmd_expectations(ex);
    if (t->parsed()) return cmd_estimate(est);
    if (v->parsed()) return cmd_validate(val);
  } catch (const InvalidInput& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitBadInput;
  } catch (const SolverError& err) {
    std::cerr << "solver error: " << err.what() << "\n";
    return kExitSolver;
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitBadInput;
  }
  return kExitBadInput;
}
