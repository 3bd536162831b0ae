#include "locc/gap_search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "locc/error.hpp"
#include "locc/io.hpp"
#include "locc/reference_tables.hpp"
#include "locc/simulator.hpp"

namespace locc {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Stream purposes for CounterRng.
constexpr std::uint64_t kStartPurpose = 101;
constexpr std::uint64_t kMutationPurpose = 102;

using Point = std::vector<double>;
using Objective = std::function<double(const Point&)>;  // minimized; +inf marks failure

// Nelder-Mead with a hard cap on objective evaluations. x0 is evaluated
// first. `project` maps trial points back into the feasible box.
Point nelder_mead(const Objective& f, Point x0, double step, int budget, const std::function<void(Point&)>& project,
                  double* best_value = nullptr) {
  const std::size_t n = x0.size();
  int used = 0;
  Point best = x0;
  double best_f = std::numeric_limits<double>::infinity();
  auto eval = [&](Point& x) {
    project(x);
    ++used;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best = x;
    }
    return v;
  };

  std::vector<Point> simplex{x0};
  std::vector<double> values{eval(simplex[0])};
  for (std::size_t i = 0; i < n && used < budget; ++i) {
    Point v = x0;
    v[i] += step;
    values.push_back(eval(v));
    simplex.push_back(v);
  }
  if (simplex.size() < n + 1) {
    if (best_value) *best_value = best_f;
    return best;
  }

  std::vector<std::size_t> order(n + 1);
  while (used < budget) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t worst = order[n];
    const std::size_t second = order[n - 1];
    const std::size_t lowest = order[0];

    Point centroid(n, 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == worst) continue;
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i] / static_cast<double>(n);
    }
    auto along = [&](double t) {
      Point p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (simplex[worst][i] - centroid[i]);
      return p;
    };

    Point xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < values[lowest]) {
      if (used >= budget) {
        simplex[worst] = xr;
        values[worst] = fr;
        break;
      }
      Point xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = xr;
      values[worst] = fr;
      continue;
    }
    if (used >= budget) break;
    const bool outside = fr < values[worst];
    Point xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = xc;
      values[worst] = fc;
      continue;
    }
    // shrink toward the lowest vertex
    for (std::size_t k = 0; k <= n && used < budget; ++k) {
      if (k == lowest) continue;
      for (std::size_t i = 0; i < n; ++i) simplex[k][i] = simplex[lowest][i] + 0.5 * (simplex[k][i] - simplex[lowest][i]);
      values[k] = eval(simplex[k]);
    }
  }
  if (best_value) *best_value = best_f;
  return best;
}

double gaussian(CounterRng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// (mu/mu_w, lambda) evolution strategy with a success-based step size.
void evolution(const Objective& f, const Point& x0, double step, int budget, const std::function<void(Point&)>& project,
               CounterRng& rng) {
  const std::size_t n = x0.size();
  const int lambda = 4 + static_cast<int>(3.0 * std::log(static_cast<double>(n)));
  const int mu = lambda / 2;
  std::vector<double> weights(mu);
  for (int k = 0; k < mu; ++k) weights[k] = std::log(mu + 0.5) - std::log(k + 1.0);
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= wsum;

  Point mean = x0;
  project(mean);
  double best = f(mean);
  int used = 1;
  double sigma = step;
  while (used < budget) {
    std::vector<std::pair<double, Point>> pop;
    for (int k = 0; k < lambda && used < budget; ++k) {
      Point x = mean;
      for (double& xi : x) xi += sigma * gaussian(rng);
      project(x);
      pop.emplace_back(f(x), x);
      ++used;
    }
    std::stable_sort(pop.begin(), pop.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const int take = std::min<int>(mu, static_cast<int>(pop.size()));
    if (take == mu && std::isfinite(pop[0].first)) {
      Point next(n, 0.0);
      for (int k = 0; k < take; ++k)
        for (std::size_t i = 0; i < n; ++i) next[i] += weights[k] * pop[k].second[i];
      project(next);
      mean = next;
    }
    if (!pop.empty() && pop[0].first < best) {
      best = pop[0].first;
      sigma *= 1.2;
    } else {
      sigma *= 0.82;
    }
  }
}

Point to_point(const StateParams& p) {
  const auto a = to_array(p);
  return Point(a.begin(), a.end());
}

StateParams from_point(const Point& v) {
  std::array<double, kParamCount> a{};
  std::copy(v.begin(), v.end(), a.begin());
  return from_array(a);
}

StateParams random_start(const ParamBounds& b, CounterRng& rng) {
  StateParams p;
  p.e1 = b.e1_min + (b.e1_max - b.e1_min) * rng.uniform();
  p.phi = 2.0 * kPi * rng.uniform();
  p.theta = kPi * rng.uniform();
  for (double& l : p.lambda) l = b.lambda_min + (b.lambda_max - b.lambda_min) * rng.uniform();
  return p;
}

StateParams perturb(const StateParams& p, double length, CounterRng& rng) {
  if (length <= 0.0) return p;
  Point d(kParamCount);
  double norm = 0.0;
  for (double& x : d) {
    x = gaussian(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  Point v = to_point(p);
  for (int i = 0; i < kParamCount; ++i) v[i] += length * d[i] / norm;
  return from_point(v);
}

std::vector<TraceEntry> run_restart(const SearchConfig& cfg, const MeasurementModel& mm, int restart) {
  CounterRng start_rng(cfg.seed, kStartPurpose, static_cast<std::uint64_t>(restart));
  StateParams x0 = restart == 0 && cfg.initial ? perturb(*cfg.initial, cfg.initial_perturbation, start_rng)
                                               : random_start(cfg.bounds, start_rng);
  std::vector<TraceEntry> entries;
  entries.reserve(cfg.iterations);
  const Objective f = [&](const Point& x) {
    TraceEntry e;
    e.restart = restart;
    e.iteration = static_cast<int>(entries.size());
    e.params = from_point(x);
    e.eval = evaluate_gap(prepare_state(e.params), e.params.p1(), mm);
    entries.push_back(e);
    return e.eval.ok ? -e.eval.gap : std::numeric_limits<double>::infinity();
  };
  const auto project = [&](Point& x) { x = to_point(clamp_params(from_point(x), cfg.bounds)); };
  if (cfg.optimizer == Optimizer::nelder_mead) {
    nelder_mead(f, to_point(x0), cfg.step, cfg.iterations, project);
  } else {
    CounterRng mutation(cfg.seed, kMutationPurpose, static_cast<std::uint64_t>(restart));
    evolution(f, to_point(x0), cfg.step, cfg.iterations, project, mutation);
  }
  return entries;
}

}  // namespace

GapEvaluation evaluate_gap(const DensityMatrix& rho, double p1, const MeasurementModel& mm) {
  GapEvaluation g;
  g.p1 = p1;
  try {
    const DetectionResult lo = solve_detection(rho, mm, p1, Scenario::lo);
    const DetectionResult locc = solve_detection(rho, mm, p1, Scenario::one_way_locc);
    g.p2_lo = lo.p2;
    g.p2_locc = locc.p2;
    g.gap = g.p2_lo - g.p2_locc;
    g.ok = lo.ok() && locc.ok();
  } catch (const SolverError&) {
    g.ok = false;
  }
  if (!g.ok) g.gap = std::nan("");
  return g;
}

double gap_objective(const DensityMatrix& rho, double p1, const MeasurementModel& mm) {
  const GapEvaluation g = evaluate_gap(rho, p1, mm);
  if (!g.ok) throw SolverError("gap_objective: detection program did not converge");
  return g.gap;
}

double gap_objective_params(const StateParams& p, const MeasurementModel& mm) {
  return gap_objective(prepare_state(p), p.p1(), mm);
}

std::string to_string(Optimizer o) { return o == Optimizer::nelder_mead ? "nelder-mead" : "evolution"; }

Optimizer parse_optimizer(const std::string& text) {
  if (text == "nelder-mead") return Optimizer::nelder_mead;
  if (text == "evolution") return Optimizer::evolution;
  throw InvalidInput("unknown optimizer '" + text + "' (expected nelder-mead or evolution)");
}

StateParams clamp_params(const StateParams& p, const ParamBounds& b) {
  StateParams out = p;
  out.e1 = std::clamp(p.e1, b.e1_min, b.e1_max);
  out.phi = std::clamp(p.phi, 0.0, 2.0 * kPi);
  out.theta = std::clamp(p.theta, 0.0, kPi);
  for (double& l : out.lambda) l = std::clamp(l, b.lambda_min, b.lambda_max);
  return out;
}

std::array<double, kParamCount> to_array(const StateParams& p) {
  std::array<double, kParamCount> v{};
  v[0] = p.e1;
  v[1] = p.phi;
  v[2] = p.theta;
  std::copy(p.lambda.begin(), p.lambda.end(), v.begin() + 3);
  return v;
}

StateParams from_array(const std::array<double, kParamCount>& v) {
  StateParams p;
  p.e1 = v[0];
  p.phi = v[1];
  p.theta = v[2];
  std::copy(v.begin() + 3, v.end(), p.lambda.begin());
  return p;
}

void SearchConfig::validate() const {
  if (restarts < 1) throw InvalidInput("search config: restarts must be at least 1");
  if (iterations < 1) throw InvalidInput("search config: iterations must be at least 1");
  if (!(step > 0.0)) throw InvalidInput("search config: step must be positive");
  if (!(initial_perturbation >= 0.0)) throw InvalidInput("search config: perturbation must be nonnegative");
  if (!(bounds.e1_min < bounds.e1_max) || !(bounds.lambda_min < bounds.lambda_max)) {
    throw InvalidInput("search config: empty parameter bounds");
  }
}

bool SearchTrace::best_monotone() const {
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].best_so_far < entries[k - 1].best_so_far) return false;
  }
  return true;
}

SearchResult search(const SearchConfig& cfg, const MeasurementModel& mm) {
  cfg.validate();
  std::vector<std::vector<TraceEntry>> per_restart(cfg.restarts);
  const int threads = std::clamp(cfg.threads <= 0 ? static_cast<int>(std::thread::hardware_concurrency()) : cfg.threads,
                                 1, cfg.restarts);
  if (threads == 1) {
    for (int r = 0; r < cfg.restarts; ++r) per_restart[r] = run_restart(cfg, mm, r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int r = next++; r < cfg.restarts; r = next++) per_restart[r] = run_restart(cfg, mm, r);
      });
    }
    for (auto& th : pool) th.join();
  }

  SearchResult out;
  double best = kNegInf;
  bool found = false;
  for (auto& entries : per_restart) {
    for (TraceEntry& e : entries) {
      if (e.eval.ok && e.eval.gap > best) {
        best = e.eval.gap;
        out.best = e.params;
        out.best_eval = e.eval;
        found = true;
      }
      e.best_so_far = best;
      out.trace.entries.push_back(e);
    }
  }
  if (!found) throw SolverError("search: no evaluation converged");
  return out;
}

StateFit fit_state_params(const DensityMatrix& rho, double p1) {
  if (rho.dims() != SubsystemDims{}) throw InvalidInput("fit_state_params: expected a qutrit-qutrit state");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(rho.mat());
  const ComplexVector v = eig.eigenvectors().col(8);

  // Coefficient matrix C(a, b) = <ab|v>; the family has C = U_A D with
  // D = diag(sin(t/2) cos(f/4), sin(t/2) sin(f/4), cos(t/2)).
  ComplexMatrix c(3, 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) c(a, b) = v(3 * a + b);
  Eigen::Vector3d d;
  for (int k = 0; k < 3; ++k) d(k) = c.col(k).norm();

  StateParams p;
  p.e1 = e1_from_p1(p1);
  p.theta = 2.0 * std::acos(std::clamp(d(2), 0.0, 1.0));
  p.phi = 4.0 * std::atan2(d(1), d(0));

  ComplexMatrix m = c;
  for (int k = 0; k < 3; ++k) {
    if (d(k) > 1e-12) m.col(k) /= d(k);
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const ComplexMatrix u = svd.matrixU() * svd.matrixV().adjoint();

  // u = exp(i h) with h = sum lambda_j GM_j + lambda_9 I
  Eigen::ComplexSchur<ComplexMatrix> schur(u);
  ComplexMatrix phases = ComplexMatrix::Zero(3, 3);
  for (int k = 0; k < 3; ++k) phases(k, k) = std::arg(schur.matrixT()(k, k));
  const ComplexMatrix h = schur.matrixU() * phases * schur.matrixU().adjoint();
  for (int j = 0; j < 8; ++j) p.lambda[j] = (h * gell_mann()[j]).trace().real() / 2.0;
  p.lambda[8] = h.trace().real() / 3.0;

  // polish 1 - |<v|psi(p)>|^2 over everything but e1
  const auto misfit = [&](const Point& x) {
    Point full(kParamCount);
    full[0] = p.e1;
    std::copy(x.begin(), x.end(), full.begin() + 1);
    return 1.0 - std::norm(v.dot(prepared_vector(from_point(full))));
  };
  const auto project = [](Point& x) {
    x[0] = std::clamp(x[0], 0.0, 2.0 * kPi);
    x[1] = std::clamp(x[1], 0.0, kPi);
  };
  const Point start = to_point(p);
  Point x(start.begin() + 1, start.end());
  double value = misfit(x);
  for (double step : {1e-2, 1e-3, 1e-4, 1e-5}) {
    double polished = value;
    Point y = nelder_mead(misfit, x, step, 3000, project, &polished);
    if (polished < value) {
      value = polished;
      x = y;
    }
  }
  Point full(kParamCount);
  full[0] = p.e1;
  std::copy(x.begin(), x.end(), full.begin() + 1);

  StateFit fit;
  fit.params = from_point(full);
  fit.fidelity = fidelity(rho, prepare_state(fit.params));
  return fit;
}

std::string trace_to_csv(const SearchTrace& trace) {
  std::string out = "restart,iteration,e1,phi,theta,l1,l2,l3,l4,l5,l6,l7,l8,l9,p1,p2_lo,p2_locc,gap\n";
  for (const TraceEntry& e : trace.entries) {
    out += std::to_string(e.restart) + "," + std::to_string(e.iteration);
    for (double v : to_array(e.params)) out += "," + io::format_double(v);
    out += "," + io::format_double(e.eval.p1);
    if (e.eval.ok) {
      out += "," + io::format_double(e.eval.p2_lo) + "," + io::format_double(e.eval.p2_locc) + "," +
             io::format_double(e.eval.gap);
    } else {
      out += ",,,";
    }
    out += '\n';
  }
  return out;
}

using nlohmann::json;

std::string params_to_json(const StateParams& p) {
  json doc{{"e1", p.e1}, {"phi", p.phi}, {"theta", p.theta}, {"lambda", p.lambda}, {"p1", p.p1()}};
  return doc.dump(2) + "\n";
}

namespace {

double number_field(const json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) return 0.0;
  if (!j[name].is_number()) throw InvalidInput(where + ": field '" + name + "' must be a number");
  return j[name].get<double>();
}

StateParams params_from(const json& j, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + ": expected an object");
  StateParams p;
  if (j.contains("e1")) {
    p.e1 = number_field(j, "e1", where);
  } else if (j.contains("p1")) {
    const double p1 = number_field(j, "p1", where);
    if (!(p1 > 0.0 && p1 < 1.0)) throw InvalidInput(where + ": field 'p1' must lie in (0, 1)");
    p.e1 = e1_from_p1(p1);
  }
  p.phi = number_field(j, "phi", where);
  p.theta = number_field(j, "theta", where);
  if (j.contains("lambda")) {
    const json& l = j["lambda"];
    if (!l.is_array() || l.size() != kNumGenerators) {
      throw InvalidInput(where + ": field 'lambda' must be an array of " + std::to_string(kNumGenerators) + " numbers");
    }
    for (int k = 0; k < kNumGenerators; ++k) {
      if (!l[k].is_number()) throw InvalidInput(where + ": field 'lambda' must hold numbers");
      p.lambda[k] = l[k].get<double>();
    }
  }
  return p;
}

json parse_doc(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(what + ": malformed JSON (" + std::string(e.what()) + ")");
  }
}

}  // namespace

StateParams parse_params_json(const std::string& text) { return params_from(parse_doc(text, "params"), "params"); }

SearchConfig parse_search_config(const std::string& text) {
  const json doc = parse_doc(text, "search config");
  if (!doc.is_object()) throw InvalidInput("search config: expected an object");
  SearchConfig cfg;
  auto integer = [&](const char* name, auto& target) {
    if (!doc.contains(name)) return;
    if (!doc[name].is_number_integer()) throw InvalidInput(std::string("search config: field '") + name + "' must be an integer");
    target = doc[name].get<std::remove_reference_t<decltype(target)>>();
  };
  integer("restarts", cfg.restarts);
  integer("iterations", cfg.iterations);
  integer("seed", cfg.seed);
  integer("threads", cfg.threads);
  if (doc.contains("optimizer")) {
    if (!doc["optimizer"].is_string()) throw InvalidInput("search config: field 'optimizer' must be a string");
    cfg.optimizer = parse_optimizer(doc["optimizer"].get<std::string>());
  }
  if (doc.contains("step")) cfg.step = number_field(doc, "step", "search config");
  if (doc.contains("perturbation")) cfg.initial_perturbation = number_field(doc, "perturbation", "search config");
  if (doc.contains("bounds")) {
    const json& b = doc["bounds"];
    auto pair = [&](const char* name, double& lo, double& hi) {
      if (!b.contains(name)) return;
      const json& r = b[name];
      if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
        throw InvalidInput(std::string("search config: field 'bounds.") + name + "' must be [min, max]");
      }
      lo = r[0].get<double>();
      hi = r[1].get<double>();
    };
    pair("e1", cfg.bounds.e1_min, cfg.bounds.e1_max);
    pair("lambda", cfg.bounds.lambda_min, cfg.bounds.lambda_max);
  }
  if (doc.contains("initial")) {
    const json& init = doc["initial"];
    if (init.is_string()) {
      if (init.get<std::string>() != "fit-optimized") {
        throw InvalidInput("search config: field 'initial' must be an object or \"fit-optimized\"");
      }
      cfg.initial = fit_state_params(optimized_state(), kReferenceP1).params;
    } else {
      cfg.initial = params_from(init, "search config: field 'initial'");
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace locc
