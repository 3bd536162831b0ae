#include <doctest.h>

#include <cmath>

#include "locc/error.hpp"
#include "locc/gap_search.hpp"
#include "locc/reference_tables.hpp"

using namespace locc;

namespace {

constexpr double kPi = 3.14159265358979323846;

DensityMatrix product00() {
  ComplexVector v = ComplexVector::Zero(9);
  v(0) = 1.0;
  return DensityMatrix::from_pure(v);
}

StateParams sample_params() {
  StateParams p;
  p.e1 = 0.4;
  p.phi = 2.5;
  p.theta = 2.0;
  p.lambda = {0.3, -0.2, 0.1, 0.05, 0.7, -0.1, 0.9, 0.4, -0.8};
  return p;
}

}  // namespace

TEST_CASE("gap objective on the optimized state") {
  const double g = gap_objective(optimized_state(), kReferenceP1, standard_bases());
  CHECK(std::abs(g - kReferenceGap) < 1e-2);
}

TEST_CASE("gap vanishes at the endpoints and on a product state") {
  const MeasurementModel mm = standard_bases();
  for (double p1 : {0.0, 1.0}) CHECK(std::abs(gap_objective(optimized_state(), p1, mm)) < 1e-6);
  for (double p1 : {0.3, kReferenceP1}) {
    const GapEvaluation g = evaluate_gap(product00(), p1, mm);
    REQUIRE(g.ok);
    CHECK(std::abs(g.gap) < 1e-6);
  }
  StateParams p;
  p.theta = kPi;
  p.e1 = e1_from_p1(0.6);
  CHECK(std::abs(gap_objective_params(p, mm)) < 1e-6);
}

TEST_CASE("tanh reparametrization") {
  StateParams p;
  p.e1 = e1_from_p1(kReferenceP1);
  CHECK(p.e1 == doctest::Approx(0.5443).epsilon(1e-3));
  CHECK(std::abs(p.p1() - kReferenceP1) < 1e-6);
  p.e1 = 40.0;
  CHECK(p.p1() == doctest::Approx(1.0));
}

TEST_CASE("parameter box projection") {
  StateParams p = sample_params();
  p.e1 = 9.0;
  p.phi = 7.0;
  p.theta = -1.0;
  p.lambda[0] = -5.0;
  const StateParams c = clamp_params(p, ParamBounds{});
  CHECK(c.e1 == 3.0);
  CHECK(c.phi == doctest::Approx(2.0 * kPi));
  CHECK(c.theta == 0.0);
  CHECK(c.lambda[0] == doctest::Approx(-kPi));
  CHECK(from_array(to_array(sample_params())).lambda == sample_params().lambda);
}

TEST_CASE("one evaluation returns the initial point") {
  SearchConfig cfg;
  cfg.iterations = 1;
  cfg.initial = sample_params();
  const SearchResult r = search(cfg, standard_bases());
  REQUIRE(r.trace.entries.size() == 1);
  CHECK(to_array(r.best) == to_array(sample_params()));
  CHECK(r.best_eval.gap == r.trace.entries[0].eval.gap);
}

TEST_CASE("search is deterministic, bookkept and never below its start") {
  const MeasurementModel mm = standard_bases();
  for (Optimizer opt : {Optimizer::nelder_mead, Optimizer::evolution}) {
    SearchConfig cfg;
    cfg.restarts = 2;
    cfg.iterations = 16;
    cfg.seed = 3;
    cfg.optimizer = opt;
    cfg.initial = sample_params();
    cfg.threads = 2;
    const SearchResult a = search(cfg, mm);
    cfg.threads = 1;
    const SearchResult b = search(cfg, mm);
    CHECK(trace_to_csv(a.trace) == trace_to_csv(b.trace));
    CHECK(a.trace.entries.size() == 32);
    CHECK(a.trace.best_monotone());
    for (const TraceEntry& e : a.trace.entries) {
      if (!e.eval.ok) continue;
      CHECK(std::abs(e.eval.gap - (e.eval.p2_lo - e.eval.p2_locc)) <= 1e-9);
      CHECK(e.eval.gap >= -1e-6);
    }
    CHECK(a.best_eval.gap >= a.trace.entries[0].eval.gap);
    CHECK(a.trace.entries[16].restart == 1);
  }
}

TEST_CASE("fitting the preparable family to the optimized state") {
  const StateFit fit = fit_state_params(optimized_state(), kReferenceP1);
  CHECK(fit.fidelity > 0.9999);
  CHECK(std::abs(fit.params.p1() - kReferenceP1) < 1e-9);
  const StateFit self = fit_state_params(prepare_state(sample_params()), 0.6);
  CHECK(self.fidelity > 1.0 - 1e-9);
}

TEST_CASE("config, params and trace formats") {
  const SearchConfig cfg = parse_search_config(
      R"({"restarts":2,"iterations":5,"seed":9,"optimizer":"evolution","bounds":{"e1":[-1,1]},)"
      R"("initial":{"p1":0.7,"theta":1.0},"perturbation":0.01})");
  CHECK(cfg.restarts == 2);
  CHECK(cfg.optimizer == Optimizer::evolution);
  CHECK(cfg.bounds.e1_max == 1.0);
  REQUIRE(cfg.initial.has_value());
  CHECK(cfg.initial->p1() == doctest::Approx(0.7));
  CHECK(cfg.initial_perturbation == 0.01);
  CHECK_THROWS_AS(parse_search_config(R"({"iterations":0})"), InvalidInput);
  CHECK_THROWS_AS(parse_search_config(R"({"optimizer":"annealing"})"), InvalidInput);
  CHECK_THROWS_AS(parse_search_config("{"), InvalidInput);
  CHECK_THROWS_WITH_AS(parse_search_config(R"({"initial":{"lambda":[1,2]}})"), doctest::Contains("lambda"),
                       InvalidInput);

  const StateParams back = parse_params_json(params_to_json(sample_params()));
  CHECK(to_array(back) == to_array(sample_params()));

  SearchTrace t;
  t.entries.resize(1);
  const std::string csv = trace_to_csv(t);
  CHECK(csv.rfind("restart,iteration,e1,phi,theta,l1,l2,l3,l4,l5,l6,l7,l8,l9,p1,p2_lo,p2_locc,gap\n", 0) == 0);
}
