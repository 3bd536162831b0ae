#include "locc/reference_tables.hpp"

#include <cmath>

#include "locc/error.hpp"
#include "locc/io.hpp"

namespace locc {

namespace {

int index_1based(const io::CsvTable& t, std::size_t row, const char* col, int limit) {
  const int v = t.integer(row, col);
  if (v < 1 || v > limit) {
    throw InvalidInput(t.source + ": row " + std::to_string(row + 2) + " column " + col + " out of range");
  }
  return v - 1;
}

}  // namespace

ReferenceTables load_reference_tables(const std::string& dir) {
  ReferenceTables t;
  const Shape sh = t.shape;
  const int S = sh.settings;
  const int O = sh.outcomes;

  const auto viii = io::read_csv(dir + "/joint_instructions.csv");
  std::vector<double> n_lo(sh.n_size(), 0.0), n_locc(sh.n_size(), 0.0);
  for (std::size_t r = 0; r < viii.rows.size(); ++r) {
    const int k = sh.n_index(index_1based(viii, r, "x", S), index_1based(viii, r, "y", S),
                             index_1based(viii, r, "a", O), index_1based(viii, r, "b", O));
    n_lo[k] = viii.number(r, "p_lo");
    n_locc[k] = viii.number(r, "p_1locc");
  }

  const auto x_tab = io::read_csv(dir + "/decision_probabilities.csv");
  t.pn_lo.assign(sh.n_size(), 0.0);
  t.pn_locc.assign(sh.n_size(), 0.0);
  for (std::size_t r = 0; r < x_tab.rows.size(); ++r) {
    const int k = sh.n_index(index_1based(x_tab, r, "x", S), index_1based(x_tab, r, "y", S),
                             index_1based(x_tab, r, "a", O), index_1based(x_tab, r, "b", O));
    t.pn_lo[k] = x_tab.number(r, "pn_lo");
    t.pn_locc[k] = x_tab.number(r, "pn_1locc");
  }

  const auto px = io::read_csv(dir + "/locc_px.csv");
  t.px.assign(S, 0.0);
  for (std::size_t r = 0; r < px.rows.size(); ++r) t.px[index_1based(px, r, "x", S)] = px.number(r, "p");

  const auto pyax = io::read_csv(dir + "/locc_py_given_ax.csv");
  t.py_given_ax.assign(S * O * S, 0.0);
  for (std::size_t r = 0; r < pyax.rows.size(); ++r) {
    t.py_given_ax[sh.y_given_ax_index(index_1based(pyax, r, "x", S), index_1based(pyax, r, "a", O),
                                      index_1based(pyax, r, "y", S))] = pyax.number(r, "p");
  }

  const auto pxy = io::read_csv(dir + "/lo_pxy.csv");
  t.pxy.assign(S * S, 0.0);
  for (std::size_t r = 0; r < pxy.rows.size(); ++r) {
    t.pxy[sh.xy_index(index_1based(pxy, r, "x", S), index_1based(pxy, r, "y", S))] = pxy.number(r, "p");
  }

  t.lo.scenario = Scenario::lo;
  t.lo.shape = sh;
  t.lo.n_table = n_lo;
  t.lo.lo_joint = t.pxy;

  t.locc.scenario = Scenario::one_way_locc;
  t.locc.shape = sh;
  t.locc.n_table = n_locc;
  t.locc.locc_px = t.px;
  t.locc.locc_s.assign(S * S * O, 0.0);
  for (int x = 0; x < S; ++x)
    for (int y = 0; y < S; ++y)
      for (int a = 0; a < O; ++a) {
        t.locc.locc_s[sh.s_index(x, y, a)] = t.px[x] * t.py_given_ax[sh.y_given_ax_index(x, a, y)];
      }

  MergedInstructionSet& m = t.merged;
  m.shape = sh;
  m.weight = std::nan("");
  m.pn_lo = t.pn_lo;
  m.pn_locc = t.pn_locc;
  const auto pmx = io::read_csv(dir + "/merged_px.csv");
  m.pm_x.assign(S, 0.0);
  for (std::size_t r = 0; r < pmx.rows.size(); ++r) m.pm_x[index_1based(pmx, r, "x", S)] = pmx.number(r, "p");
  const auto pmy = io::read_csv(dir + "/merged_pyprime_given_ax.csv");
  m.pm_yprime.assign(S * O * 2 * S, 0.0);
  for (std::size_t r = 0; r < pmy.rows.size(); ++r) {
    const int yp = pmy.integer(r, "yprime");
    if (yp < 0 || yp >= 2 * S) throw InvalidInput(pmy.source + ": yprime out of range");
    m.pm_yprime[m.yprime_index(index_1based(pmy, r, "x", S), index_1based(pmy, r, "a", O), yp)] = pmy.number(r, "p");
  }
  return t;
}

ReferenceTables load_reference_tables() { return load_reference_tables(io::data_dir()); }

InstructionSet recombine_lo(const ReferenceTables& t) {
  InstructionSet out;
  out.scenario = Scenario::lo;
  out.shape = t.shape;
  out.lo_joint = t.pxy;
  out.n_table.assign(t.shape.n_size(), 0.0);
  for (int x = 0; x < t.shape.settings; ++x)
    for (int y = 0; y < t.shape.settings; ++y)
      for (int a = 0; a < t.shape.outcomes; ++a)
        for (int b = 0; b < t.shape.outcomes; ++b) {
          const int k = t.shape.n_index(x, y, a, b);
          out.n_table[k] = t.pxy[t.shape.xy_index(x, y)] * t.pn_lo[k];
        }
  return out;
}

InstructionSet recombine_locc(const ReferenceTables& t) {
  InstructionSet out;
  out.scenario = Scenario::one_way_locc;
  out.shape = t.shape;
  out.locc_px = t.px;
  out.locc_s = t.locc.locc_s;
  out.n_table.assign(t.shape.n_size(), 0.0);
  for (int x = 0; x < t.shape.settings; ++x)
    for (int y = 0; y < t.shape.settings; ++y)
      for (int a = 0; a < t.shape.outcomes; ++a)
        for (int b = 0; b < t.shape.outcomes; ++b) {
          const int k = t.shape.n_index(x, y, a, b);
          out.n_table[k] = t.locc.locc_s[t.shape.s_index(x, y, a)] * t.pn_locc[k];
        }
  return out;
}

}  // namespace locc
