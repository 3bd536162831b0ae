#include "locc/instructions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "locc/error.hpp"
#include "locc/io.hpp"

namespace locc {

namespace {

constexpr double kFactorTol = 1e-6;

std::string idx(std::initializer_list<std::pair<const char*, int>> parts) {
  std::string out;
  for (const auto& [name, value] : parts) {
    if (!out.empty()) out += ",";
    out += std::string(name) + "=" + std::to_string(value + 1);
  }
  return out;
}

void check_size(const std::vector<double>& v, std::size_t expected, const char* what) {
  if (v.size() != expected) {
    throw InvalidInput(std::string(what) + ": expected " + std::to_string(expected) + " entries, got " +
                       std::to_string(v.size()));
  }
}

}  // namespace

std::string to_string(Scenario s) { return s == Scenario::lo ? "LO" : "1LOCC"; }

Scenario parse_scenario(const std::string& text) {
  if (text == "LO" || text == "lo") return Scenario::lo;
  if (text == "1LOCC" || text == "1locc" || text == "1-LOCC" || text == "1-locc") return Scenario::one_way_locc;
  throw InvalidInput("unknown scenario \"" + text + "\" (expected lo or 1locc)");
}

double InstructionSet::bound(int x, int y, int a) const {
  if (scenario == Scenario::lo) return lo_joint[shape.xy_index(x, y)];
  return locc_s[shape.s_index(x, y, a)];
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << constraint << " violated at " << where << " by " << excess;
  return os.str();
}

std::vector<Violation> validate(const InstructionSet& instr, double tol) {
  std::vector<Violation> out;
  const Shape& sh = instr.shape;
  const int S = sh.settings;
  const int O = sh.outcomes;
  if (S <= 0 || O <= 0 || static_cast<int>(instr.n_table.size()) != sh.n_size()) {
    out.push_back({"shape", "n_table", std::abs(static_cast<double>(instr.n_table.size()) - sh.n_size())});
    return out;
  }
  const bool lo = instr.scenario == Scenario::lo;
  if (lo && static_cast<int>(instr.lo_joint.size()) != S * S) {
    out.push_back({"shape", "lo_joint", 0.0});
    return out;
  }
  if (!lo && (static_cast<int>(instr.locc_px.size()) != S || static_cast<int>(instr.locc_s.size()) != S * S * O)) {
    out.push_back({"shape", "locc factors", 0.0});
    return out;
  }

  auto range = [&](double v, const std::string& where) {
    if (!(v >= -tol)) out.push_back({"range", where, std::isnan(v) ? std::numeric_limits<double>::infinity() : -v});
    else if (v > 1.0 + tol) out.push_back({"range", where, v - 1.0});
  };

  for (int x = 0; x < S; ++x)
    for (int y = 0; y < S; ++y)
      for (int a = 0; a < O; ++a)
        for (int b = 0; b < O; ++b) range(instr.n(x, y, a, b), "n(" + idx({{"x", x}, {"y", y}, {"a", a}, {"b", b}}) + ")");

  if (lo) {
    double total = 0.0;
    for (int x = 0; x < S; ++x) {
      for (int y = 0; y < S; ++y) {
        const double m = instr.lo_joint[sh.xy_index(x, y)];
        range(m, "P(" + idx({{"x", x}, {"y", y}}) + ")");
        total += m;
      }
    }
    if (std::abs(total - 1.0) > tol) out.push_back({"normalization", "sum P(x,y)", std::abs(total - 1.0)});
  } else {
    double total = 0.0;
    for (int x = 0; x < S; ++x) {
      const double px = instr.locc_px[x];
      range(px, "P(" + idx({{"x", x}}) + ")");
      total += px;
      for (int a = 0; a < O; ++a) {
        double row = 0.0;
        for (int y = 0; y < S; ++y) {
          const double s = instr.locc_s[sh.s_index(x, y, a)];
          range(s, "s(" + idx({{"x", x}, {"y", y}, {"a", a}}) + ")");
          row += s;
        }
        if (std::abs(row - px) > tol) {
          out.push_back({"marginal", "sum_y s(" + idx({{"x", x}, {"a", a}}) + ") != P(x)", std::abs(row - px)});
        }
      }
    }
    if (std::abs(total - 1.0) > tol) out.push_back({"normalization", "sum P(x)", std::abs(total - 1.0)});
  }

  for (int x = 0; x < S; ++x)
    for (int y = 0; y < S; ++y)
      for (int a = 0; a < O; ++a)
        for (int b = 0; b < O; ++b) {
          const double excess = instr.n(x, y, a, b) - instr.bound(x, y, a);
          if (excess > tol) out.push_back({"bound", "n(" + idx({{"x", x}, {"y", y}, {"a", a}, {"b", b}}) + ")", excess});
        }
  return out;
}

LoccFactors factorize_locc(const InstructionSet& instr, double tol) {
  if (instr.scenario != Scenario::one_way_locc) throw InvalidInput("factorize_locc: instruction set is not 1-LOCC");
  const Shape& sh = instr.shape;
  const int S = sh.settings;
  const int O = sh.outcomes;
  LoccFactors f;
  f.p_x = instr.locc_px;
  f.p_y_given_ax.assign(S * O * S, 0.0);
  f.p_n_given_xyab.assign(sh.n_size(), 0.0);
  for (int x = 0; x < S; ++x) {
    const double px = instr.locc_px[x];
    for (int a = 0; a < O; ++a) {
      for (int y = 0; y < S; ++y) {
        f.p_y_given_ax[sh.y_given_ax_index(x, a, y)] =
            px > tol ? instr.locc_s[sh.s_index(x, y, a)] / px : 1.0 / S;
      }
    }
  }
  for (int x = 0; x < S; ++x)
    for (int y = 0; y < S; ++y)
      for (int a = 0; a < O; ++a) {
        const double s = instr.locc_s[sh.s_index(x, y, a)];
        for (int b = 0; b < O; ++b) {
          f.p_n_given_xyab[sh.n_index(x, y, a, b)] = s > tol ? std::clamp(instr.n(x, y, a, b) / s, 0.0, 1.0) : 0.0;
        }
      }
  return f;
}

LoFactors factorize_lo(const InstructionSet& instr, double tol) {
  if (instr.scenario != Scenario::lo) throw InvalidInput("factorize_lo: instruction set is not LO");
  const Shape& sh = instr.shape;
  LoFactors f;
  f.p_xy = instr.lo_joint;
  f.p_n_given_xyab.assign(sh.n_size(), 0.0);
  for (int x = 0; x < sh.settings; ++x)
    for (int y = 0; y < sh.settings; ++y) {
      const double m = instr.lo_joint[sh.xy_index(x, y)];
      for (int a = 0; a < sh.outcomes; ++a)
        for (int b = 0; b < sh.outcomes; ++b) {
          f.p_n_given_xyab[sh.n_index(x, y, a, b)] = m > tol ? std::clamp(instr.n(x, y, a, b) / m, 0.0, 1.0) : 0.0;
        }
    }
  return f;
}

namespace {

void check_probabilities(const std::vector<double>& v, const char* what) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!(v[k] >= -kFactorTol && v[k] <= 1.0 + kFactorTol)) {
      throw InvalidInput(std::string(what) + ": entry " + std::to_string(k) + " = " + io::format_double(v[k]) +
                         " is not a probability");
    }
  }
}

}  // namespace

InstructionSet lo_from_factors(const std::vector<double>& p_xy, const std::vector<double>& p_n_given_xyab,
                               Shape shape) {
  const int S = shape.settings;
  const int O = shape.outcomes;
  check_size(p_xy, S * S, "lo_from_factors P(x,y)");
  check_size(p_n_given_xyab, shape.n_size(), "lo_from_factors P(N|x,y,a,b)");
  check_probabilities(p_xy, "lo_from_factors P(x,y)");
  check_probabilities(p_n_given_xyab, "lo_from_factors P(N|x,y,a,b)");
  double total = 0.0;
  for (double v : p_xy) total += v;
  if (std::abs(total - 1.0) > kFactorTol) {
    throw InvalidInput("lo_from_factors: P(x,y) sums to " + io::format_double(total));
  }
  InstructionSet out;
  out.scenario = Scenario::lo;
  out.shape = shape;
  out.lo_joint = p_xy;
  out.n_table.assign(shape.n_size(), 0.0);
  for (int x = 0; x < S; ++x)
    for (int y = 0; y < S; ++y)
      for (int a = 0; a < O; ++a)
        for (int b = 0; b < O; ++b) {
          const int k = shape.n_index(x, y, a, b);
          out.n_table[k] = p_xy[shape.xy_index(x, y)] * p_n_given_xyab[k];
        }
  return out;
}

InstructionSet locc_from_factors(const std::vector<double>& p_x, const std::vector<double>& p_y_given_ax,
                                 const std::vector<double>& p_n_given_xyab, Shape shape) {
  const int S = shape.settings;
  const int O = shape.outcomes;
  check_size(p_x, S, "locc_from_factors P(x)");
  check_size(p_y_given_ax, S * O * S, "locc_from_factors P(y|a,x)");
  check_size(p_n_given_xyab, shape.n_size(), "locc_from_factors P(N|x,y,a,b)");
  check_probabilities(p_x, "locc_from_factors P(x)");
  check_probabilities(p_y_given_ax, "locc_from_factors P(y|a,x)");
  check_probabilities(p_n_given_xyab, "locc_from_factors P(N|x,y,a,b)");
  double total = 0.0;
  for (double v : p_x) total += v;
  if (std::abs(total - 1.0) > kFactorTol) {
    throw InvalidInput("locc_from_factors: P(x) sums to " + io::format_double(total));
  }
  for (int x = 0; x < S; ++x)
    for (int a = 0; a < O; ++a) {
      double row = 0.0;
      for (int y = 0; y < S; ++y) row += p_y_given_ax[shape.y_given_ax_index(x, a, y)];
      if (std::abs(row - 1.0) > kFactorTol) {
        throw InvalidInput("locc_from_factors: P(y|a=" + std::to_string(a + 1) + ",x=" + std::to_string(x + 1) +
                           ") sums to " + io::format_double(row));
      }
    }
  InstructionSet out;
  out.scenario = Scenario::one_way_locc;
  out.shape = shape;
  out.locc_px = p_x;
  out.locc_s.assign(S * S * O, 0.0);
  out.n_table.assign(shape.n_size(), 0.0);
  for (int x = 0; x < S; ++x)
    for (int y = 0; y < S; ++y)
      for (int a = 0; a < O; ++a) {
        const double s = p_x[x] * p_y_given_ax[shape.y_given_ax_index(x, a, y)];
        out.locc_s[shape.s_index(x, y, a)] = s;
        for (int b = 0; b < O; ++b) {
          const int k = shape.n_index(x, y, a, b);
          out.n_table[k] = s * p_n_given_xyab[k];
        }
      }
  return out;
}

InstructionSet lo_as_locc(const InstructionSet& lo) {
  if (lo.scenario != Scenario::lo) throw InvalidInput("lo_as_locc: instruction set is not LO");
  const Shape& sh = lo.shape;
  InstructionSet out;
  out.scenario = Scenario::one_way_locc;
  out.shape = sh;
  out.n_table = lo.n_table;
  out.locc_px.assign(sh.settings, 0.0);
  out.locc_s.assign(sh.settings * sh.settings * sh.outcomes, 0.0);
  for (int x = 0; x < sh.settings; ++x)
    for (int y = 0; y < sh.settings; ++y) {
      const double m = lo.lo_joint[sh.xy_index(x, y)];
      out.locc_px[x] += m;
      for (int a = 0; a < sh.outcomes; ++a) out.locc_s[sh.s_index(x, y, a)] = m;
    }
  return out;
}

Povm assemble_povm(const InstructionSet& instr, const MeasurementModel& mm, double tol) {
  const auto violations = validate(instr, tol);
  if (!violations.empty()) {
    throw InvalidInput("assemble_povm: invalid instruction set (" + violations.front().describe() + ", " +
                       std::to_string(violations.size()) + " violation(s))");
  }
  const Shape& sh = instr.shape;
  if (mm.settings() != sh.settings || mm.outcomes() != sh.outcomes) {
    throw InvalidInput("assemble_povm: measurement model shape does not match the instruction set");
  }
  const int d = static_cast<int>(mm.alice(0, 0).rows() * mm.bob(0, 0).rows());
  Povm out;
  out.m_n = ComplexMatrix::Zero(d, d);
  for (int x = 0; x < sh.settings; ++x)
    for (int y = 0; y < sh.settings; ++y)
      for (int a = 0; a < sh.outcomes; ++a)
        for (int b = 0; b < sh.outcomes; ++b) {
          const double n = instr.n(x, y, a, b);
          if (n != 0.0) out.m_n += n * mm.effect(x, a, y, b);
        }
  out.m_n = hermitian_part(out.m_n);
  out.m_y = ComplexMatrix::Identity(d, d) - out.m_n;
  return out;
}

// --- merged ------------------------------------------------------------------

namespace {

std::vector<double> lo_x_marginal(const InstructionSet& lo) {
  std::vector<double> px(lo.shape.settings, 0.0);
  for (int x = 0; x < lo.shape.settings; ++x)
    for (int y = 0; y < lo.shape.settings; ++y) px[x] += lo.lo_joint[lo.shape.xy_index(x, y)];
  return px;
}

}  // namespace

MergedInstructionSet merge_shuffled(const InstructionSet& lo, const InstructionSet& locc, double weight) {
  if (lo.scenario != Scenario::lo || locc.scenario != Scenario::one_way_locc) {
    throw InvalidInput("merge_shuffled: expects an LO set and a 1-LOCC set");
  }
  if (!(lo.shape == locc.shape)) throw InvalidInput("merge_shuffled: incompatible setting/outcome counts");
  if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidInput("merge_shuffled: weight must lie in [0, 1]");
  const Shape sh = lo.shape;
  const int S = sh.settings;
  const int O = sh.outcomes;
  const std::vector<double> px_lo = lo_x_marginal(lo);

  MergedInstructionSet m;
  m.shape = sh;
  m.weight = weight;
  m.pm_x.assign(S, 0.0);
  m.pm_yprime.assign(S * O * 2 * S, 0.0);
  for (int x = 0; x < S; ++x) m.pm_x[x] = weight * px_lo[x] + (1.0 - weight) * locc.locc_px[x];
  for (int x = 0; x < S; ++x) {
    for (int a = 0; a < O; ++a) {
      if (m.pm_x[x] <= 0.0) {
        for (int yp = 0; yp < 2 * S; ++yp) m.pm_yprime[m.yprime_index(x, a, yp)] = 1.0 / (2 * S);
        continue;
      }
      for (int y = 0; y < S; ++y) {
        m.pm_yprime[m.yprime_index(x, a, y)] = weight * lo.lo_joint[sh.xy_index(x, y)] / m.pm_x[x];
        m.pm_yprime[m.yprime_index(x, a, S + y)] = (1.0 - weight) * locc.locc_s[sh.s_index(x, y, a)] / m.pm_x[x];
      }
    }
  }
  m.pn_lo = factorize_lo(lo, 1e-12).p_n_given_xyab;
  m.pn_locc = factorize_locc(locc, 1e-12).p_n_given_xyab;
  return m;
}

double fit_merge_weight(const InstructionSet& lo, const InstructionSet& locc, const std::vector<double>& target_pm_x) {
  check_size(target_pm_x, lo.shape.settings, "fit_merge_weight target");
  const std::vector<double> px_lo = lo_x_marginal(lo);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t x = 0; x < target_pm_x.size(); ++x) {
    const double d = px_lo[x] - locc.locc_px[x];
    num += d * (target_pm_x[x] - locc.locc_px[x]);
    den += d * d;
  }
  if (den == 0.0) return kDefaultMergeWeight;
  return std::clamp(num / den, 0.0, 1.0);
}

std::vector<Violation> validate_merged(const MergedInstructionSet& m, double tol) {
  std::vector<Violation> out;
  const int S = m.shape.settings;
  const int O = m.shape.outcomes;
  if (static_cast<int>(m.pm_x.size()) != S || static_cast<int>(m.pm_yprime.size()) != S * O * 2 * S ||
      static_cast<int>(m.pn_lo.size()) != m.shape.n_size() || static_cast<int>(m.pn_locc.size()) != m.shape.n_size()) {
    out.push_back({"shape", "merged tables", 0.0});
    return out;
  }
  double total = 0.0;
  for (int x = 0; x < S; ++x) {
    total += m.pm_x[x];
    if (m.pm_x[x] < -tol || m.pm_x[x] > 1.0 + tol) out.push_back({"range", "P_m(" + idx({{"x", x}}) + ")", 0.0});
  }
  if (std::abs(total - 1.0) > tol) out.push_back({"normalization", "sum P_m(x)", std::abs(total - 1.0)});
  for (int x = 0; x < S; ++x) {
    for (int a = 0; a < O; ++a) {
      double row = 0.0;
      for (int yp = 0; yp < 2 * S; ++yp) {
        const double v = m.yprime(x, a, yp);
        if (v < -tol || v > 1.0 + tol) {
          out.push_back({"range", "P_m(y'=" + std::to_string(yp) + "|" + idx({{"a", a}, {"x", x}}) + ")", 0.0});
        }
        row += v;
      }
      if (std::abs(row - 1.0) > tol) {
        out.push_back({"normalization", "sum_y' P_m(y'|" + idx({{"a", a}, {"x", x}}) + ")", std::abs(row - 1.0)});
      }
      for (int y = 0; y < S; ++y) {
        const double diff = std::abs(m.yprime(x, a, y) - m.yprime(x, 0, y));
        if (diff > tol) {
          out.push_back({"a-independence", "P_m(y'=" + std::to_string(y) + "|" + idx({{"a", a}, {"x", x}}) + ")", diff});
        }
      }
    }
  }
  for (const auto* table : {&m.pn_lo, &m.pn_locc}) {
    for (double v : *table) {
      if (v < -tol || v > 1.0 + tol) {
        out.push_back({"range", table == &m.pn_lo ? "P_LO(N|.)" : "P_1LOCC(N|.)", 0.0});
        break;
      }
    }
  }
  return out;
}

// --- JSON ------------------------------------------------------------------

namespace {

using nlohmann::json;

int checked_index(const json& v, int limit, const std::string& where) {
  if (!v.is_number_integer()) throw InvalidInput("instructions: " + where + " must be an integer");
  const int k = v.get<int>();
  if (k < 1 || k > limit) {
    throw InvalidInput("instructions: " + where + " = " + std::to_string(k) + " out of range 1.." +
                       std::to_string(limit));
  }
  return k - 1;
}

double checked_value(const json& v, const std::string& where) {
  if (!v.is_number()) throw InvalidInput("instructions: " + where + " must be a number");
  return v.get<double>();
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw InvalidInput("instructions: missing field \"" + where + "\"");
  return obj.at(key);
}

}  // namespace

InstructionSet parse_instructions_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("instructions: malformed JSON: ") + e.what());
  }
  const json& scen = require(doc, "scenario", "scenario");
  if (!scen.is_string()) throw InvalidInput("instructions: \"scenario\" must be a string");
  InstructionSet out;
  out.scenario = parse_scenario(scen.get<std::string>());
  if (doc.contains("settings")) out.shape.settings = checked_index(doc["settings"], 64, "settings") + 1;
  if (doc.contains("outcomes")) out.shape.outcomes = checked_index(doc["outcomes"], 64, "outcomes") + 1;
  const Shape& sh = out.shape;
  const int S = sh.settings;
  const int O = sh.outcomes;

  out.n_table.assign(sh.n_size(), 0.0);
  const json& rows = require(doc, "n_table", "n_table");
  if (!rows.is_array()) throw InvalidInput("instructions: \"n_table\" must be an array");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string where = "n_table[" + std::to_string(r) + "]";
    if (!rows[r].is_array() || rows[r].size() != 5) throw InvalidInput("instructions: " + where + " must be [x,y,a,b,value]");
    const int x = checked_index(rows[r][0], S, where + ".x");
    const int y = checked_index(rows[r][1], S, where + ".y");
    const int a = checked_index(rows[r][2], O, where + ".a");
    const int b = checked_index(rows[r][3], O, where + ".b");
    out.n_table[sh.n_index(x, y, a, b)] = checked_value(rows[r][4], where + ".value");
  }

  const json& factors = require(doc, "factors", "factors");
  if (out.scenario == Scenario::lo) {
    out.lo_joint.assign(S * S, 0.0);
    const json& pxy = require(factors, "p_xy", "factors.p_xy");
    if (!pxy.is_array()) throw InvalidInput("instructions: \"factors.p_xy\" must be an array");
    for (std::size_t r = 0; r < pxy.size(); ++r) {
      const std::string where = "factors.p_xy[" + std::to_string(r) + "]";
      if (!pxy[r].is_array() || pxy[r].size() != 3) throw InvalidInput("instructions: " + where + " must be [x,y,value]");
      out.lo_joint[sh.xy_index(checked_index(pxy[r][0], S, where + ".x"), checked_index(pxy[r][1], S, where + ".y"))] =
          checked_value(pxy[r][2], where + ".value");
    }
  } else {
    out.locc_px.assign(S, 0.0);
    out.locc_s.assign(S * S * O, 0.0);
    const json& px = require(factors, "p_x", "factors.p_x");
    const json& pyax = require(factors, "p_y_given_ax", "factors.p_y_given_ax");
    if (!px.is_array() || !pyax.is_array()) throw InvalidInput("instructions: 1-LOCC factors must be arrays");
    for (std::size_t r = 0; r < px.size(); ++r) {
      const std::string where = "factors.p_x[" + std::to_string(r) + "]";
      if (!px[r].is_array() || px[r].size() != 2) throw InvalidInput("instructions: " + where + " must be [x,value]");
      out.locc_px[checked_index(px[r][0], S, where + ".x")] = checked_value(px[r][1], where + ".value");
    }
    for (std::size_t r = 0; r < pyax.size(); ++r) {
      const std::string where = "factors.p_y_given_ax[" + std::to_string(r) + "]";
      if (!pyax[r].is_array() || pyax[r].size() != 4) {
        throw InvalidInput("instructions: " + where + " must be [a,x,y,value]");
      }
      const int a = checked_index(pyax[r][0], O, where + ".a");
      const int x = checked_index(pyax[r][1], S, where + ".x");
      const int y = checked_index(pyax[r][2], S, where + ".y");
      out.locc_s[sh.s_index(x, y, a)] = out.locc_px[x] * checked_value(pyax[r][3], where + ".value");
    }
  }
  return out;
}

InstructionSet read_instructions_file(const std::string& path) { return parse_instructions_json(io::read_file(path)); }

std::string instructions_to_json(const InstructionSet& instr) {
  const Shape& sh = instr.shape;
  json rows = json::array();
  for (int x = 0; x < sh.settings; ++x)
    for (int y = 0; y < sh.settings; ++y)
      for (int a = 0; a < sh.outcomes; ++a)
        for (int b = 0; b < sh.outcomes; ++b) rows.push_back({x + 1, y + 1, a + 1, b + 1, instr.n(x, y, a, b)});
  json factors = json::object();
  if (instr.scenario == Scenario::lo) {
    json pxy = json::array();
    for (int x = 0; x < sh.settings; ++x)
      for (int y = 0; y < sh.settings; ++y) pxy.push_back({x + 1, y + 1, instr.lo_joint[sh.xy_index(x, y)]});
    factors["p_xy"] = pxy;
  } else {
    const LoccFactors f = factorize_locc(instr, 1e-12);
    json px = json::array();
    json pyax = json::array();
    for (int x = 0; x < sh.settings; ++x) px.push_back({x + 1, f.p_x[x]});
    for (int a = 0; a < sh.outcomes; ++a)
      for (int x = 0; x < sh.settings; ++x)
        for (int y = 0; y < sh.settings; ++y) {
          pyax.push_back({a + 1, x + 1, y + 1, f.p_y_given_ax[sh.y_given_ax_index(x, a, y)]});
        }
    factors["p_x"] = px;
    factors["p_y_given_ax"] = pyax;
  }
  json doc{{"scenario", to_string(instr.scenario)},
           {"settings", sh.settings},
           {"outcomes", sh.outcomes},
           {"n_table", rows},
           {"factors", factors}};
  return doc.dump(2);
}

}  // namespace locc
