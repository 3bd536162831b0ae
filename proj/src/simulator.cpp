#include "locc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <thread>

#include "locc/error.hpp"
#include "locc/io.hpp"

namespace locc {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream purposes.
constexpr std::uint64_t kRoundPurpose = 1;
constexpr std::uint64_t kTableX = 2;
constexpr std::uint64_t kTableYBase = 1ULL << 8;
constexpr std::uint64_t kTableNBase = 1ULL << 16;
constexpr std::uint64_t kResampleShift = 32;
constexpr std::uint64_t kNoisePurpose = 3;

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t purpose, std::uint64_t counter)
    : state_(mix64(mix64(seed + kGolden) ^ mix64(purpose * kGolden + 0x632be59bd9b4e019ULL)) ^
             mix64(counter + 0xd1b54a32d192ed03ULL)) {}

std::uint64_t CounterRng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

int CounterRng::categorical(const double* weights, int count) {
  double total = 0.0;
  for (int k = 0; k < count; ++k) total += std::max(0.0, weights[k]);
  if (!(total > 0.0)) return -1;
  const double u = uniform() * total;
  double acc = 0.0;
  int last = -1;
  for (int k = 0; k < count; ++k) {
    const double w = std::max(0.0, weights[k]);
    if (w <= 0.0) continue;
    acc += w;
    last = k;
    if (u < acc) return k;
  }
  return last;
}

std::vector<double> born_table(const DensityMatrix& rho, const MeasurementModel& mm) {
  const Shape sh{mm.settings(), mm.outcomes()};
  std::vector<double> p(sh.n_size());
  for (int x = 0; x < sh.settings; ++x)
    for (int y = 0; y < sh.settings; ++y)
      for (int a = 0; a < sh.outcomes; ++a)
        for (int b = 0; b < sh.outcomes; ++b) {
          const ComplexMatrix e = mm.effect(x, a, y, b);
          p[sh.n_index(x, y, a, b)] = std::max(0.0, (rho.mat().cwiseProduct(e.transpose())).sum().real());
        }
  return p;
}

namespace {

// Born-rule sampling helpers over the n_index layout.
struct BornSampler {
  Shape shape;
  std::vector<double> joint;   // p(x,y,a,b)
  std::vector<double> alice;   // P(a|x), x * outcomes + a

  BornSampler(const DensityMatrix& rho, const MeasurementModel& mm)
      : shape{mm.settings(), mm.outcomes()}, joint(born_table(rho, mm)) {
    alice.assign(shape.settings * shape.outcomes, 0.0);
    for (int x = 0; x < shape.settings; ++x)
      for (int a = 0; a < shape.outcomes; ++a) {
        const ComplexMatrix pa = kron(mm.alice(x, a), ComplexMatrix::Identity(mm.bob(0, 0).rows(), mm.bob(0, 0).rows()));
        alice[x * shape.outcomes + a] = std::max(0.0, (rho.mat().cwiseProduct(pa.transpose())).sum().real());
      }
  }

  const double* b_given(int x, int y, int a) const { return &joint[shape.n_index(x, y, a, 0)]; }
  const double* ab_given(int x, int y) const { return &joint[shape.n_index(x, y, 0, 0)]; }
  const double* a_given(int x) const { return &alice[x * shape.outcomes]; }
};

void check_n(std::uint64_t n) {
  if (n == 0) throw InvalidInput("number of rounds must be at least 1");
}

}  // namespace

SimulationResult run_rounds(const DensityMatrix& rho, const MeasurementModel& mm, const InstructionSet& instr,
                            std::uint64_t n, std::uint64_t seed, double tol, int threads) {
  check_n(n);
  const auto violations = validate(instr, tol);
  if (!violations.empty()) {
    throw InvalidInput("run_rounds: invalid instruction set (" + violations.front().describe() + ")");
  }
  const Shape sh = instr.shape;
  if (mm.settings() != sh.settings || mm.outcomes() != sh.outcomes) {
    throw InvalidInput("run_rounds: measurement model shape does not match the instruction set");
  }
  const BornSampler born(rho, mm);
  const bool lo = instr.scenario == Scenario::lo;
  LoFactors lof;
  LoccFactors loccf;
  if (lo) {
    lof = factorize_lo(instr, 1e-12);
  } else {
    loccf = factorize_locc(instr, 1e-12);
  }
  const std::vector<double>& pn = lo ? lof.p_n_given_xyab : loccf.p_n_given_xyab;
  const int S = sh.settings;
  const int O = sh.outcomes;

  SimulationResult result;
  result.records.resize(n);
  std::vector<std::uint64_t> resampled_by_chunk;

  // Returns false when a conditional distribution vanished.
  auto attempt = [&](CounterRng& rng, RoundRecord& rec) {
    if (lo) {
      const int xy = rng.categorical(lof.p_xy.data(), S * S);
      if (xy < 0) return false;
      rec.x = xy / S;
      rec.y = xy % S;
      const int ab = rng.categorical(born.ab_given(rec.x, rec.y), O * O);
      if (ab < 0) return false;
      rec.a = ab / O;
      rec.b = ab % O;
    } else {
      rec.x = rng.categorical(loccf.p_x.data(), S);
      if (rec.x < 0) return false;
      rec.a = rng.categorical(born.a_given(rec.x), O);
      if (rec.a < 0) return false;
      rec.y = rng.categorical(&loccf.p_y_given_ax[sh.y_given_ax_index(rec.x, rec.a, 0)], S);
      if (rec.y < 0) return false;
      rec.b = rng.categorical(born.b_given(rec.x, rec.y, rec.a), O);
      if (rec.b < 0) return false;
    }
    rec.verdict = rng.uniform() < pn[sh.n_index(rec.x, rec.y, rec.a, rec.b)] ? Verdict::no : Verdict::yes;
    return true;
  };

  auto run_range = [&](std::uint64_t begin, std::uint64_t end, std::uint64_t& resampled) {
    for (std::uint64_t r = begin; r < end; ++r) {
      RoundRecord& rec = result.records[r];
      rec.round = r;
      rec.protocol = instr.scenario;
      for (std::uint64_t tries = 0;; ++tries) {
        CounterRng rng(seed, kRoundPurpose + (tries << kResampleShift), r);
        if (attempt(rng, rec)) break;
        ++resampled;
        if (tries > 1000) throw SolverError("run_rounds: conditioning on a zero-probability event keeps recurring");
      }
    }
  };

  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const std::uint64_t chunks = std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), n);
  resampled_by_chunk.assign(chunks, 0);
  if (chunks <= 1) {
    run_range(0, n, resampled_by_chunk[0]);
  } else {
    std::vector<std::thread> pool;
    for (std::uint64_t c = 0; c < chunks; ++c) {
      pool.emplace_back(run_range, n * c / chunks, n * (c + 1) / chunks, std::ref(resampled_by_chunk[c]));
    }
    for (auto& t : pool) t.join();
  }
  std::uint64_t no = 0;
  for (const RoundRecord& rec : result.records) no += rec.verdict == Verdict::no;
  for (std::uint64_t v : resampled_by_chunk) result.resampled += v;
  result.empirical_p2 = static_cast<double>(no) / static_cast<double>(n);
  return result;
}

// --- shuffled runs -------------------------------------------------------------

void check_merged_for_run(const MergedInstructionSet& merged, double tol) {
  for (const Violation& v : validate_merged(merged, tol)) {
    if (v.constraint != "a-independence") throw InvalidInput("merged tables: " + v.describe());
  }
  for (const Violation& v : validate_merged(merged, 1e-9)) {
    if (v.constraint == "a-independence") {
      throw InvalidInput("merged tables: the LO half of P_m(y'|a,x) depends on a (" + v.describe() + ")");
    }
  }
}

namespace {

int table_n_index(const Shape& sh, Scenario protocol, int n_index) {
  return (protocol == Scenario::lo ? 0 : sh.n_size()) + n_index;
}

int x_digit(const MergedInstructionSet& m, std::uint64_t seed, std::uint64_t k) {
  CounterRng rng(seed, kTableX, k);
  return rng.categorical(m.pm_x.data(), m.shape.settings);
}

int yprime_digit(const MergedInstructionSet& m, std::uint64_t seed, int x, int a, std::uint64_t k) {
  CounterRng rng(seed, kTableYBase + static_cast<std::uint64_t>(x * m.shape.outcomes + a), k);
  return rng.categorical(&m.pm_yprime[m.yprime_index(x, a, 0)], m.yprime_count());
}

int n_digit(const MergedInstructionSet& m, std::uint64_t seed, int table, std::uint64_t k) {
  CounterRng rng(seed, kTableNBase + static_cast<std::uint64_t>(table), k);
  const int nsz = m.shape.n_size();
  const double p = table < nsz ? m.pn_lo[table] : m.pn_locc[table - nsz];
  return rng.uniform() < p ? 1 : 0;
}

// Draws table digits either live or from a bundle; the k-th request to a
// table always sees digit k.
class TableSource {
 public:
  TableSource(const MergedInstructionSet& m, std::uint64_t seed, const RngTableBundle* bundle)
      : m_(m), seed_(seed), bundle_(bundle) {
    used_y_.assign(m.shape.settings * m.shape.outcomes, 0);
    used_n_.assign(2 * m.shape.n_size(), 0);
  }

  int x() {
    const std::uint64_t k = used_x_++;
    if (!bundle_) return x_digit(m_, seed_, k);
    return take(bundle_->rt_x, k, "RTx");
  }
  int yprime(int x, int a) {
    const int t = x * m_.shape.outcomes + a;
    const std::uint64_t k = used_y_[t]++;
    if (!bundle_) return yprime_digit(m_, seed_, x, a, k);
    return take(bundle_->rt_yprime[t], k, "RTy");
  }
  int n(int table) {
    const std::uint64_t k = used_n_[table]++;
    if (!bundle_) return n_digit(m_, seed_, table, k);
    return take(bundle_->rt_n[table], k, "RTN");
  }

 private:
  static int take(const std::vector<int>& digits, std::uint64_t k, const char* name) {
    if (k >= digits.size()) throw InvalidInput(std::string("random-number table ") + name + " exhausted");
    return digits[k];
  }

  const MergedInstructionSet& m_;
  std::uint64_t seed_;
  const RngTableBundle* bundle_;
  std::uint64_t used_x_ = 0;
  std::vector<std::uint64_t> used_y_;
  std::vector<std::uint64_t> used_n_;
};

ShuffledResult shuffled_impl(const DensityMatrix& rho, const MeasurementModel& mm, const MergedInstructionSet& merged,
                             const RngTableBundle* bundle, std::uint64_t n, std::uint64_t seed, double tol) {
  check_n(n);
  check_merged_for_run(merged, tol);
  const Shape sh = merged.shape;
  if (mm.settings() != sh.settings || mm.outcomes() != sh.outcomes) {
    throw InvalidInput("run_shuffled: measurement model shape does not match the merged tables");
  }
  if (bundle && !(bundle->shape == sh)) throw InvalidInput("run_shuffled: table bundle shape mismatch");
  const BornSampler born(rho, mm);
  TableSource tables(merged, seed, bundle);
  const int S = sh.settings;
  const int O = sh.outcomes;

  ShuffledResult out;
  out.records.resize(n);
  std::uint64_t no_lo = 0;
  std::uint64_t no_locc = 0;
  for (std::uint64_t r = 0; r < n; ++r) {
    CounterRng rng(seed, kRoundPurpose, r);
    RoundRecord& rec = out.records[r];
    rec.round = r;
    rec.x = tables.x();
    if (rec.x < 0) throw InvalidInput("run_shuffled: P_m(x) has no mass");
    rec.a = rng.categorical(born.a_given(rec.x), O);
    rec.yprime = tables.yprime(rec.x, rec.a);
    if (rec.a < 0 || rec.yprime < 0) throw InvalidInput("run_shuffled: zero-probability conditioning");
    rec.protocol = rec.yprime < S ? Scenario::lo : Scenario::one_way_locc;
    rec.y = rec.yprime % S;
    rec.b = rng.categorical(born.b_given(rec.x, rec.y, rec.a), O);
    if (rec.b < 0) throw InvalidInput("run_shuffled: zero-probability conditioning");
    const int table = table_n_index(sh, rec.protocol, sh.n_index(rec.x, rec.y, rec.a, rec.b));
    rec.verdict = tables.n(table) ? Verdict::no : Verdict::yes;
    if (rec.protocol == Scenario::lo) {
      ++out.lo_rounds;
      no_lo += rec.verdict == Verdict::no;
    } else {
      ++out.locc_rounds;
      no_locc += rec.verdict == Verdict::no;
    }
  }
  if (out.lo_rounds) out.p2_lo = static_cast<double>(no_lo) / static_cast<double>(out.lo_rounds);
  if (out.locc_rounds) out.p2_locc = static_cast<double>(no_locc) / static_cast<double>(out.locc_rounds);
  return out;
}

}  // namespace

ShuffledResult run_shuffled(const DensityMatrix& rho, const MeasurementModel& mm, const MergedInstructionSet& merged,
                            std::uint64_t n, std::uint64_t seed, double tol) {
  return shuffled_impl(rho, mm, merged, nullptr, n, seed, tol);
}

ShuffledResult run_shuffled_replay(const DensityMatrix& rho, const MeasurementModel& mm,
                                   const MergedInstructionSet& merged, const RngTableBundle& tables,
                                   std::uint64_t n, std::uint64_t seed, double tol) {
  return shuffled_impl(rho, mm, merged, &tables, n, seed, tol);
}

RngTableBundle generate_rng_tables(const MergedInstructionSet& merged, std::uint64_t seed, TableLengths lengths) {
  if (lengths.rt_x == 0 || lengths.rt_yprime == 0 || lengths.rt_n == 0) {
    throw InvalidInput("generate_rng_tables: every table length must be at least 1");
  }
  const Shape sh = merged.shape;
  RngTableBundle b;
  b.shape = sh;
  b.rt_x.resize(lengths.rt_x);
  for (std::size_t k = 0; k < lengths.rt_x; ++k) b.rt_x[k] = x_digit(merged, seed, k);
  b.rt_yprime.assign(sh.settings * sh.outcomes, std::vector<int>(lengths.rt_yprime));
  for (int x = 0; x < sh.settings; ++x)
    for (int a = 0; a < sh.outcomes; ++a)
      for (std::size_t k = 0; k < lengths.rt_yprime; ++k) {
        b.rt_yprime[x * sh.outcomes + a][k] = yprime_digit(merged, seed, x, a, k);
      }
  b.rt_n.assign(2 * sh.n_size(), std::vector<int>(lengths.rt_n));
  for (int t = 0; t < 2 * sh.n_size(); ++t)
    for (std::size_t k = 0; k < lengths.rt_n; ++k) b.rt_n[t][k] = n_digit(merged, seed, t, k);
  return b;
}

namespace {

std::string yprime_file(int x, int a) {
  return "RTy_a" + std::to_string(a + 1) + "x" + std::to_string(x + 1) + ".txt";
}

std::string n_file(const Shape& sh, int table) {
  const bool lo = table < sh.n_size();
  int k = lo ? table : table - sh.n_size();
  const int b = k % sh.outcomes;
  k /= sh.outcomes;
  const int a = k % sh.outcomes;
  k /= sh.outcomes;
  const int y = k % sh.settings;
  const int x = k / sh.settings;
  return std::string("RTN_") + (lo ? "LO" : "1LOCC") + "_a" + std::to_string(a + 1) + "b" + std::to_string(b + 1) +
         "x" + std::to_string(x + 1) + "y" + std::to_string(y + 1) + ".txt";
}

std::string digits_text(const std::vector<int>& digits) {
  std::string s;
  s.reserve(digits.size() + 1);
  for (int d : digits) s.push_back(static_cast<char>('0' + d));
  s.push_back('\n');
  return s;
}

std::vector<int> parse_digits(const std::string& text, const std::string& path, int limit) {
  std::vector<int> out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '\n' || c == '\r' || c == ' ') continue;
    const int d = c - '0';
    if (d < 0 || d >= limit) throw InvalidInput(path + ": unexpected character in digit table");
    out.push_back(d);
  }
  return out;
}

}  // namespace

void write_rng_tables(const RngTableBundle& t, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const Shape& sh = t.shape;
  io::write_file(dir + "/RTx.txt", digits_text(t.rt_x));
  for (int x = 0; x < sh.settings; ++x)
    for (int a = 0; a < sh.outcomes; ++a) {
      io::write_file(dir + "/" + yprime_file(x, a), digits_text(t.rt_yprime[x * sh.outcomes + a]));
    }
  for (int k = 0; k < static_cast<int>(t.rt_n.size()); ++k) io::write_file(dir + "/" + n_file(sh, k), digits_text(t.rt_n[k]));
}

RngTableBundle read_rng_tables(const std::string& dir, Shape shape) {
  RngTableBundle t;
  t.shape = shape;
  t.rt_x = parse_digits(io::read_file(dir + "/RTx.txt"), dir + "/RTx.txt", shape.settings);
  t.rt_yprime.resize(shape.settings * shape.outcomes);
  for (int x = 0; x < shape.settings; ++x)
    for (int a = 0; a < shape.outcomes; ++a) {
      const std::string path = dir + "/" + yprime_file(x, a);
      t.rt_yprime[x * shape.outcomes + a] = parse_digits(io::read_file(path), path, 2 * shape.settings);
    }
  t.rt_n.resize(2 * shape.n_size());
  for (int k = 0; k < 2 * shape.n_size(); ++k) {
    const std::string path = dir + "/" + n_file(shape, k);
    t.rt_n[k] = parse_digits(io::read_file(path), path, 2);
  }
  return t;
}

ExpectationData estimate_expectations(const std::vector<RoundRecord>& records,
                                      const std::vector<ExpectationEntry>& support) {
  const Shape sh;
  std::vector<std::uint64_t> setting_counts(sh.settings * sh.settings, 0);
  std::vector<std::uint64_t> cell_counts(sh.n_size(), 0);
  for (const RoundRecord& r : records) {
    if (r.x < 0 || r.x >= sh.settings || r.y < 0 || r.y >= sh.settings || r.a < 0 || r.a >= sh.outcomes || r.b < 0 ||
        r.b >= sh.outcomes) {
      throw InvalidInput("estimate_expectations: record " + std::to_string(r.round) + " has indices out of range");
    }
    ++setting_counts[sh.xy_index(r.x, r.y)];
    ++cell_counts[sh.n_index(r.x, r.y, r.a, r.b)];
  }
  ExpectationData data;
  for (ExpectationEntry e : support) {
    const std::uint64_t total = setting_counts[sh.xy_index(e.x, e.y)];
    if (total == 0) {
      data.missing.push_back(e);
      continue;
    }
    e.value = static_cast<double>(cell_counts[sh.n_index(e.x, e.y, e.a, e.b)]) / static_cast<double>(total);
    data.entries.push_back(e);
  }
  return data;
}

ExpectationData perturb_expectations(const ExpectationData& data, double scale, std::uint64_t seed) {
  if (!(scale >= 0.0)) throw InvalidInput("perturb_expectations: scale must be nonnegative");
  ExpectationData out = data;
  for (std::size_t k = 0; k < out.entries.size(); ++k) {
    CounterRng rng(seed, kNoisePurpose, k);
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    out.entries[k].value = std::clamp(out.entries[k].value + scale * g, 0.0, 1.0);
  }
  return out;
}

std::string records_to_csv(const std::vector<RoundRecord>& records) {
  std::string out = "round,protocol,x,a,yprime,y,b,verdict\n";
  out.reserve(out.size() + records.size() * 24);
  for (const RoundRecord& r : records) {
    out += std::to_string(r.round);
    out += ',';
    out += to_string(r.protocol);
    out += ',';
    out += std::to_string(r.x + 1);
    out += ',';
    out += std::to_string(r.a + 1);
    out += ',';
    if (r.yprime >= 0) out += std::to_string(r.yprime);
    out += ',';
    out += std::to_string(r.y + 1);
    out += ',';
    out += std::to_string(r.b + 1);
    out += ',';
    out += r.verdict == Verdict::no ? 'N' : 'Y';
    out += '\n';
  }
  return out;
}

}  // namespace locc
