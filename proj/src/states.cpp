#include "locc/states.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "locc/error.hpp"

namespace locc {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI(0.0, 1.0);

ComplexVector ket(std::initializer_list<Complex> entries) {
  ComplexVector v(static_cast<Eigen::Index>(entries.size()));
  Eigen::Index k = 0;
  for (const Complex& c : entries) v(k++) = c;
  return v;
}

}  // namespace

double StateParams::p1() const { return 0.5 * (std::tanh(e1) + 1.0); }

StateParams StateParams::canonical() const {
  StateParams out = *this;
  out.phi = std::fmod(phi, 2.0 * kPi);
  if (out.phi < 0.0) out.phi += 2.0 * kPi;
  out.theta = std::clamp(theta, 0.0, kPi);
  return out;
}

double e1_from_p1(double p1) {
  if (!(p1 > 0.0 && p1 < 1.0)) throw InvalidInput("e1_from_p1: p1 must lie in (0, 1)");
  return std::atanh(2.0 * p1 - 1.0);
}

ComplexVector psi_from_angles(double theta, double phi) {
  ComplexVector v = ComplexVector::Zero(9);
  v(0) = std::sin(theta / 2.0) * std::cos(phi / 4.0);
  v(4) = std::sin(theta / 2.0) * std::sin(phi / 4.0);
  v(8) = std::cos(theta / 2.0);
  return v;
}

const std::array<ComplexMatrix, 8>& gell_mann() {
  static const std::array<ComplexMatrix, 8> mats = [] {
    std::array<ComplexMatrix, 8> g;
    for (auto& m : g) m = ComplexMatrix::Zero(3, 3);
    g[0](0, 1) = g[0](1, 0) = 1.0;
    g[1](0, 1) = -kI;
    g[1](1, 0) = kI;
    g[2](0, 0) = 1.0;
    g[2](1, 1) = -1.0;
    g[3](0, 2) = g[3](2, 0) = 1.0;
    g[4](0, 2) = -kI;
    g[4](2, 0) = kI;
    g[5](1, 2) = g[5](2, 1) = 1.0;
    g[6](1, 2) = -kI;
    g[6](2, 1) = kI;
    const double s = 1.0 / std::sqrt(3.0);
    g[7](0, 0) = s;
    g[7](1, 1) = s;
    g[7](2, 2) = -2.0 * s;
    return g;
  }();
  return mats;
}

const std::array<ComplexMatrix, kNumGenerators>& generators() {
  static const std::array<ComplexMatrix, kNumGenerators> gens = [] {
    std::array<ComplexMatrix, kNumGenerators> t;
    for (int j = 0; j < 8; ++j) t[j] = kI * gell_mann()[j];
    t[8] = kI * ComplexMatrix::Identity(3, 3);
    return t;
  }();
  return gens;
}

ComplexMatrix local_unitary(const std::array<double, kNumGenerators>& lambda) {
  ComplexMatrix h = ComplexMatrix::Zero(3, 3);
  for (int j = 0; j < kNumGenerators; ++j) h += lambda[j] * generators()[j];
  return unitary_exp(h);
}

ComplexVector prepared_vector(const StateParams& p) {
  const ComplexMatrix u = kron(local_unitary(p.lambda), ComplexMatrix::Identity(3, 3));
  return u * psi_from_angles(p.theta, p.phi);
}

DensityMatrix prepare_state(const StateParams& p) { return DensityMatrix::from_pure(prepared_vector(p)); }

ComplexVector optimized_vector_raw() {
  return ket({{-0.2707, -0.2859},
              {0.2435, 0.2818},
              {-0.1624, 0.1675},
              {0.0932, 0.1845},
              {-0.1873, -0.1474},
              {-0.2944, 0.2817},
              {0.3284, -0.2914},
              {0.3043, -0.3131},
              {-0.0182, 0.0503}});
}

DensityMatrix optimized_state() { return DensityMatrix::from_pure(optimized_vector_raw()); }

// --- measurements ----------------------------------------------------------

namespace {

void check_family(const MeasurementModel::Family& fam, const char* who) {
  if (fam.empty() || fam.front().empty()) {
    throw InvalidInput(std::string("measurement model: ") + who + " has no settings");
  }
  const Eigen::Index d = fam.front().front().rows();
  for (std::size_t x = 0; x < fam.size(); ++x) {
    if (fam[x].size() != fam.front().size()) {
      throw InvalidInput(std::string("measurement model: ") + who + " settings differ in outcome count");
    }
    ComplexMatrix sum = ComplexMatrix::Zero(d, d);
    for (std::size_t a = 0; a < fam[x].size(); ++a) {
      const ComplexMatrix& p = fam[x][a];
      if (p.rows() != d || p.cols() != d) {
        throw InvalidInput(std::string("measurement model: ") + who + " projector has wrong size");
      }
      if (!is_hermitian(p) || (p * p - p).cwiseAbs().maxCoeff() > 1e-10) {
        throw InvalidInput(std::string("measurement model: ") + who + " setting " + std::to_string(x + 1) +
                           " outcome " + std::to_string(a + 1) + " is not a projector");
      }
      sum += p;
    }
    if ((sum - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10) {
      throw InvalidInput(std::string("measurement model: ") + who + " setting " + std::to_string(x + 1) +
                         " does not sum to the identity");
    }
  }
}

MeasurementModel::Family projectors_of(const std::vector<std::vector<ComplexVector>>& vecs) {
  MeasurementModel::Family fam(vecs.size());
  for (std::size_t x = 0; x < vecs.size(); ++x) {
    for (const ComplexVector& v : vecs[x]) fam[x].push_back(projector(v.normalized()));
  }
  return fam;
}

}  // namespace

MeasurementModel::MeasurementModel(Family alice, Family bob) : alice_(std::move(alice)), bob_(std::move(bob)) {
  check_family(alice_, "alice");
  check_family(bob_, "bob");
  if (alice_.size() != bob_.size() || alice_.front().size() != bob_.front().size()) {
    throw InvalidInput("measurement model: alice and bob must have the same setting and outcome counts");
  }
}

MeasurementModel MeasurementModel::from_vectors(const std::vector<std::vector<ComplexVector>>& alice,
                                                const std::vector<std::vector<ComplexVector>>& bob) {
  return MeasurementModel(projectors_of(alice), projectors_of(bob));
}

const ComplexMatrix& MeasurementModel::alice(int x, int a) const {
  if (x < 0 || x >= settings() || a < 0 || a >= outcomes()) {
    throw InvalidInput("measurement index out of range (alice x=" + std::to_string(x) + ", a=" + std::to_string(a) +
                       ")");
  }
  return alice_[x][a];
}

const ComplexMatrix& MeasurementModel::bob(int y, int b) const {
  if (y < 0 || y >= settings() || b < 0 || b >= outcomes()) {
    throw InvalidInput("measurement index out of range (bob y=" + std::to_string(y) + ", b=" + std::to_string(b) +
                       ")");
  }
  return bob_[y][b];
}

ComplexMatrix MeasurementModel::effect(int x, int a, int y, int b) const { return kron(alice(x, a), bob(y, b)); }

std::vector<std::vector<ComplexVector>> standard_basis_vectors() {
  const double s3 = 1.0 / std::sqrt(3.0);
  const double s2 = 1.0 / std::sqrt(2.0);
  const Complex w = std::polar(1.0, 2.0 * kPi / 3.0);
  return {
      {ket({1, 0, 0}), ket({0, 1, 0}), ket({0, 0, 1})},
      {s3 * ket({1, w, std::conj(w)}), s3 * ket({1, std::conj(w), w}), s3 * ket({1, 1, 1})},
      {s2 * ket({1, -1, 0}), ket({0, 0, 1}), s2 * ket({1, 1, 0})},
  };
}

std::vector<std::vector<ComplexVector>> uncalibrated_basis_vectors() {
  const double s3 = 1.0 / std::sqrt(3.0);
  const double s2 = 1.0 / std::sqrt(2.0);
  const Complex w = std::polar(1.0, -2.0 * kPi / 3.0);
  return {
      {ket({1, 0, 0}), ket({0, 1, 0}), ket({0, 0, 1})},
      {s3 * ket({1, w, std::conj(w)}), s3 * ket({1, std::conj(w), w}), s3 * ket({1, 1, 1})},
      {s2 * ket({0, 1, -1}), ket({1, 0, 0}), s2 * ket({0, 1, 1})},
  };
}

MeasurementModel standard_bases() {
  const auto v = standard_basis_vectors();
  return MeasurementModel::from_vectors(v, v);
}

MeasurementModel uncalibrated_bases() {
  const auto v = uncalibrated_basis_vectors();
  return MeasurementModel::from_vectors(v, v);
}

double born_probability(const DensityMatrix& rho, const MeasurementModel& mm, int x, int a, int y, int b) {
  const double p = (rho.mat() * mm.effect(x, a, y, b)).trace().real();
  return std::clamp(p, 0.0, 1.0);
}

// --- JSON ------------------------------------------------------------------

namespace {

using nlohmann::json;

Complex parse_complex(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("re") || !j.contains("im") || !j["re"].is_number() || !j["im"].is_number()) {
    throw InvalidInput("state file: " + where + " must be an object with numeric \"re\" and \"im\"");
  }
  return {j["re"].get<double>(), j["im"].get<double>()};
}

json complex_json(Complex c) { return json{{"re", c.real()}, {"im", c.imag()}}; }

}  // namespace

DensityMatrix parse_state_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("state file: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidInput("state file: top level must be an object");
  SubsystemDims dims;
  if (doc.contains("dims")) {
    const json& d = doc["dims"];
    if (!d.is_array() || d.size() != 2 || !d[0].is_number_integer() || !d[1].is_number_integer()) {
      throw InvalidInput("state file: \"dims\" must be a pair of integers");
    }
    dims = {d[0].get<int>(), d[1].get<int>()};
    if (dims.dim_a != 3 || dims.dim_b != 3) throw InvalidInput("state file: \"dims\" must be [3,3]");
  }
  const int n = dims.total();
  if (doc.contains("vector")) {
    const json& v = doc["vector"];
    if (!v.is_array() || static_cast<int>(v.size()) != n) {
      throw InvalidInput("state file: \"vector\" must have " + std::to_string(n) + " entries");
    }
    ComplexVector psi(n);
    for (int k = 0; k < n; ++k) psi(k) = parse_complex(v[k], "vector[" + std::to_string(k) + "]");
    const double norm = psi.norm();
    if (std::abs(norm - 1.0) > kStateFileTol) {
      throw InvalidInput("state file: \"vector\" has norm " + std::to_string(norm) + ", expected 1");
    }
    return DensityMatrix::from_pure(psi, dims);
  }
  if (doc.contains("matrix")) {
    const json& m = doc["matrix"];
    if (!m.is_array() || static_cast<int>(m.size()) != n) {
      throw InvalidInput("state file: \"matrix\" must have " + std::to_string(n) + " rows");
    }
    ComplexMatrix rho(n, n);
    for (int i = 0; i < n; ++i) {
      if (!m[i].is_array() || static_cast<int>(m[i].size()) != n) {
        throw InvalidInput("state file: \"matrix\" row " + std::to_string(i) + " must have " + std::to_string(n) +
                           " entries");
      }
      for (int j = 0; j < n; ++j) {
        rho(i, j) = parse_complex(m[i][j], "matrix[" + std::to_string(i) + "][" + std::to_string(j) + "]");
      }
    }
    try {
      return DensityMatrix(rho, dims, kStateFileTol);
    } catch (const InvalidInput& e) {
      throw InvalidInput(std::string("state file: \"matrix\": ") + e.what());
    }
  }
  throw InvalidInput("state file: needs a \"vector\" or \"matrix\" field");
}

DensityMatrix read_state_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open state file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_state_json(buf.str());
}

std::string state_to_json(const DensityMatrix& rho) {
  json rows = json::array();
  for (int i = 0; i < rho.dim(); ++i) {
    json row = json::array();
    for (int j = 0; j < rho.dim(); ++j) row.push_back(complex_json(rho.mat()(i, j)));
    rows.push_back(row);
  }
  json doc{{"dims", {rho.dims().dim_a, rho.dims().dim_b}}, {"matrix", rows}};
  return doc.dump(2);
}

}  // namespace locc
