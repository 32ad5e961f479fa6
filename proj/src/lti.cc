#include "gramsel/lti.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

#include <Eigen/Eigenvalues>
#include "json.hpp"

#include "gramsel/errors.h"
#include "gramsel/random.h"

namespace gramsel {

using nlohmann::json;

double spectral_abscissa(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw DimensionError("spectral_abscissa: matrix is not square");
  if (a.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_abscissa: eigenvalue iteration failed");
  return es.eigenvalues().real().maxCoeff();
}

LtiSystem::LtiSystem(Eigen::MatrixXd a, Eigen::MatrixXd base_columns, std::vector<CandidateActuator> candidates,
                     Stability stability)
    : a_(std::move(a)), base_(std::move(base_columns)), candidates_(std::move(candidates)) {
  if (a_.rows() < 1 || a_.rows() != a_.cols()) {
    throw DimensionError("A must be a non-empty square matrix, got " + std::to_string(a_.rows()) + "x" +
                         std::to_string(a_.cols()));
  }
  const auto n = a_.rows();
  if (base_.size() == 0) base_.resize(n, 0);
  if (base_.rows() != n) {
    throw DimensionError("B0 columns have length " + std::to_string(base_.rows()) + ", expected " +
                         std::to_string(n));
  }
  std::unordered_set<std::string> seen;
  for (const auto& c : candidates_) {
    if (c.column.size() != n) {
      throw DimensionError("candidate '" + c.id + "' has length " + std::to_string(c.column.size()) +
                           ", expected " + std::to_string(n));
    }
    if (!seen.insert(c.id).second) throw DuplicateIdError("duplicate candidate id '" + c.id + "'");
    if (c.column.isZero(0.0)) throw ValidationError("candidate '" + c.id + "' is the zero vector");
  }
  if (!a_.allFinite() || !base_.allFinite()) throw ValidationError("system contains non-finite entries");
  abscissa_ = spectral_abscissa(a_);
  if (stability == Stability::kRequire && !(abscissa_ < -kStabilityTolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "A is not stable: spectral abscissa " << abscissa_ << " >= " << -kStabilityTolerance;
    throw InstabilityError(msg.str(), abscissa_);
  }
}

int LtiSystem::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    if (candidates_[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

Eigen::MatrixXd LtiSystem::candidate_matrix() const {
  Eigen::MatrixXd b(n(), num_candidates());
  for (int j = 0; j < num_candidates(); ++j) b.col(j) = candidates_[j].column;
  return b;
}

bool operator==(const LtiSystem& x, const LtiSystem& y) {
  if (x.a_.rows() != y.a_.rows() || x.base_.cols() != y.base_.cols() ||
      x.candidates_.size() != y.candidates_.size()) {
    return false;
  }
  if (x.a_ != y.a_ || x.base_ != y.base_) return false;
  for (std::size_t i = 0; i < x.candidates_.size(); ++i) {
    if (x.candidates_[i].id != y.candidates_[i].id || x.candidates_[i].column != y.candidates_[i].column) {
      return false;
    }
  }
  return true;
}

std::vector<CandidateActuator> unit_candidates(int n) {
  std::vector<CandidateActuator> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back({"e" + std::to_string(i + 1), Eigen::VectorXd::Unit(n, i)});
  return out;
}

LtiSystem random_stable_system(int n, int num_candidates, std::uint64_t seed, double margin) {
  if (n < 1) throw ValidationError("random_stable_system: n must be >= 1");
  if (!(margin > 0.0)) throw ValidationError("random_stable_system: margin must be > 0");
  if (num_candidates < 0 || num_candidates > n) {
    throw ValidationError("random_stable_system: num_candidates must be in [0, n]; other pools come from files");
  }
  Rng rng(seed);
  Eigen::MatrixXd g(n, n);
  // row-major fill so the draw order is the natural reading order
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  }
  const double shift = spectral_abscissa(g) + margin;
  g.diagonal().array() -= shift;
  auto cands = unit_candidates(n);
  cands.resize(num_candidates);
  return LtiSystem(std::move(g), Eigen::MatrixXd(n, 0), std::move(cands));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

Eigen::VectorXd vector_from(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number_at(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

LtiSystem system_from_json(const json& doc, Stability stability) {
  if (!doc.is_object()) throw ParseError("system file: top level must be an object");
  if (!doc.contains("A")) throw ParseError("system file: missing key \"A\"");
  const json& ja = doc["A"];
  if (!ja.is_array() || ja.empty()) throw ParseError("\"A\": expected a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(ja.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd row = vector_from(ja[i], "A[" + std::to_string(i) + "]");
    if (row.size() != n) {
      throw DimensionError("A row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                           " entries, expected " + std::to_string(n));
    }
    a.row(i) = row.transpose();
  }

  Eigen::MatrixXd base(n, 0);
  if (doc.contains("B0")) {
    const json& jb = doc["B0"];
    if (!jb.is_array()) throw ParseError("\"B0\": expected an array of columns");
    base.resize(n, static_cast<Eigen::Index>(jb.size()));
    for (std::size_t c = 0; c < jb.size(); ++c) {
      const Eigen::VectorXd col = vector_from(jb[c], "B0[" + std::to_string(c) + "]");
      if (col.size() != n) {
        throw DimensionError("B0 column " + std::to_string(c) + " has length " + std::to_string(col.size()) +
                             ", expected " + std::to_string(n));
      }
      base.col(static_cast<Eigen::Index>(c)) = col;
    }
  }

  std::vector<CandidateActuator> cands;
  if (doc.contains("candidates")) {
    const json& jc = doc["candidates"];
    if (!jc.is_array()) throw ParseError("\"candidates\": expected an array");
    for (std::size_t c = 0; c < jc.size(); ++c) {
      const json& item = jc[c];
      const std::string where = "candidates[" + std::to_string(c) + "]";
      if (!item.is_object() || !item.contains("id") || !item["id"].is_string() || !item.contains("column")) {
        throw ParseError(where + ": expected {\"id\": string, \"column\": [numbers]}");
      }
      cands.push_back({item["id"].get<std::string>(), vector_from(item["column"], where + ".column")});
    }
  }
  return LtiSystem(std::move(a), std::move(base), std::move(cands), stability);
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

LtiSystem load_system_json(std::istream& in, Stability stability) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("system file: ") + e.what());
  }
  return system_from_json(doc, stability);
}

LtiSystem load_system_json_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return load_system_json(in);
}

std::string save_system_json(const LtiSystem& sys) {
  json doc;
  json ja = json::array();
  for (int i = 0; i < sys.n(); ++i) ja.push_back(vector_json(sys.a().row(i).transpose()));
  doc["A"] = std::move(ja);
  json jb = json::array();
  for (Eigen::Index c = 0; c < sys.base_columns().cols(); ++c) jb.push_back(vector_json(sys.base_columns().col(c)));
  doc["B0"] = std::move(jb);
  json jc = json::array();
  for (const auto& c : sys.candidates()) jc.push_back({{"id", c.id}, {"column", vector_json(c.column)}});
  doc["candidates"] = std::move(jc);
  return doc.dump(1);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (!s.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (s.empty() || ec != std::errc() || ptr != end) throw ParseError(where + ": '" + s + "' is not a number");
  return v;
}

std::vector<std::vector<std::string>> read_rows(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split(line, ','));
  }
  return rows;
}

}  // namespace

LtiSystem load_system_csv(std::istream& a_csv, std::istream& candidates_csv, Stability stability) {
  const auto a_rows = read_rows(a_csv);
  const auto n = static_cast<Eigen::Index>(a_rows.size());
  if (n == 0) throw ParseError("A csv: no rows");
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(a_rows[i].size()) != n) {
      throw DimensionError("A csv row " + std::to_string(i + 1) + " has " + std::to_string(a_rows[i].size()) +
                           " fields, expected " + std::to_string(n));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) = parse_double(a_rows[i][j], "A csv row " + std::to_string(i + 1));
    }
  }

  const auto c_rows = read_rows(candidates_csv);
  if (c_rows.empty()) throw ParseError("candidates csv: missing header line");
  std::vector<CandidateActuator> cands;
  for (const auto& id : c_rows.front()) cands.push_back({trim(id), Eigen::VectorXd(n)});
  if (static_cast<Eigen::Index>(c_rows.size()) - 1 != n) {
    throw DimensionError("candidates csv has " + std::to_string(c_rows.size() - 1) + " data rows, expected " +
                         std::to_string(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = c_rows[i + 1];
    if (row.size() != cands.size()) {
      throw DimensionError("candidates csv row " + std::to_string(i + 2) + " has " + std::to_string(row.size()) +
                           " fields, expected " + std::to_string(cands.size()));
    }
    for (std::size_t c = 0; c < cands.size(); ++c) {
      cands[c].column(i) = parse_double(row[c], "candidates csv row " + std::to_string(i + 2));
    }
  }
  return LtiSystem(std::move(a), Eigen::MatrixXd(n, 0), std::move(cands), stability);
}

void save_system_csv(const LtiSystem& sys, std::ostream& a_csv, std::ostream& candidates_csv) {
  const auto old_a = a_csv.precision(17);
  const auto old_c = candidates_csv.precision(17);
  for (int i = 0; i < sys.n(); ++i) {
    for (int j = 0; j < sys.n(); ++j) a_csv << (j ? "," : "") << sys.a()(i, j);
    a_csv << '\n';
  }
  for (int c = 0; c < sys.num_candidates(); ++c) candidates_csv << (c ? "," : "") << sys.candidates()[c].id;
  candidates_csv << '\n';
  for (int i = 0; i < sys.n(); ++i) {
    for (int c = 0; c < sys.num_candidates(); ++c) {
      candidates_csv << (c ? "," : "") << sys.candidates()[c].column(i);
    }
    candidates_csv << '\n';
  }
  a_csv.precision(old_a);
  candidates_csv.precision(old_c);
}

LtiSystem load_system_file(const std::string& path, Stability stability) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".csv")) {
    std::string stem;
    if (ends_with(".A.csv")) {
      stem = path.substr(0, path.size() - 6);
    } else if (ends_with(".candidates.csv")) {
      stem = path.substr(0, path.size() - 15);
    } else {
      throw ParseError(path + ": CSV systems must be named <stem>.A.csv / <stem>.candidates.csv");
    }
    std::ifstream a_in(stem + ".A.csv");
    std::ifstream c_in(stem + ".candidates.csv");
    if (!a_in || !c_in) throw ParseError("cannot open " + stem + ".A.csv and " + stem + ".candidates.csv");
    return load_system_csv(a_in, c_in, stability);
  }
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return load_system_json(in, stability);
}

}  // namespace gramsel
