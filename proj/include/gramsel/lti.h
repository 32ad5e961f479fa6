#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace gramsel {

/// Stability margin used by the constructor: the abscissa must be below -kStabilityTolerance.
inline constexpr double kStabilityTolerance = 1e-10;

/// kAllow skips the stability check, for finite-horizon work only.
enum class Stability { kRequire, kAllow };

struct CandidateActuator {
  std::string id;
  Eigen::VectorXd column;
};

/// Stable continuous-time LTI system x' = A x + B0 u0 + sum_s b_s u_s with a pool of
/// candidate actuator columns b_s. Immutable once constructed.
class LtiSystem {
 public:
  /// Validates every invariant; throws DimensionError, InstabilityError,
  /// DuplicateIdError or ValidationError (zero candidate column).
  LtiSystem(Eigen::MatrixXd a, Eigen::MatrixXd base_columns, std::vector<CandidateActuator> candidates,
            Stability stability = Stability::kRequire);

  int n() const { return static_cast<int>(a_.rows()); }
  const Eigen::MatrixXd& a() const { return a_; }
  /// n x m0, possibly with zero columns.
  const Eigen::MatrixXd& base_columns() const { return base_; }
  const std::vector<CandidateActuator>& candidates() const { return candidates_; }
  int num_candidates() const { return static_cast<int>(candidates_.size()); }

  /// Index of a candidate id, or -1.
  int index_of(std::string_view id) const;

  /// Candidate columns stacked as an n x M matrix, in pool order.
  Eigen::MatrixXd candidate_matrix() const;

  double abscissa() const { return abscissa_; }

  friend bool operator==(const LtiSystem& x, const LtiSystem& y);

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd base_;
  std::vector<CandidateActuator> candidates_;
  double abscissa_;
};

/// max Re(lambda) over the eigenvalues of a square matrix.
double spectral_abscissa(const Eigen::MatrixXd& a);

/// A = G - (abscissa(G) + margin) I with G standard normal; candidates e_1..e_M
/// labelled "e1".."eM". Deterministic in (n, num_candidates, seed, margin).
LtiSystem random_stable_system(int n, int num_candidates, std::uint64_t seed, double margin = 0.5);

/// Unit-vector candidates e_1..e_n with ids "e1".."en".
std::vector<CandidateActuator> unit_candidates(int n);

enum class SystemFormat { kJson, kCsvPair };

/// JSON system file, see docs/file-formats.md.
LtiSystem load_system_json(std::istream& in, Stability stability = Stability::kRequire);
LtiSystem load_system_json_string(std::string_view text);
/// CSV pair: one stream holding A, one holding the candidate table.
LtiSystem load_system_csv(std::istream& a_csv, std::istream& candidates_csv,
                          Stability stability = Stability::kRequire);

/// Dispatches on the file extension: ".json" or, for CSV, "<stem>.A.csv" together with
/// "<stem>.candidates.csv" given either file name.
LtiSystem load_system_file(const std::string& path, Stability stability = Stability::kRequire);

/// JSON with numbers printed in shortest round-trip form, so a load restores the system exactly.
std::string save_system_json(const LtiSystem& sys);
void save_system_csv(const LtiSystem& sys, std::ostream& a_csv, std::ostream& candidates_csv);

}  // namespace gramsel
