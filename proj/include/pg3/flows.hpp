#pragma once

#include "pg3/projective.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pg3 {

/// Conjugacy families of one-parameter subgroups of PGL(4,R), by the real
/// Jordan structure of a generator.
enum class JordanCase { A1, A2, B1, B2, C1, C2, C3, C4, C5 };

inline constexpr std::array<JordanCase, 9> kAllCases{JordanCase::A1, JordanCase::A2, JordanCase::B1,
                                                     JordanCase::B2, JordanCase::C1, JordanCase::C2,
                                                     JordanCase::C3, JordanCase::C4, JordanCase::C5};

/// Lower-case tag ("a1" ... "c5").
std::string_view to_string(JordanCase c);
/// Accepts either case; nullopt for unknown tags.
std::optional<JordanCase> parse_case(std::string_view tag);

/// Names of the parameters each case uses, e.g. {"a","b","c"} for A1.
std::vector<std::string> parameter_names(JordanCase c);

class InvalidFlow : public Error {
 public:
  using Error::Error;
};

class NotClassifiable : public Error {
 public:
  using Error::Error;
};

struct FlowParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  double get(std::string_view name) const;
  void set(std::string_view name, double value);
};

/// exp(tA) for one of the canonical generators A. The closed form is
/// authoritative; the generator is kept for cross-checks and exterior powers.
class OneParamFlow {
 public:
  /// Throws InvalidFlow if the parameters violate the case constraints
  /// (rotation speeds a, c nonzero where used; C5 not projectively trivial).
  OneParamFlow(JordanCase kind, FlowParams params);

  JordanCase kind() const { return kind_; }
  const FlowParams& params() const { return params_; }
  Mat4 generator() const;

  /// Period 2*pi/a of the rotation block (cases A1, A2, B1, B2).
  std::optional<double> rotation_period() const;

  /// gamma_t as a normalized projective map, evaluated overflow-safely.
  ProjMap gamma(double t) const;
  /// gamma_t with the largest exponential factor divided out (unnormalized).
  Mat4 scaled_matrix(double t) const;

 private:
  JordanCase kind_;
  FlowParams params_;
};

struct ClassificationResult {
  JordanCase kind;
  FlowParams params;
  Mat4 conjugator;   // conjugator^{-1} A conjugator ~ generator + shift * I
  double shift = 0.0;
  double residual = 0.0;
  bool ambiguous = false;
};

/// Real Jordan classification of a 4x4 generator up to conjugacy and scalar shift.
/// tol is relative to the Frobenius norm of the traceless part.
/// Throws NotClassifiable for (numerically) scalar matrices.
ClassificationResult classify_generator(const Mat4& a, double tol = 1e-6);

/// Continued-fraction reconstruction p/q of a real number.
struct RationalReconstruction {
  long long numerator = 0;
  long long denominator = 1;
  double error = 0.0;
  bool exact = false;  // error within rounding at denominator <= cutoff
};

RationalReconstruction reconstruct_rational(double x, long long max_denominator = 1'000'000);

enum class Compactness { CompactClosure, NonClosed, ClosedNonCompact };

struct CompactnessReport {
  Compactness status;
  int closure_torus_rank = 0;  // 2 for NonClosed
  std::optional<RationalReconstruction> ratio;  // c/a for A1 with b = 0
};

std::string_view to_string(Compactness c);

CompactnessReport compactness_status(const OneParamFlow& flow);

struct FixedLineSet {
  std::vector<Line> lines;
  bool continuum = false;  // some eigenspace meets the Klein quadric in a curve
};

/// Lines invariant under the whole flow: eigenvectors of the induced action on
/// the second exterior power that lie on the Klein quadric.
FixedLineSet fixed_lines(const OneParamFlow& flow, double tol = 1e-8);

}  // namespace pg3
