#pragma once

#include <limits>
#include <memory>
#include <string>

#include "oscone/matrix.hpp"

namespace oscone {

enum class Verdict { Member, NonMember, Unknown };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Member: return "member";
    case Verdict::NonMember: return "nonmember";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

struct MaxConeCertificate;  // tensor.hpp
struct MaxConeWitness;      // tensor.hpp
struct DualConeWitness;     // opsys.hpp

struct Diagnostics {
  double best_residual = std::numeric_limits<double>::infinity();
  double best_witness_value = std::numeric_limits<double>::quiet_NaN();
  int k_used = 0;
  int restarts = 0;
  long solver_iterations = 0;
  std::string note;
};

/// Result of every membership query.  `value` is the query's headline scalar:
/// a minimum eigenvalue, a witness pairing, or a certificate residual.
struct ConeVerdict {
  Verdict verdict = Verdict::Unknown;
  double value = 0.0;
  std::shared_ptr<const MaxConeCertificate> certificate;
  std::shared_ptr<const MaxConeWitness> witness;
  std::shared_ptr<const Mat> choi;  // dual-cone Member certificate
  std::shared_ptr<const DualConeWitness> dual_witness;
  Diagnostics diagnostics;

  bool member() const { return verdict == Verdict::Member; }
  bool nonmember() const { return verdict == Verdict::NonMember; }
  bool unknown() const { return verdict == Verdict::Unknown; }
};

}  // namespace oscone
