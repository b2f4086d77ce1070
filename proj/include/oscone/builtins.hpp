#pragma once

#include <optional>
#include <string>

#include "oscone/opsys.hpp"

// Named systems shipped with the toolkit: Mn:d (full algebra), Cn:d
// (diagonal algebra) for d <= 4, and pauli-xz = span{I, sigma_x, sigma_z}.

namespace oscone {

namespace detail {

// traceless diagonal patterns diag(1,..,1,-r,0,..)/r, operator norm 1
inline std::vector<Mat> diag_patterns(int d) {
  std::vector<Mat> out;
  for (int r = 1; r < d; ++r) {
    Mat m = Mat::Zero(d, d);
    for (int i = 0; i < r; ++i) m(i, i) = 1.0 / r;
    m(r, r) = -1.0;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace detail

inline SystemPtr full_matrix_system(int d) {
  if (d < 1) throw DimensionMismatch("full_matrix_system: d must be >= 1");
  std::vector<Mat> basis{identity(d)};
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      basis.push_back(matrix_unit(d, i, j) + matrix_unit(d, j, i));
      basis.push_back(cxd(0, -1) * matrix_unit(d, i, j) + cxd(0, 1) * matrix_unit(d, j, i));
    }
  for (auto& m : detail::diag_patterns(d)) basis.push_back(std::move(m));
  return OperatorSystem::create(std::move(basis), "Mn:" + std::to_string(d));
}

inline SystemPtr diagonal_system(int d) {
  if (d < 1) throw DimensionMismatch("diagonal_system: d must be >= 1");
  std::vector<Mat> basis{identity(d)};
  for (auto& m : detail::diag_patterns(d)) basis.push_back(std::move(m));
  return OperatorSystem::create(std::move(basis), "Cn:" + std::to_string(d));
}

inline SystemPtr pauli_xz_system() {
  Mat sx(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;
  return OperatorSystem::create({identity(2), sx, sz}, "pauli-xz");
}

/// Resolve a built-in name ("Mn:2", "Cn:3", "pauli-xz"); nullopt otherwise.
inline std::optional<SystemPtr> builtin_system(const std::string& name) {
  if (name == "pauli-xz") return pauli_xz_system();
  auto parse_d = [&](const std::string& prefix) -> int {
    if (name.rfind(prefix, 0) != 0) return 0;
    int d = 0;
    for (std::size_t i = prefix.size(); i < name.size(); ++i) {
      if (name[i] < '0' || name[i] > '9') return 0;
      d = d * 10 + (name[i] - '0');
    }
    return (d >= 1 && d <= 4) ? d : 0;
  };
  if (int d = parse_d("Mn:")) return full_matrix_system(d);
  if (int d = parse_d("Cn:")) return diagonal_system(d);
  return std::nullopt;
}

}  // namespace oscone
