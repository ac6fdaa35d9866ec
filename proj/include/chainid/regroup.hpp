#pragma once

#include <vector>

#include "chainid/dynamics.hpp"
#include "chainid/model.hpp"

namespace chainid {

/// theta <-> (pi, theta_d). idx_b and idx_d index the full parameter vector;
/// entries fixed by a mask appear in neither and are listed in idx_fixed.
struct RegroupingMaps {
  int n_params = 0;  ///< length of theta (14n)
  std::vector<int> idx_b;
  std::vector<int> idx_d;
  std::vector<int> idx_fixed;
  Mat Kd;  ///< n_id x n_d

  int n_id() const { return static_cast<int>(idx_b.size()); }
  int n_d() const { return static_cast<int>(idx_d.size()); }
  /// idx_b and idx_d merged in ascending order.
  std::vector<int> free_index() const;
};

struct RegroupOptions {
  double tol_rank = 1e-8;
  bool check_stability = true;
};

/// Basis and dependency map of the columns of a matrix. Columns are scaled to
/// unit norm and scanned left to right; a column joins the basis when its
/// component orthogonal to the earlier basis columns exceeds tol_rank.
/// Zero columns are dependent with a zero K_d column.
struct ColumnBasis {
  std::vector<int> basis;
  std::vector<int> dependent;
  Mat Kd;
};
ColumnBasis column_basis(const Mat& M, double tol_rank);

/// Stacks G^T W over the states (restricted to the mask's free columns) and
/// regroups it. With check_stability, the basis found on the even and odd
/// halves must agree, else DegenerateData.
RegroupingMaps analyze(const RobotModel& model, const std::vector<JointState>& states,
                       const RegroupOptions& opt = {}, const ParameterMask* mask = nullptr);

/// Same as analyze on an already stacked matrix whose columns are the free
/// entries `free_index` of a parameter vector of length n_params.
RegroupingMaps analyze_matrix(const Mat& M, const std::vector<int>& free_index, int n_params,
                              const RegroupOptions& opt = {});

/// Column selection at idx_b.
Mat base_regressor(const RegroupingMaps& maps, const Mat& W_full);

struct BaseSplit {
  Vec pi;
  Vec theta_d;
};
BaseSplit params_to_base(const RegroupingMaps& maps, const Vec& theta);

/// Entries outside idx_b/idx_d are copied from `fixed` (zero when empty).
Vec base_to_params(const RegroupingMaps& maps, const Vec& pi, const Vec& theta_d, const Vec& fixed = Vec());

/// Dense T with pi = T theta_free, theta_free ordered as free_index().
Mat base_map(const RegroupingMaps& maps);

}  // namespace chainid
