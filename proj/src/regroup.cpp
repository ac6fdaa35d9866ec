#include "chainid/regroup.hpp"

#include <algorithm>

#include "chainid/constraint.hpp"
#include "chainid/errors.hpp"

namespace chainid {

std::vector<int> RegroupingMaps::free_index() const {
  std::vector<int> f = idx_b;
  f.insert(f.end(), idx_d.begin(), idx_d.end());
  std::sort(f.begin(), f.end());
  return f;
}

ColumnBasis column_basis(const Mat& M, double tol_rank) {
  const Eigen::Index k = M.cols();
  const Vec norms = M.colwise().norm().transpose();
  ColumnBasis out;
  Mat Q(M.rows(), 0);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(norms[j] > 0.0)) {
      out.dependent.push_back(static_cast<int>(j));
      continue;
    }
    Vec v = M.col(j) / norms[j];
    for (int pass = 0; pass < 2; ++pass)
      if (Q.cols() > 0) v -= Q * (Q.transpose() * v);
    const double r = v.norm();
    if (r > tol_rank) {
      Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
      Q.col(Q.cols() - 1) = v / r;
      out.basis.push_back(static_cast<int>(j));
    } else {
      out.dependent.push_back(static_cast<int>(j));
    }
  }
  const auto nb = static_cast<Eigen::Index>(out.basis.size());
  const auto nd = static_cast<Eigen::Index>(out.dependent.size());
  out.Kd = Mat::Zero(nb, nd);
  if (nb > 0 && nd > 0) {
    Mat Mb(M.rows(), nb), Md(M.rows(), nd);
    for (Eigen::Index i = 0; i < nb; ++i) Mb.col(i) = M.col(out.basis[static_cast<size_t>(i)]) / norms[out.basis[static_cast<size_t>(i)]];
    for (Eigen::Index i = 0; i < nd; ++i) Md.col(i) = M.col(out.dependent[static_cast<size_t>(i)]);
    out.Kd = Mb.householderQr().solve(Md);
    for (Eigen::Index i = 0; i < nb; ++i) out.Kd.row(i) /= norms[out.basis[static_cast<size_t>(i)]];
  }
  return out;
}

RegroupingMaps analyze_matrix(const Mat& M, const std::vector<int>& free_index, int n_params,
                              const RegroupOptions& opt) {
  if (static_cast<Eigen::Index>(free_index.size()) != M.cols())
    throw DimensionError("analyze: column count does not match free index list");
  const ColumnBasis cb = column_basis(M, opt.tol_rank);
  RegroupingMaps maps;
  maps.n_params = n_params;
  for (int b : cb.basis) maps.idx_b.push_back(free_index[static_cast<size_t>(b)]);
  for (int d : cb.dependent) maps.idx_d.push_back(free_index[static_cast<size_t>(d)]);
  std::vector<bool> is_free(static_cast<size_t>(n_params), false);
  for (int f : free_index) is_free[static_cast<size_t>(f)] = true;
  for (int i = 0; i < n_params; ++i)
    if (!is_free[static_cast<size_t>(i)]) maps.idx_fixed.push_back(i);
  maps.Kd = cb.Kd;
  if (maps.idx_b.empty()) throw DegenerateData("analyze: stacked regressor is identically zero");
  return maps;
}

RegroupingMaps analyze(const RobotModel& model, const std::vector<JointState>& states,
                       const RegroupOptions& opt, const ParameterMask* mask) {
  if (states.empty()) throw DegenerateData("analyze: no sample states");
  const int np = model.n_params();
  std::vector<int> free_index;
  if (mask != nullptr) {
    if (static_cast<int>(mask->free.size()) != np) throw DimensionError("mask length != 14n");
    free_index = mask->free_indices();
    if (free_index.empty()) throw ValidationError("mask fixes every parameter");
  } else {
    for (int i = 0; i < np; ++i) free_index.push_back(i);
  }
  const int na = model.n_a();
  const auto rows = static_cast<Eigen::Index>(states.size()) * na;
  Mat M(rows, static_cast<Eigen::Index>(free_index.size()));
  for (size_t i = 0; i < states.size(); ++i) {
    const Mat GW = constrained_regressor(model, states[i]);
    for (size_t c = 0; c < free_index.size(); ++c)
      M.block(static_cast<Eigen::Index>(i) * na, static_cast<Eigen::Index>(c), na, 1) = GW.col(free_index[c]);
  }
  RegroupingMaps maps = analyze_matrix(M, free_index, np, opt);
  if (opt.check_stability && states.size() >= 2) {
    const Eigen::Index n_even = (static_cast<Eigen::Index>(states.size()) + 1) / 2;
    const Eigen::Index n_odd = static_cast<Eigen::Index>(states.size()) / 2;
    Mat even(n_even * na, M.cols()), odd(n_odd * na, M.cols());
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(states.size()); ++i) {
      if (i % 2 == 0)
        even.middleRows((i / 2) * na, na) = M.middleRows(i * na, na);
      else
        odd.middleRows((i / 2) * na, na) = M.middleRows(i * na, na);
    }
    const auto a = column_basis(even, opt.tol_rank).basis;
    const auto b = column_basis(odd, opt.tol_rank).basis;
    if (a != b)
      throw DegenerateData("analyze: base columns differ between disjoint sample sets (" +
                           std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  return maps;
}

Mat base_regressor(const RegroupingMaps& maps, const Mat& W_full) {
  if (W_full.cols() != maps.n_params) throw DimensionError("base_regressor: W has wrong column count");
  Mat Y(W_full.rows(), maps.n_id());
  for (int i = 0; i < maps.n_id(); ++i) Y.col(i) = W_full.col(maps.idx_b[static_cast<size_t>(i)]);
  return Y;
}

BaseSplit params_to_base(const RegroupingMaps& maps, const Vec& theta) {
  if (theta.size() != maps.n_params) throw DimensionError("params_to_base: wrong theta length");
  BaseSplit s{Vec(maps.n_id()), Vec(maps.n_d())};
  for (int i = 0; i < maps.n_id(); ++i) s.pi[i] = theta[maps.idx_b[static_cast<size_t>(i)]];
  for (int i = 0; i < maps.n_d(); ++i) s.theta_d[i] = theta[maps.idx_d[static_cast<size_t>(i)]];
  if (maps.n_d() > 0) s.pi += maps.Kd * s.theta_d;
  return s;
}

Vec base_to_params(const RegroupingMaps& maps, const Vec& pi, const Vec& theta_d, const Vec& fixed) {
  if (pi.size() != maps.n_id() || theta_d.size() != maps.n_d())
    throw DimensionError("base_to_params: wrong pi or theta_d length");
  Vec theta = fixed.size() == maps.n_params ? fixed : Vec::Zero(maps.n_params);
  Vec b = pi;
  if (maps.n_d() > 0) b -= maps.Kd * theta_d;
  for (int i = 0; i < maps.n_id(); ++i) theta[maps.idx_b[static_cast<size_t>(i)]] = b[i];
  for (int i = 0; i < maps.n_d(); ++i) theta[maps.idx_d[static_cast<size_t>(i)]] = theta_d[i];
  return theta;
}

Mat base_map(const RegroupingMaps& maps) {
  const std::vector<int> fi = maps.free_index();
  std::vector<int> pos(static_cast<size_t>(maps.n_params), -1);
  for (size_t i = 0; i < fi.size(); ++i) pos[static_cast<size_t>(fi[i])] = static_cast<int>(i);
  Mat T = Mat::Zero(maps.n_id(), static_cast<Eigen::Index>(fi.size()));
  for (int i = 0; i < maps.n_id(); ++i) T(i, pos[static_cast<size_t>(maps.idx_b[static_cast<size_t>(i)])]) = 1.0;
  for (int d = 0; d < maps.n_d(); ++d) T.col(pos[static_cast<size_t>(maps.idx_d[static_cast<size_t>(d)])]) = maps.Kd.col(d);
  return T;
}

}  // namespace chainid
