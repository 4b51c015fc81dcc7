#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "certloc/problem.hpp"

namespace certloc {

// Sparse symmetric matrix stored as upper-triangle entries. Entries are the
// actual matrix values: coeff(p, q) == coeff(q, p).
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  int nnz_upper() const { return static_cast<int>(upper_.size()); }

  // Adds the term v * (x_p . x_q) to the quadratic form <Q, Z>, i.e. v/2 on
  // each of the two symmetric entries when p != q and v on the diagonal.
  void add_product_term(int p, int q, double v);

  double coeff(int p, int q) const;
  double inner(const Eigen::MatrixXd& G) const;
  Eigen::MatrixXd dense() const;
  double frobenius_norm() const;
  void scale(double s);
  void prune(double tol = 0.0);

  // Upper-triangle entries keyed by (row, col) with row <= col.
  const std::map<std::pair<int, int>, double>& upper_entries() const { return upper_; }

 private:
  int dim_ = 0;
  std::map<std::pair<int, int>, double> upper_;
};

// Ordered registry of the lifted state columns, for a fixed instance:
//   [ h1 h2 | per-theta diag pair | per-theta lifted (c1 c2 r) | per-pose (c1 c2 r) ]
// Theta variables enumerate measurement candidates in instance order.
class ColumnIndexMap {
 public:
  explicit ColumnIndexMap(const ProblemInstance& instance);

  int size() const { return size_; }
  int num_thetas() const { return n_theta_; }
  int num_poses() const { return n_poses_; }
  int num_meas() const { return static_cast<int>(meas_thetas_.size()); }

  int hom(int a) const { return a; }
  int theta_diag(int t, int a) const { return 2 + 2 * t + a; }
  // comp: 0, 1 = lifted rotation columns, 2 = lifted position column
  int lifted(int t, int comp) const { return 2 + 2 * n_theta_ + 3 * t + comp; }
  // comp: 0, 1 = rotation columns, 2 = position column of pose i
  int plain(int i, int comp) const { return 2 + 5 * n_theta_ + 3 * i + comp; }

  int theta_timestep(int t) const { return theta_timestep_[t]; }
  int theta_meas(int t) const { return theta_meas_[t]; }
  int theta_landmark(int t) const { return theta_landmark_[t]; }
  const std::vector<int>& thetas_of_meas(int m) const { return meas_thetas_[m]; }
  const std::vector<std::vector<int>>& meas_of_timestep() const { return timestep_meas_; }

  std::string name(int col) const;

  enum class Kind { Hom, ThetaDiag, Lifted, Plain };
  Kind kind(int col) const;

 private:
  int n_poses_ = 0;
  int n_theta_ = 0;
  int size_ = 0;
  std::vector<int> theta_timestep_, theta_meas_, theta_landmark_, theta_k_;
  std::vector<std::vector<int>> meas_thetas_;
  std::vector<std::vector<int>> timestep_meas_;
};

// A lifted quadratic cost fragment over a small named column subset. The
// names use the local conventions "h1", "h2", "c1", "c2", "r", "cn1",
// "cn2", "rn" ("n" marking the successor pose in a relative-pose block).
struct CostBlock {
  std::vector<std::string> col_names;
  SymmetricMatrix mat;

  // <mat, G> for a local Gram matrix over the named columns.
  double eval(const Eigen::MatrixXd& local_gram) const { return mat.inner(local_gram); }
};

// Prior over [h1 h2 c1 c2 r]; reproduces
//   kappa |C - C_prior|_F^2 + 1/sigma2 |r - r_prior|^2, constant included,
// split evenly over the two homogenization diagonal entries.
CostBlock lift_prior(const PriorMeasurement& prior);

// Relative pose over [h1 h2 c1 c2 r cn1 cn2 rn].
CostBlock lift_relative_pose(const RelPoseMeasurement& odo);

// Known-association landmark term over [h1 h2 c1 c2 r] for weight 1/sigma2:
//   1/sigma2 |(l - r) - C y|^2.
CostBlock lift_known_landmark(const Eigen::Vector2d& landmark, const Eigen::Vector2d& y,
                              double sigma2);

// Full lifted cost. Prior and odometry blocks are placed on the plain
// columns; each landmark block is placed once per association candidate,
// gated by that candidate's theta: constants move to (h_a, Theta_a) entries,
// entries with one h index to (Theta_a, xi) entries, and continuous pairs to
// (xi, theta*xi) entries.
SymmetricMatrix assemble_cost(const ProblemInstance& instance, const ColumnIndexMap& map);

// Coordinate-triplet text dump (row-name, col-name, value), upper triangle,
// sorted by (row, col).
std::string dump_coordinate_text(const SymmetricMatrix& Q, const ColumnIndexMap& map);

}  // namespace certloc
