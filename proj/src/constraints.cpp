#include "certloc/constraints.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace certloc {

const char* family_name(ConstraintFamily f) {
  switch (f) {
    case ConstraintFamily::Homogenization: return "homogenization";
    case ConstraintFamily::Orthonormality: return "orthonormality";
    case ConstraintFamily::DcmStructure: return "dcm-structure";
    case ConstraintFamily::DiscreteSum: return "discrete-sum";
    case ConstraintFamily::DiscreteBoolean: return "discrete-boolean";
    case ConstraintFamily::DiscreteProduct: return "discrete-product";
    case ConstraintFamily::DiscretePremulSum: return "discrete-premul-sum";
    case ConstraintFamily::CombinedThetaScaled: return "combined-theta-scaled";
    case ConstraintFamily::CombinedCrossProduct: return "combined-cross-product";
    case ConstraintFamily::Moment1: return "moment-1";
    case ConstraintFamily::Moment2: return "moment-2";
    case ConstraintFamily::Moment3: return "moment-3";
    case ConstraintFamily::ColumnStructure: return "column-structure";
  }
  return "unknown";
}

Eigen::MatrixXd build_feasible_point(const ColumnIndexMap& map, const Trajectory& traj,
                                     const AssociationAssignment& assign, int h_sign) {
  if (static_cast<int>(traj.size()) != map.num_poses())
    throw std::invalid_argument("build_feasible_point: trajectory length mismatch");
  if (static_cast<int>(assign.landmark_for_meas.size()) != map.num_meas())
    throw std::invalid_argument("build_feasible_point: assignment length mismatch");
  const double s = h_sign >= 0 ? 1.0 : -1.0;

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, map.size());
  X(0, map.hom(0)) = s;
  X(1, map.hom(1)) = s;
  for (int i = 0; i < map.num_poses(); ++i) {
    const Eigen::Matrix2d C = traj[i].rot.matrix();
    X.col(map.plain(i, 0)) = s * C.col(0);
    X.col(map.plain(i, 1)) = s * C.col(1);
    X.col(map.plain(i, 2)) = s * traj[i].pos;
  }
  for (int t = 0; t < map.num_thetas(); ++t) {
    const bool on =
        assign.landmark_for_meas[map.theta_meas(t)] == map.theta_landmark(t);
    if (!on) continue;
    const int i = map.theta_timestep(t);
    X(0, map.theta_diag(t, 0)) = s;
    X(1, map.theta_diag(t, 1)) = s;
    X.col(map.lifted(t, 0)) = X.col(map.plain(i, 0));
    X.col(map.lifted(t, 1)) = X.col(map.plain(i, 1));
    X.col(map.lifted(t, 2)) = X.col(map.plain(i, 2));
  }
  return X;
}

namespace {

// Base continuous constraints over the plain columns, reused directly and
// in theta-scaled form.
SymmetricMatrix h_orth(const ColumnIndexMap& m) {
  SymmetricMatrix A(m.size());
  A.add_product_term(m.hom(0), m.hom(1), 1.0);
  return A;
}
SymmetricMatrix h_eqdiag(const ColumnIndexMap& m) {
  SymmetricMatrix A(m.size());
  A.add_product_term(m.hom(0), m.hom(0), 1.0);
  A.add_product_term(m.hom(1), m.hom(1), -1.0);
  return A;
}
SymmetricMatrix pose_orth(const ColumnIndexMap& m, int i) {
  SymmetricMatrix A(m.size());
  A.add_product_term(m.plain(i, 0), m.plain(i, 1), 1.0);
  return A;
}
SymmetricMatrix pose_unit(const ColumnIndexMap& m, int i, int a) {
  SymmetricMatrix A(m.size());
  A.add_product_term(m.plain(i, a), m.plain(i, a), 1.0);
  A.add_product_term(m.hom(0), m.hom(0), -0.5);
  A.add_product_term(m.hom(1), m.hom(1), -0.5);
  return A;
}
SymmetricMatrix pose_struct(const ColumnIndexMap& m, int i, int variant) {
  SymmetricMatrix A(m.size());
  if (variant == 0) {
    A.add_product_term(m.hom(0), m.plain(i, 0), 1.0);
    A.add_product_term(m.hom(1), m.plain(i, 1), -1.0);
  } else {
    A.add_product_term(m.hom(1), m.plain(i, 0), 1.0);
    A.add_product_term(m.hom(0), m.plain(i, 1), 1.0);
  }
  return A;
}

class CatalogBuilder {
 public:
  CatalogBuilder(const ColumnIndexMap& map, const ConstraintOptions& opts)
      : map_(map), opts_(opts) {}

  std::vector<ConstraintMatrix> build() {
    homogenization();
    orthonormality();
    dcm_structure();
    discrete_sum();
    discrete_boolean();
    discrete_product();
    discrete_premul_sum();
    combined_theta_scaled();
    combined_cross_product();
    moment_1();
    moment_2();
    moment_3();
    column_structure();
    return std::move(out_);
  }

 private:
  SymmetricMatrix fresh() const { return SymmetricMatrix(map_.size()); }

  void push(ConstraintFamily fam, SymmetricMatrix A, double rhs = 0.0) {
    A.prune(1e-14);
    if (A.nnz_upper() == 0) return;
    const std::string key = canonical_key(A, rhs);
    if (!seen_.insert(key).second) return;
    out_.push_back({std::move(A), rhs, fam});
  }

  static std::string canonical_key(const SymmetricMatrix& A, double rhs) {
    const double lead = A.upper_entries().begin()->second;
    std::ostringstream os;
    for (const auto& [pq, v] : A.upper_entries()) {
      const long long q = std::llround(v / lead * 1e9);
      if (q == 0) continue;
      os << pq.first << "," << pq.second << ":" << q << ";";
    }
    os << "|" << std::llround(rhs / lead * 1e9);
    return os.str();
  }

  void homogenization() {
    SymmetricMatrix A = fresh();
    A.add_product_term(map_.hom(0), map_.hom(0), 0.5);
    A.add_product_term(map_.hom(1), map_.hom(1), 0.5);
    push(ConstraintFamily::Homogenization, std::move(A), 1.0);
  }

  void orthonormality() {
    if (opts_.include_h_block) push(ConstraintFamily::Orthonormality, h_orth(map_));
    for (int i = 0; i < map_.num_poses(); ++i) {
      push(ConstraintFamily::Orthonormality, pose_orth(map_, i));
      push(ConstraintFamily::Orthonormality, pose_unit(map_, i, 0));
      push(ConstraintFamily::Orthonormality, pose_unit(map_, i, 1));
    }
  }

  void dcm_structure() {
    if (opts_.include_h_block) push(ConstraintFamily::DcmStructure, h_eqdiag(map_));
    for (int i = 0; i < map_.num_poses(); ++i) {
      push(ConstraintFamily::DcmStructure, pose_struct(map_, i, 0));
      push(ConstraintFamily::DcmStructure, pose_struct(map_, i, 1));
    }
  }

  void discrete_sum() {
    for (int m = 0; m < map_.num_meas(); ++m) {
      SymmetricMatrix A = fresh();
      for (int t : map_.thetas_of_meas(m)) {
        A.add_product_term(map_.hom(0), map_.theta_diag(t, 0), 0.5);
        A.add_product_term(map_.hom(1), map_.theta_diag(t, 1), 0.5);
      }
      A.add_product_term(map_.hom(0), map_.hom(0), -0.5);
      A.add_product_term(map_.hom(1), map_.hom(1), -0.5);
      push(ConstraintFamily::DiscreteSum, std::move(A));
    }
  }

  void discrete_boolean() {
    for (int t = 0; t < map_.num_thetas(); ++t) {
      SymmetricMatrix A = fresh();
      A.add_product_term(map_.theta_diag(t, 0), map_.theta_diag(t, 0), 0.5);
      A.add_product_term(map_.theta_diag(t, 1), map_.theta_diag(t, 1), 0.5);
      A.add_product_term(map_.hom(0), map_.theta_diag(t, 0), -0.5);
      A.add_product_term(map_.hom(1), map_.theta_diag(t, 1), -0.5);
      push(ConstraintFamily::DiscreteBoolean, std::move(A));
    }
  }

  void discrete_product() {
    for (int m = 0; m < map_.num_meas(); ++m) {
      const auto& ts = map_.thetas_of_meas(m);
      for (size_t a = 0; a < ts.size(); ++a)
        for (size_t b = a + 1; b < ts.size(); ++b) {
          SymmetricMatrix A = fresh();
          A.add_product_term(map_.theta_diag(ts[a], 0), map_.theta_diag(ts[b], 0), 0.5);
          A.add_product_term(map_.theta_diag(ts[a], 1), map_.theta_diag(ts[b], 1), 0.5);
          push(ConstraintFamily::DiscreteProduct, std::move(A));
        }
    }
  }

  // theta_u * (sum_j theta_{m1,j} - 1) = 0 for measurements m1 != m2 sharing
  // a timestep, u ranging over m2's candidates.
  void discrete_premul_sum() {
    for (const auto& meas_here : map_.meas_of_timestep()) {
      if (meas_here.size() < 2) continue;
      for (int m2 : meas_here)
        for (int m1 : meas_here) {
          if (m1 == m2) continue;
          for (int u : map_.thetas_of_meas(m2)) {
            SymmetricMatrix A = fresh();
            for (int t : map_.thetas_of_meas(m1)) {
              A.add_product_term(map_.theta_diag(u, 0), map_.theta_diag(t, 0), 0.5);
              A.add_product_term(map_.theta_diag(u, 1), map_.theta_diag(t, 1), 0.5);
            }
            A.add_product_term(map_.hom(0), map_.theta_diag(u, 0), -0.5);
            A.add_product_term(map_.hom(1), map_.theta_diag(u, 1), -0.5);
            push(ConstraintFamily::DiscretePremulSum, std::move(A));
          }
        }
    }
  }

  // Substitute theta-scaled entries for a base continuous constraint:
  // (h,h) pairs land on (h, Theta) entries, (h, xi) on (h, theta*xi), and
  // (xi, xi') on lifted-lifted entries. Base must touch only the H block
  // and the columns of the theta's own timestep.
  SymmetricMatrix theta_scale(const SymmetricMatrix& base, int t) const {
    SymmetricMatrix A = fresh();
    const int plain_base = map_.plain(0, 0);
    const auto lift_col = [&](int col) {
      return map_.lifted(t, (col - plain_base) % 3);
    };
    for (const auto& [pq, v] : base.upper_entries()) {
      const auto [p, q] = pq;
      const double c = (p == q) ? v : 2.0 * v;
      if (q < 2) {
        A.add_product_term(p, map_.theta_diag(t, q), c);
      } else if (p < 2) {
        A.add_product_term(p, lift_col(q), c);
      } else {
        A.add_product_term(lift_col(p), lift_col(q), c);
      }
    }
    return A;
  }

  void combined_theta_scaled() {
    for (int t = 0; t < map_.num_thetas(); ++t) {
      const int i = map_.theta_timestep(t);
      push(ConstraintFamily::CombinedThetaScaled, theta_scale(h_orth(map_), t));
      push(ConstraintFamily::CombinedThetaScaled, theta_scale(h_eqdiag(map_), t));
      push(ConstraintFamily::CombinedThetaScaled, theta_scale(pose_orth(map_, i), t));
      push(ConstraintFamily::CombinedThetaScaled, theta_scale(pose_unit(map_, i, 0), t));
      push(ConstraintFamily::CombinedThetaScaled, theta_scale(pose_unit(map_, i, 1), t));
      push(ConstraintFamily::CombinedThetaScaled, theta_scale(pose_struct(map_, i, 0), t));
      push(ConstraintFamily::CombinedThetaScaled, theta_scale(pose_struct(map_, i, 1), t));
    }
  }

  // Extended column e in 0..4 = (h1, h2, c1, c2, r); t < 0 selects the
  // plain version, otherwise the theta-gated one.
  int ext_col(int t, int i, int e) const {
    if (e < 2) return t < 0 ? map_.hom(e) : map_.theta_diag(t, e);
    return t < 0 ? map_.plain(i, e - 2) : map_.lifted(t, e - 2);
  }

  struct DiscreteFactor {
    // Directed entries (p, q, w) over theta indices, -1 denoting the
    // homogeneous slot.
    std::vector<std::tuple<int, int, double>> entries;
  };

  void combined_cross_product() {
    for (int m = 0; m < map_.num_meas(); ++m) {
      const auto& ts = map_.thetas_of_meas(m);
      const int i = map_.theta_timestep(ts.front());
      std::vector<DiscreteFactor> factors;
      for (int t : ts) factors.push_back({{{-1, t, -0.5}, {t, -1, -0.5}, {t, t, 1.0}}});
      for (size_t a = 0; a < ts.size(); ++a)
        for (size_t b = a + 1; b < ts.size(); ++b)
          factors.push_back({{{ts[a], ts[b], 0.5}, {ts[b], ts[a], 0.5}}});
      if (opts_.include_sum_cross_products) {
        DiscreteFactor sum;
        sum.entries.push_back({-1, -1, -1.0});
        for (int t : ts) {
          sum.entries.push_back({-1, t, 0.5});
          sum.entries.push_back({t, -1, 0.5});
        }
        factors.push_back(std::move(sum));
      }
      for (const auto& f : factors)
        for (int a = 0; a < 5; ++a)
          for (int b = 0; b < 5; ++b) {
            SymmetricMatrix A = fresh();
            for (const auto& [p, q, w] : f.entries)
              A.add_product_term(ext_col(p, i, a), ext_col(q, i, b), w);
            push(ConstraintFamily::CombinedCrossProduct, std::move(A));
          }
    }
  }

  void moment_1() {
    for (int t = 0; t < map_.num_thetas(); ++t) {
      const int i = map_.theta_timestep(t);
      for (int a = 0; a < 2; ++a)
        for (int k = 0; k < 3; ++k) {
          SymmetricMatrix A = fresh();
          A.add_product_term(map_.hom(a), map_.lifted(t, k), 1.0);
          A.add_product_term(map_.theta_diag(t, a), map_.plain(i, k), -1.0);
          push(ConstraintFamily::Moment1, std::move(A));
        }
    }
  }

  void moment_2() {
    for (int t = 0; t < map_.num_thetas(); ++t) {
      const int i = map_.theta_timestep(t);
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          if (k == l) continue;
          SymmetricMatrix A = fresh();
          A.add_product_term(map_.plain(i, k), map_.lifted(t, l), 1.0);
          A.add_product_term(map_.lifted(t, k), map_.plain(i, l), -1.0);
          push(ConstraintFamily::Moment2, std::move(A));
        }
      SymmetricMatrix A = fresh();
      A.add_product_term(map_.hom(0), map_.theta_diag(t, 1), 1.0);
      A.add_product_term(map_.theta_diag(t, 0), map_.hom(1), -1.0);
      push(ConstraintFamily::Moment2, std::move(A));
    }
  }

  void moment_3() {
    for (int m = 0; m < map_.num_meas(); ++m) {
      const auto& ts = map_.thetas_of_meas(m);
      const int i = map_.theta_timestep(ts.front());
      for (size_t x = 0; x < ts.size(); ++x)
        for (size_t y = x + 1; y < ts.size(); ++y)
          for (int a = 0; a < 5; ++a)
            for (int b = 0; b < 5; ++b) {
              SymmetricMatrix A = fresh();
              A.add_product_term(ext_col(ts[x], i, a), ext_col(ts[y], i, b), 1.0);
              A.add_product_term(ext_col(ts[y], i, a), ext_col(ts[x], i, b), -1.0);
              push(ConstraintFamily::Moment3, std::move(A));
            }
    }
  }

  void column_structure() {
    const int n = map_.num_thetas();
    for (int t = 0; t < n; ++t) {
      SymmetricMatrix A = fresh();
      A.add_product_term(map_.theta_diag(t, 0), map_.theta_diag(t, 1), 1.0);
      push(ConstraintFamily::ColumnStructure, std::move(A));
    }
    for (int t = 0; t < n; ++t)
      for (int u = t + 1; u < n; ++u)
        for (int d = 0; d < 2; ++d) {
          SymmetricMatrix A = fresh();
          A.add_product_term(map_.theta_diag(t, d), map_.theta_diag(u, 1 - d), 1.0);
          push(ConstraintFamily::ColumnStructure, std::move(A));
        }
  }

  const ColumnIndexMap& map_;
  ConstraintOptions opts_;
  std::vector<ConstraintMatrix> out_;
  std::unordered_set<std::string> seen_;
};

}  // namespace

std::vector<ConstraintMatrix> build_constraints(const ColumnIndexMap& map,
                                                const ConstraintOptions& options) {
  return CatalogBuilder(map, options).build();
}

NullspaceReport verify_nullspace(const std::vector<ConstraintMatrix>& constraints,
                                 const ColumnIndexMap& map, int n_samples, std::uint64_t seed) {
  NullspaceReport report;
  report.samples = n_samples;
  report.constraint_count = static_cast<int>(constraints.size());
  report.families.reserve(kNumConstraintFamilies);
  for (int f = 0; f < kNumConstraintFamilies; ++f)
    report.families.push_back({static_cast<ConstraintFamily>(f), 0, 0.0});
  for (const auto& c : constraints) report.families[static_cast<int>(c.family)].count++;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::normal_distribution<double> gauss(0.0, 5.0);

  for (int s = 0; s < n_samples; ++s) {
    Trajectory traj;
    for (int i = 0; i < map.num_poses(); ++i)
      traj.push_back({Rotation2::from_angle(angle(rng)), {gauss(rng), gauss(rng)}});
    AssociationAssignment assign;
    for (int m = 0; m < map.num_meas(); ++m) {
      const auto& ts = map.thetas_of_meas(m);
      std::uniform_int_distribution<int> pick(0, static_cast<int>(ts.size()) - 1);
      assign.landmark_for_meas.push_back(map.theta_landmark(ts[pick(rng)]));
    }
    const int h_sign = (rng() & 1) ? 1 : -1;
    const Eigen::MatrixXd X = build_feasible_point(map, traj, assign, h_sign);
    const Eigen::MatrixXd Z = X.transpose() * X;
    for (const auto& c : constraints) {
      const double viol = std::abs(c.A.inner(Z) - c.rhs);
      auto& fam = report.families[static_cast<int>(c.family)];
      fam.max_violation = std::max(fam.max_violation, viol);
      report.max_violation = std::max(report.max_violation, viol);
    }
  }
  return report;
}

std::string dump_constraints_text(const std::vector<ConstraintMatrix>& constraints,
                                  const ColumnIndexMap& map) {
  std::ostringstream os;
  os.precision(17);
  for (size_t k = 0; k < constraints.size(); ++k) {
    const auto& c = constraints[k];
    os << "# " << k << " " << family_name(c.family) << " rhs " << c.rhs << "\n";
    os << dump_coordinate_text(c.A, map);
  }
  return os.str();
}

}  // namespace certloc
