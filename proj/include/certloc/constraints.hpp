#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "certloc/lifting.hpp"

namespace certloc {

enum class ConstraintFamily {
  Homogenization,
  Orthonormality,
  DcmStructure,
  DiscreteSum,
  DiscreteBoolean,
  DiscreteProduct,
  DiscretePremulSum,
  CombinedThetaScaled,
  CombinedCrossProduct,
  Moment1,
  Moment2,
  Moment3,
  ColumnStructure,
};

const char* family_name(ConstraintFamily f);
constexpr int kNumConstraintFamilies = 13;

struct ConstraintMatrix {
  SymmetricMatrix A;
  double rhs = 0.0;
  ConstraintFamily family = ConstraintFamily::Homogenization;
};

struct ConstraintOptions {
  // Pin the homogenization block (Z[h1,h2] = 0, equal diagonal) in addition
  // to the per-pose constraints. Required for direct H-row extraction.
  bool include_h_block = true;
  // Cross products of the per-measurement sum factor with continuous column
  // pairs. Off by default: boolean and product factors suffice for
  // tightness and the sum versions are linearly dependent in practice.
  bool include_sum_cross_products = false;
};

// Rank-2 feasible lift X (2 x n_x) for a trajectory, an association
// assignment (one selected candidate per measurement) and a sign h_sign
// in {+1, -1} on the homogenization columns. X^T X is h_sign-invariant.
Eigen::MatrixXd build_feasible_point(const ColumnIndexMap& map, const Trajectory& traj,
                                     const AssociationAssignment& assign, int h_sign = 1);

// Full constraint catalog for the lifted problem, deduplicated up to sign
// and scale, homogenization first (rhs 1, every other rhs 0).
std::vector<ConstraintMatrix> build_constraints(const ColumnIndexMap& map,
                                                const ConstraintOptions& options = {});

struct FamilyReport {
  ConstraintFamily family;
  int count = 0;
  double max_violation = 0.0;
};

struct NullspaceReport {
  std::vector<FamilyReport> families;
  double max_violation = 0.0;
  int samples = 0;
  int constraint_count = 0;

  bool pass(double tol) const { return max_violation <= tol; }
};

// Samples random feasible points (trajectory, assignment, h_sign) and
// reports the worst |<A, X^T X> - rhs| per family.
NullspaceReport verify_nullspace(const std::vector<ConstraintMatrix>& constraints,
                                 const ColumnIndexMap& map, int n_samples, std::uint64_t seed);

// Per-constraint coordinate-triplet dump grouped under one header line per
// constraint ("# <index> <family> rhs <value>").
std::string dump_constraints_text(const std::vector<ConstraintMatrix>& constraints,
                                  const ColumnIndexMap& map);

}  // namespace certloc
