#include "certloc/lifting.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace certloc {

void SymmetricMatrix::add_product_term(int p, int q, double v) {
  if (p < 0 || q < 0 || p >= dim_ || q >= dim_)
    throw std::out_of_range("SymmetricMatrix: index out of range");
  if (p == q) {
    upper_[{p, p}] += v;
  } else {
    if (p > q) std::swap(p, q);
    upper_[{p, q}] += 0.5 * v;
  }
}

double SymmetricMatrix::coeff(int p, int q) const {
  if (p > q) std::swap(p, q);
  auto it = upper_.find({p, q});
  return it == upper_.end() ? 0.0 : it->second;
}

double SymmetricMatrix::inner(const Eigen::MatrixXd& G) const {
  double acc = 0.0;
  for (const auto& [pq, v] : upper_) {
    const auto [p, q] = pq;
    acc += (p == q) ? v * G(p, p) : 2.0 * v * G(p, q);
  }
  return acc;
}

Eigen::MatrixXd SymmetricMatrix::dense() const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim_, dim_);
  for (const auto& [pq, v] : upper_) {
    const auto [p, q] = pq;
    M(p, q) = v;
    M(q, p) = v;
  }
  return M;
}

double SymmetricMatrix::frobenius_norm() const {
  double acc = 0.0;
  for (const auto& [pq, v] : upper_) {
    const auto [p, q] = pq;
    acc += (p == q) ? v * v : 2.0 * v * v;
  }
  return std::sqrt(acc);
}

void SymmetricMatrix::scale(double s) {
  for (auto& [pq, v] : upper_) v *= s;
}

void SymmetricMatrix::prune(double tol) {
  for (auto it = upper_.begin(); it != upper_.end();) {
    if (std::abs(it->second) <= tol)
      it = upper_.erase(it);
    else
      ++it;
  }
}

ColumnIndexMap::ColumnIndexMap(const ProblemInstance& instance) {
  n_poses_ = instance.n_poses;
  timestep_meas_.resize(n_poses_);
  int t = 0;
  for (int m = 0; m < static_cast<int>(instance.measurements.size()); ++m) {
    const auto& meas = instance.measurements[m];
    timestep_meas_[meas.timestep].push_back(m);
    std::vector<int> own;
    for (int j : meas.candidates) {
      theta_timestep_.push_back(meas.timestep);
      theta_meas_.push_back(m);
      theta_landmark_.push_back(j);
      theta_k_.push_back(meas.k);
      own.push_back(t++);
    }
    meas_thetas_.push_back(std::move(own));
  }
  n_theta_ = t;
  size_ = 2 + 5 * n_theta_ + 3 * n_poses_;
}

ColumnIndexMap::Kind ColumnIndexMap::kind(int col) const {
  if (col < 2) return Kind::Hom;
  if (col < 2 + 2 * n_theta_) return Kind::ThetaDiag;
  if (col < 2 + 5 * n_theta_) return Kind::Lifted;
  return Kind::Plain;
}

std::string ColumnIndexMap::name(int col) const {
  std::ostringstream os;
  switch (kind(col)) {
    case Kind::Hom:
      os << "h" << (col + 1);
      break;
    case Kind::ThetaDiag: {
      const int t = (col - 2) / 2, a = (col - 2) % 2;
      os << "th[" << theta_timestep_[t] + 1 << "," << theta_k_[t] << ","
         << theta_landmark_[t] + 1 << "]." << (a + 1);
      break;
    }
    case Kind::Lifted: {
      const int t = (col - 2 - 2 * n_theta_) / 3, comp = (col - 2 - 2 * n_theta_) % 3;
      const int i = theta_timestep_[t] + 1;
      os << "th[" << i << "," << theta_k_[t] << "," << theta_landmark_[t] + 1 << "]*";
      if (comp < 2)
        os << "c[" << i << "]" << (comp + 1);
      else
        os << "r[" << i << "]";
      break;
    }
    case Kind::Plain: {
      const int i = (col - 2 - 5 * n_theta_) / 3, comp = (col - 2 - 5 * n_theta_) % 3;
      if (comp < 2)
        os << "c[" << i + 1 << "]" << (comp + 1);
      else
        os << "r[" << i + 1 << "]";
      break;
    }
  }
  return os.str();
}

namespace {

// Local column layout of single-pose blocks: h1 h2 c1 c2 r.
constexpr int kH1 = 0, kH2 = 1, kC1 = 2, kC2 = 3, kR = 4;

void add_split_constant(SymmetricMatrix& m, double value) {
  m.add_product_term(kH1, kH1, 0.5 * value);
  m.add_product_term(kH2, kH2, 0.5 * value);
}

}  // namespace

CostBlock lift_prior(const PriorMeasurement& prior) {
  CostBlock blk;
  blk.col_names = {"h1", "h2", "c1", "c2", "r"};
  blk.mat = SymmetricMatrix(5);
  const double w = 1.0 / prior.sigma2;
  add_split_constant(blk.mat, 4.0 * prior.kappa + w * prior.pos.squaredNorm());
  const Eigen::Matrix2d Cbar = prior.rot.matrix();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      blk.mat.add_product_term(kH1 + a, kC1 + b, -2.0 * prior.kappa * Cbar(a, b));
  blk.mat.add_product_term(kR, kR, w);
  for (int a = 0; a < 2; ++a) blk.mat.add_product_term(kH1 + a, kR, -2.0 * w * prior.pos(a));
  return blk;
}

CostBlock lift_relative_pose(const RelPoseMeasurement& odo) {
  CostBlock blk;
  blk.col_names = {"h1", "h2", "c1", "c2", "r", "cn1", "cn2", "rn"};
  blk.mat = SymmetricMatrix(8);
  constexpr int kCn1 = 5, kRn = 7;
  const double w = 1.0 / odo.sigma2;
  add_split_constant(blk.mat, 4.0 * odo.kappa + w * odo.delta_pos.squaredNorm());
  const Eigen::Matrix2d dC = odo.delta_rot.matrix();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      blk.mat.add_product_term(kC1 + a, kCn1 + b, -2.0 * odo.kappa * dC(a, b));
  blk.mat.add_product_term(kR, kR, w);
  blk.mat.add_product_term(kRn, kRn, w);
  blk.mat.add_product_term(kR, kRn, -2.0 * w);
  for (int a = 0; a < 2; ++a) {
    blk.mat.add_product_term(kC1 + a, kR, 2.0 * w * odo.delta_pos(a));
    blk.mat.add_product_term(kC1 + a, kRn, -2.0 * w * odo.delta_pos(a));
  }
  return blk;
}

CostBlock lift_known_landmark(const Eigen::Vector2d& landmark, const Eigen::Vector2d& y,
                              double sigma2) {
  CostBlock blk;
  blk.col_names = {"h1", "h2", "c1", "c2", "r"};
  blk.mat = SymmetricMatrix(5);
  const double w = 1.0 / sigma2;
  add_split_constant(blk.mat, w * (landmark.squaredNorm() + y.squaredNorm()));
  blk.mat.add_product_term(kR, kR, w);
  for (int a = 0; a < 2; ++a) {
    blk.mat.add_product_term(kC1 + a, kR, 2.0 * w * y(a));
    blk.mat.add_product_term(kH1 + a, kR, -2.0 * w * landmark(a));
    for (int b = 0; b < 2; ++b)
      blk.mat.add_product_term(kH1 + a, kC1 + b, -2.0 * w * landmark(a) * y(b));
  }
  return blk;
}

SymmetricMatrix assemble_cost(const ProblemInstance& instance, const ColumnIndexMap& map) {
  SymmetricMatrix Q(map.size());

  const auto place_plain = [&](const SymmetricMatrix& local, const std::vector<int>& cols) {
    for (const auto& [pq, v] : local.upper_entries()) {
      const auto [p, q] = pq;
      Q.add_product_term(cols[p], cols[q], (p == q) ? v : 2.0 * v);
    }
  };

  {
    const CostBlock prior = lift_prior(instance.prior);
    place_plain(prior.mat, {map.hom(0), map.hom(1), map.plain(0, 0), map.plain(0, 1),
                            map.plain(0, 2)});
  }
  for (const auto& o : instance.odometry) {
    const CostBlock odo = lift_relative_pose(o);
    place_plain(odo.mat,
                {map.hom(0), map.hom(1), map.plain(o.from_index, 0), map.plain(o.from_index, 1),
                 map.plain(o.from_index, 2), map.plain(o.to_index, 0), map.plain(o.to_index, 1),
                 map.plain(o.to_index, 2)});
  }

  // Theta-gated landmark blocks, one per association candidate. Local
  // column a < 2 is an h column, otherwise the continuous xi columns
  // (c1, c2, r) of the measurement's pose.
  for (int m = 0; m < map.num_meas(); ++m) {
    const auto& meas = instance.measurements[m];
    for (int t : map.thetas_of_meas(m)) {
      const int j = map.theta_landmark(t);
      const CostBlock lm =
          lift_known_landmark(instance.landmarks.positions[j], meas.y, meas.sigma2);
      const int i = meas.timestep;
      for (const auto& [pq, v] : lm.mat.upper_entries()) {
        const auto [p, q] = pq;
        if (p < 2 && q < 2) {
          if (p != q) throw std::logic_error("unexpected off-diagonal h-h cost entry");
          Q.add_product_term(map.hom(p), map.theta_diag(t, p), v);
        } else if (p < 2) {
          Q.add_product_term(map.theta_diag(t, p), map.plain(i, q - 2), 2.0 * v);
        } else {
          Q.add_product_term(map.plain(i, p - 2), map.lifted(t, q - 2), (p == q) ? v : 2.0 * v);
        }
      }
    }
  }
  Q.prune();
  return Q;
}

std::string dump_coordinate_text(const SymmetricMatrix& Q, const ColumnIndexMap& map) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [pq, v] : Q.upper_entries()) {
    const auto [p, q] = pq;
    os << map.name(p) << " " << map.name(q) << " " << v << "\n";
  }
  return os.str();
}

}  // namespace certloc
