#pragma once

#include <optional>
#include <vector>

#include "ppds/linop.hpp"

namespace ppds {

/// M x N block arrangement of linear operators: row j collects the maps
/// feeding dual variable z_j, column i the maps leaving primal variable x_i.
/// Absent entries are zero operators.
class OpGrid {
 public:
  OpGrid(std::vector<VarShape> primal_shapes, std::vector<VarShape> dual_shapes)
      : primal_(std::move(primal_shapes)), dual_(std::move(dual_shapes)) {
    if (primal_.empty() || dual_.empty())
      throw StructuralError("OpGrid: need at least one primal and one dual variable");
    entries_.resize(primal_.size() * dual_.size());
  }

  Index num_primal() const { return static_cast<Index>(primal_.size()); }
  Index num_dual() const { return static_cast<Index>(dual_.size()); }
  const VarShape& primal_shape(Index i) const { return primal_.at(static_cast<std::size_t>(i)); }
  const VarShape& dual_shape(Index j) const { return dual_.at(static_cast<std::size_t>(j)); }

  void set(Index j, Index i, LinOp op) {
    if (op.in_shape() != primal_shape(i))
      throw StructuralError("OpGrid::set: operator input " + op.in_shape().to_string() +
                            " does not match primal variable " + primal_shape(i).to_string());
    if (op.out_shape() != dual_shape(j))
      throw StructuralError("OpGrid::set: operator output " + op.out_shape().to_string() +
                            " does not match dual variable " + dual_shape(j).to_string());
    entries_[slot(j, i)] = std::move(op);
  }

  bool present(Index j, Index i) const { return entries_[slot(j, i)].has_value(); }

  const LinOp& at(Index j, Index i) const {
    const auto& e = entries_[slot(j, i)];
    if (!e) throw StructuralError("OpGrid::at: absent entry");
    return *e;
  }

  /// Each dual variable must be produced by at least one operator.
  void validate() const {
    for (Index j = 0; j < num_dual(); ++j) {
      bool any = false;
      for (Index i = 0; i < num_primal(); ++i) any = any || present(j, i);
      if (!any)
        throw StructuralError("OpGrid: dual variable " + std::to_string(j) +
                              " has no operator");
    }
  }

  Index total_primal_len() const {
    Index n = 0;
    for (const VarShape& s : primal_) n += s.len();
    return n;
  }

  Index total_dual_len() const {
    Index m = 0;
    for (const VarShape& s : dual_) m += s.len();
    return m;
  }

  /// z_j = sum_i L_ji(x_i) over present entries.
  std::vector<Eigen::VectorXd> forward(const std::vector<Eigen::VectorXd>& x) const {
    check_primal(x);
    std::vector<Eigen::VectorXd> z(static_cast<std::size_t>(num_dual()));
    for (Index j = 0; j < num_dual(); ++j) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(dual_shape(j).len());
      for (Index i = 0; i < num_primal(); ++i)
        if (present(j, i)) acc += at(j, i).forward(x[static_cast<std::size_t>(i)]);
      z[static_cast<std::size_t>(j)] = std::move(acc);
    }
    return z;
  }

  /// x_i = sum_j L*_ji(z_j) over present entries.
  std::vector<Eigen::VectorXd> adjoint(const std::vector<Eigen::VectorXd>& z) const {
    check_dual(z);
    std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(num_primal()));
    for (Index i = 0; i < num_primal(); ++i) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(primal_shape(i).len());
      for (Index j = 0; j < num_dual(); ++j)
        if (present(j, i)) acc += at(j, i).adjoint(z[static_cast<std::size_t>(j)]);
      x[static_cast<std::size_t>(i)] = std::move(acc);
    }
    return x;
  }

  Eigen::VectorXd stack_primal(const std::vector<Eigen::VectorXd>& x) const {
    check_primal(x);
    Eigen::VectorXd out(total_primal_len());
    Index off = 0;
    for (Index i = 0; i < num_primal(); ++i) {
      out.segment(off, primal_shape(i).len()) = x[static_cast<std::size_t>(i)];
      off += primal_shape(i).len();
    }
    return out;
  }

  std::vector<Eigen::VectorXd> split_primal(const Eigen::VectorXd& v) const {
    if (v.size() != total_primal_len())
      throw StructuralError("OpGrid::split_primal: length mismatch");
    std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(num_primal()));
    Index off = 0;
    for (Index i = 0; i < num_primal(); ++i) {
      x[static_cast<std::size_t>(i)] = v.segment(off, primal_shape(i).len());
      off += primal_shape(i).len();
    }
    return x;
  }

  Eigen::VectorXd stack_dual(const std::vector<Eigen::VectorXd>& z) const {
    check_dual(z);
    Eigen::VectorXd out(total_dual_len());
    Index off = 0;
    for (Index j = 0; j < num_dual(); ++j) {
      out.segment(off, dual_shape(j).len()) = z[static_cast<std::size_t>(j)];
      off += dual_shape(j).len();
    }
    return out;
  }

  std::vector<Eigen::VectorXd> split_dual(const Eigen::VectorXd& v) const {
    if (v.size() != total_dual_len())
      throw StructuralError("OpGrid::split_dual: length mismatch");
    std::vector<Eigen::VectorXd> z(static_cast<std::size_t>(num_dual()));
    Index off = 0;
    for (Index j = 0; j < num_dual(); ++j) {
      z[static_cast<std::size_t>(j)] = v.segment(off, dual_shape(j).len());
      off += dual_shape(j).len();
    }
    return z;
  }

  /// The whole grid as a single operator on the stacked spaces, with the
  /// root-sum-of-squares of entry bounds as its norm bound.
  LinOp stacked() const {
    validate();
    const OpGrid self = *this;  // value copy keeps the LinOp self-contained
    double sq = 0.0;
    for (Index j = 0; j < num_dual(); ++j)
      for (Index i = 0; i < num_primal(); ++i)
        if (present(j, i)) sq += at(j, i).norm_bound() * at(j, i).norm_bound();
    auto fwd = [self](const Eigen::VectorXd& v) {
      return self.stack_dual(self.forward(self.split_primal(v)));
    };
    auto adj = [self](const Eigen::VectorXd& v) {
      return self.stack_primal(self.adjoint(self.split_dual(v)));
    };
    return LinOp(VarShape::vec(total_primal_len()), VarShape::vec(total_dual_len()),
                 std::move(fwd), std::move(adj), std::sqrt(sq));
  }

 private:
  std::size_t slot(Index j, Index i) const {
    if (j < 0 || j >= num_dual() || i < 0 || i >= num_primal())
      throw StructuralError("OpGrid: index out of range");
    return static_cast<std::size_t>(j) * primal_.size() + static_cast<std::size_t>(i);
  }

  void check_primal(const std::vector<Eigen::VectorXd>& x) const {
    if (static_cast<Index>(x.size()) != num_primal())
      throw StructuralError("OpGrid: wrong number of primal blocks");
    for (Index i = 0; i < num_primal(); ++i)
      if (x[static_cast<std::size_t>(i)].size() != primal_shape(i).len())
        throw StructuralError("OpGrid: primal block " + std::to_string(i) + " has wrong length");
  }

  void check_dual(const std::vector<Eigen::VectorXd>& z) const {
    if (static_cast<Index>(z.size()) != num_dual())
      throw StructuralError("OpGrid: wrong number of dual blocks");
    for (Index j = 0; j < num_dual(); ++j)
      if (z[static_cast<std::size_t>(j)].size() != dual_shape(j).len())
        throw StructuralError("OpGrid: dual block " + std::to_string(j) + " has wrong length");
  }

  std::vector<VarShape> primal_, dual_;
  std::vector<std::optional<LinOp>> entries_;
};

}  // namespace ppds
