#pragma once

#include <Eigen/Core>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "ppds/errors.hpp"

namespace ppds {

using Index = Eigen::Index;

/// Shape of one optimization variable: a flat real vector with optional
/// multi-dimensional indexing. Cube entries are laid out first-index-fastest,
/// i.e. element (i, j, k) of an [n1, n2, n3] cube lives at i + n1*(j + n2*k).
struct VarShape {
  std::vector<Index> dims;

  VarShape() = default;
  explicit VarShape(std::vector<Index> d) : dims(std::move(d)) {
    for (Index n : dims) {
      if (n < 0) throw StructuralError("VarShape: negative dimension");
    }
  }

  static VarShape vec(Index n) { return VarShape({n}); }
  static VarShape cube(Index n1, Index n2, Index n3) { return VarShape({n1, n2, n3}); }

  Index len() const {
    Index p = 1;
    for (Index n : dims) p *= n;
    return dims.empty() ? 0 : p;
  }

  Index rank() const { return static_cast<Index>(dims.size()); }

  Index dim(Index axis) const { return dims.at(static_cast<std::size_t>(axis)); }

  /// Stride of `axis` under first-index-fastest layout.
  Index stride(Index axis) const {
    Index s = 1;
    for (Index a = 0; a < axis; ++a) s *= dims[static_cast<std::size_t>(a)];
    return s;
  }

  bool operator==(const VarShape& o) const { return dims == o.dims; }
  bool operator!=(const VarShape& o) const { return !(*this == o); }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t k = 0; k < dims.size(); ++k) {
      if (k) s += "x";
      s += std::to_string(dims[k]);
    }
    return s + "]";
  }
};

}  // namespace ppds
