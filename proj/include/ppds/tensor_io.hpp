#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ppds/diff_ops.hpp"
#include "ppds/shape.hpp"

namespace ppds {

static_assert(std::endian::native == std::endian::little,
              "tensor files are little-endian; byte swapping is not implemented");

struct Tensor {
  VarShape shape;
  Eigen::VectorXd data;
};

/// Writes raw little-endian float64 data to `path` and a structured-text
/// sidecar header to `path + ".hdr"` carrying dtype, element order, and dims.
inline void write_tensor(const std::string& path, const Eigen::VectorXd& data,
                         const VarShape& shape) {
  if (data.size() != shape.len()) throw StructuralError("write_tensor: data does not match shape");
  std::ofstream raw(path, std::ios::binary | std::ios::trunc);
  if (!raw) throw StructuralError("write_tensor: cannot open " + path);
  raw.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(data.size())));
  if (!raw) throw StructuralError("write_tensor: write failed for " + path);
  std::ofstream hdr(path + ".hdr", std::ios::trunc);
  if (!hdr) throw StructuralError("write_tensor: cannot open " + path + ".hdr");
  hdr << "format: tensor-v1\n";
  hdr << "dtype: float64-le\n";
  hdr << "order: first-index-fastest\n";
  hdr << "dims:";
  for (Index d : shape.dims) hdr << " " << d;
  hdr << "\n";
}

inline Tensor read_tensor(const std::string& path) {
  std::ifstream hdr(path + ".hdr");
  if (!hdr) throw StructuralError("read_tensor: cannot open " + path + ".hdr");
  std::string line;
  std::vector<Index> dims;
  bool saw_dtype = false;
  while (std::getline(hdr, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dtype:") {
      std::string v;
      ls >> v;
      if (v != "float64-le") throw StructuralError("read_tensor: unsupported dtype " + v);
      saw_dtype = true;
    } else if (key == "dims:") {
      Index d;
      while (ls >> d) dims.push_back(d);
    } else if (key == "order:") {
      std::string v;
      ls >> v;
      if (v != "first-index-fastest")
        throw StructuralError("read_tensor: unsupported order " + v);
    }
  }
  if (!saw_dtype || dims.empty()) throw StructuralError("read_tensor: incomplete header for " + path);
  Tensor t;
  t.shape = VarShape(dims);
  t.data.resize(t.shape.len());
  std::ifstream raw(path, std::ios::binary);
  if (!raw) throw StructuralError("read_tensor: cannot open " + path);
  raw.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(t.data.size())));
  if (raw.gcount() !=
      static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(t.data.size())))
    throw StructuralError("read_tensor: short read from " + path);
  return t;
}

/// Edge-list text format: one `i j w` triple per line, 0-based vertices.
inline void write_graph(const std::string& path, const GraphSpec& g) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw StructuralError("write_graph: cannot open " + path);
  os << "# vertices " << g.num_vertices() << "\n";
  os.precision(17);
  for (const GraphEdge& e : g.edges()) os << e.i << " " << e.j << " " << e.w << "\n";
}

inline GraphSpec read_graph(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw StructuralError("read_graph: cannot open " + path);
  std::string line;
  Index n = -1;
  std::vector<GraphEdge> edges;
  Index max_vertex = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string word;
      ls >> word;
      if (word == "vertices") ls >> n;
      continue;
    }
    std::istringstream ls(line);
    GraphEdge e;
    if (!(ls >> e.i >> e.j >> e.w)) throw StructuralError("read_graph: malformed line: " + line);
    max_vertex = std::max({max_vertex, e.i, e.j});
    edges.push_back(e);
  }
  if (n < 0) n = max_vertex + 1;
  if (n < 1) throw StructuralError("read_graph: no vertices in " + path);
  return GraphSpec(n, std::move(edges));
}

}  // namespace ppds
