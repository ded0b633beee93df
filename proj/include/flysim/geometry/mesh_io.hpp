#pragma once

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "flysim/geometry/scene.hpp"

namespace flysim {

// ASCII triangle-list meshes: `v x y z` vertex records and `f i j k ...`
// faces with 1-based (or negative, relative) indices. `o`/`g` start a new
// mesh group; each non-empty group becomes one TriMesh object. Normals,
// texture coordinates and material records are ignored. Polygons are
// fan-triangulated.
namespace mesh_io {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

struct Group {
  std::vector<std::array<long, 3>> faces;  // global 0-based vertex indices
};

}  // namespace mesh_io

inline std::vector<SceneObject> parse_mesh_objects(std::istream& in, const std::string& source, int first_id = 1) {
  std::vector<Vec3> vertices;
  std::vector<mesh_io::Group> groups(1);
  std::string line;
  std::size_t line_no = 0;

  auto parse_double = [&](const std::string& tok) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw ParseError(source, line_no, "invalid number '" + tok + "'");
    return v;
  };
  auto parse_index = [&](const std::string& tok) {
    const std::string head = tok.substr(0, tok.find('/'));
    long idx = 0;
    const auto res = std::from_chars(head.data(), head.data() + head.size(), idx);
    if (res.ec != std::errc() || res.ptr != head.data() + head.size() || head.empty())
      throw ParseError(source, line_no, "invalid vertex index '" + tok + "'");
    const long count = static_cast<long>(vertices.size());
    const long resolved = idx < 0 ? count + idx : idx - 1;
    if (idx == 0 || resolved < 0 || resolved >= count)
      throw ParseError(source, line_no,
                       "vertex index " + std::to_string(idx) + " out of range (" + std::to_string(count) +
                           " vertices defined)");
    return resolved;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = mesh_io::split_ws(line);
    if (tok.empty()) continue;
    const std::string& kind = tok[0];
    if (kind == "v") {
      if (tok.size() < 4) throw ParseError(source, line_no, "vertex record needs 3 coordinates");
      const Vec3 v(parse_double(tok[1]), parse_double(tok[2]), parse_double(tok[3]));
      if (!v.allFinite()) throw ParseError(source, line_no, "non-finite vertex");
      vertices.push_back(v);
    } else if (kind == "f") {
      if (tok.size() < 4) throw ParseError(source, line_no, "face record needs at least 3 indices");
      std::vector<long> idx;
      for (std::size_t i = 1; i < tok.size(); ++i) idx.push_back(parse_index(tok[i]));
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) groups.back().faces.push_back({idx[0], idx[i], idx[i + 1]});
    } else if (kind == "o" || kind == "g") {
      if (!groups.back().faces.empty()) groups.emplace_back();
    } else if (kind == "vn" || kind == "vt" || kind == "vp" || kind == "s" || kind == "usemtl" ||
               kind == "mtllib" || kind == "l") {
      continue;
    } else {
      throw ParseError(source, line_no, "unknown record '" + kind + "'");
    }
  }

  std::vector<SceneObject> objects;
  int id = first_id;
  for (const auto& g : groups) {
    if (g.faces.empty()) continue;
    TriMesh mesh;
    std::unordered_map<long, std::uint32_t> remap;
    for (const auto& f : g.faces) {
      std::array<std::uint32_t, 3> tri{};
      for (int k = 0; k < 3; ++k) {
        auto [it, inserted] = remap.try_emplace(f[k], static_cast<std::uint32_t>(mesh.vertices.size()));
        if (inserted) mesh.vertices.push_back(vertices[f[k]]);
        tri[k] = it->second;
      }
      mesh.triangles.push_back(tri);
    }
    objects.push_back({id++, std::move(mesh)});
  }
  return objects;
}

inline Scene load_mesh_scene(const std::string& path, int first_id = 1) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open mesh file");
  auto objects = parse_mesh_objects(in, path, first_id);
  if (objects.empty()) throw ParseError(path, 0, "mesh file contains no faces");
  return Scene(std::move(objects));
}

}  // namespace flysim
