// Regenerates the mesh fixtures under <dir>/meshes.

#include "graspforge/geometry.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  using namespace graspforge;
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <fixture-dir>\n";
    return 2;
  }
  const std::filesystem::path dir = std::filesystem::path(argv[1]) / "meshes";
  std::filesystem::create_directories(dir);
  auto save = [&](const std::string& name, const TriMesh& mesh) {
    std::ofstream out(dir / name);
    write_obj(mesh, out);
    std::cout << name << ": " << mesh.vertices().size() << " vertices, " << mesh.faces().size()
              << " faces\n";
  };
  save("unit_cube.obj", make_unit_cube());
  for (int s = 1; s <= 3; ++s) {
    save("icosphere_s" + std::to_string(s) + ".obj", make_icosphere(0.04, s));
  }
  save("box_large.obj", make_box(Vec3(0.6, 0.55, 0.52)));
  save("box_small.obj", make_box(Vec3(0.025, 0.025, 0.025)));
  save("cylinder.obj", make_cylinder(0.03, 0.1, 32));
  return 0;
}
