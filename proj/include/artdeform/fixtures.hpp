#pragma once

#include "artdeform/articulation.hpp"
#include "artdeform/mesh.hpp"

#include <filesystem>
#include <vector>

namespace artdeform {

/// Closed axis-aligned box with every side split into an n x n grid, outward normals.
/// n = 3 gives 56 vertices.
TriMesh box_mesh(const Vec3& lo, const Vec3& hi, int subdivisions = 3);

/// Eyeglasses: a fixed frame made of two mirrored rim convexes and two legs hinged about
/// the vertical axis with range [0, pi/2]; chain states "open" and "folded".
/// Variants share topology and differ in proportions.
ArticulatedObject toy_eyeglasses(int variant = 0);

/// A fixed wall slab and a rod rotating through it about z over [0, pi/2].
/// `rod_length` controls how deep the rod sweeps into the wall.
ArticulatedObject hinge_fixture(double rod_length = 1.5, double wall_thickness = 0.1);

/// A fixed box and a revolute box far away from it.
ArticulatedObject disjoint_fixture();

/// A single-part box of the given size.
ArticulatedObject box_object(const Vec3& size);

/// Writes one manifest per object under dir/<prefix><i>/object.json and a dataset manifest
/// dir/<dataset_name>.json listing them. Returns the dataset manifest path.
std::filesystem::path write_dataset(const std::vector<ArticulatedObject>& objects, const std::filesystem::path& dir,
                                    const std::string& role, const std::string& prefix = "object");

}  // namespace artdeform
