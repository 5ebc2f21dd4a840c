#pragma once

#include <string>

#include <Eigen/Core>

#include "flat4/flatmap.hpp"
#include "flat4/hypsys.hpp"
#include "flat4/immersion.hpp"

namespace flat4 {

// CSV grids, one row per node in row-major (u outer) order, shortest round-trip decimals.
void write_csv(const FlatMapGrid& g, const std::string& path);
void write_csv(const SolutionGrid& s, const std::string& path);
void write_csv(const ImmersionGrid& im, const std::string& path);
void write_curve_csv(const S3Curve& c, const std::string& path);

// The angle is rebuilt from its first column and first row, assuming separability.
FlatMapGrid read_flatmap_csv(const std::string& path);
SolutionGrid read_solution_csv(const std::string& path);

// Header line of a CSV file.
std::string csv_header(const std::string& path);

struct Projection {
    enum Kind { stereographic, drop_coordinate } kind = stereographic;
    Quaternion pole{0, 0, 0, 1};
    int drop = 3;  // index removed for drop_coordinate
};

// Stereographic image of a unit point from `pole`; throws PoleOnSurface at the pole.
Eigen::Vector3d stereographic(const Quaternion& p, const Quaternion& pole = Quaternion(0, 0, 0, 1));

// Writes "v x y z" lines row-major and triangulated quads over the valid nodes.
// Stereographic export recentres and rescales to the unit sphere and requires a sphere-fit RMS below 1e-4.
void export_obj(const ImmersionGrid& im, const Projection& proj, const std::string& path);

}  // namespace flat4
