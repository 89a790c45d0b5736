#pragma once

#include <string>
#include <vector>

#include "fblab/geometry.hpp"
#include "fblab/solver.hpp"

namespace fblab {

// Polyline of the zero set of u_i - u_j where i and j are the two dominant components.
struct Arc {
  int i = -1;
  int j = -1;
  std::vector<Vec2> points;
  double length() const;
};

struct Junction {
  Vec2 x;
  std::vector<int> arcs;  // incident arcs
  std::vector<int> ends;  // 0 when the arc starts at the junction, 1 when it ends there
};

struct Contact {
  Vec2 x;       // projection on the boundary
  Vec2 normal;  // outward normal there
  int arc = -1;
  int end = 0;  // which end of the arc touches the boundary
};

// Maximal run of boundary samples assigned to one component.
struct Trace {
  int component = -1;
  std::vector<Vec2> points;
  double start = 0.0;  // arc-length parameters along the boundary, end may exceed the perimeter
  double end = 0.0;
};

// Point of the boundary where no single component dominates.
struct BoundaryFreePoint {
  Vec2 x;
  Vec2 normal;
  double width = 0.0;  // arc length of the unassigned cluster, 0 for a direct switch
  int before = -1;     // components of the neighbouring traces
  int after = -1;
};

struct TraceSet {
  std::vector<Trace> traces;
  std::vector<BoundaryFreePoint> free_points;
  double threshold = 0.0;  // minimum inward difference quotient of an assigned sample
  bool isolated = true;    // every unassigned cluster is shorter than the isolation length
};

struct InterfaceGraph {
  std::vector<Arc> arcs;
  std::vector<Junction> junctions;
  std::vector<Contact> contacts;
  TraceSet traces;
  double h = 0.0;

  std::string csv() const;  // arc,i,j,x,y rows
};

struct InterfaceOptions {
  double junction_radius = 3.0;  // arc ends closer than this many h are merged into one junction
  double contact_radius = 2.0;   // arc ends within this many h of the boundary touch it
  double quotient_depth = 2.0;   // inward offset of the difference quotient, in h
  double isolation = 20.0;       // longest unassigned cluster counted as isolated, in h
};

InterfaceGraph extract_interface(const DensityField& u, const Domain& domain, const InterfaceOptions& opt = {});

TraceSet traces_on_boundary(const DensityField& u, const Domain& domain, const InterfaceOptions& opt = {});

struct TangentFit {
  Vec2 direction;         // unit vector pointing from the fitted end into the arc
  int nodes = 0;          // polyline nodes used
  bool reduced = false;   // fewer nodes than requested were available
};

// Least-squares tangent of an arc at one of its ends, skipping the first `skip` nodes.
TangentFit end_tangent(const Arc& arc, int end, int nodes = 8, int skip = 0);

struct JunctionAngles {
  std::vector<double> angles;  // consecutive angles in degrees, counterclockwise
  double deviation = 0.0;      // max |angle - 360/k| in degrees
  bool reduced = false;
};

// Throws for junctions with fewer than three arcs.
JunctionAngles junction_angles(const InterfaceGraph& g, const Junction& junction);

struct ContactAngle {
  double degrees = 0.0;  // angle between the arc tangent line and the normal
  bool reduced = false;
};

ContactAngle boundary_contact_angle(const InterfaceGraph& g, const Contact& contact);

struct CleanupResult {
  int active = 0;
  std::vector<double> sup;  // sup of each component over the ball
  int dominant = -1;
  double threshold = 0.0;   // zero-set threshold 3 h Lip
  // min of u_dominant / dist(., boundary) over nodes of the inner half ball, +inf if none
  double linear_constant = 0.0;
};

// Components seen in B_r(x0) ∩ D.
CleanupResult cleanup_check(const DensityField& u, const Domain& domain, Vec2 x0, double r);

// Partition coloring with arcs, junctions and contacts.
std::string interface_svg(const DensityField& u, const Domain& domain, const InterfaceGraph& g);

}  // namespace fblab
