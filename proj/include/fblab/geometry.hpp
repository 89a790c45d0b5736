#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fblab/linalg.hpp"
#include "fblab/moduli.hpp"

namespace fblab {

enum class DomainKind { disk, rounded_rectangle, epigraph };

struct DomainParams {
  DomainKind kind = DomainKind::disk;
  // disk centered at the origin
  double radius = 1.0;
  // rounded rectangle [0, width] x [0, height] with circular corners
  double width = 2.0;
  double height = 1.0;
  double corner_radius = 0.1;
  // epigraph {|x| < half_width, a|x|^(1+b) < y < top}
  double graph_amplitude = 0.5;
  double graph_exponent = 0.5;
  double half_width = 1.0;
  double top = 1.0;
  // radius of the boundary charts
  double chart_radius = 0.15;
};

struct BoundaryPoint {
  Vec2 x;
  Vec2 normal;  // outward unit normal
};

struct Grid {
  double h = 0.0;
  int nx = 0;
  int ny = 0;
  Vec2 origin;

  Vec2 node(int i, int j) const { return {origin.x + i * h, origin.y + j * h}; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
};

// Local description of the boundary near x0: world = frame * x + x0, where the frame has
// columns (tangent, inward normal), and D is {x2 > graph(x1)} inside the chart ball.
struct BoundaryChart {
  Vec2 origin;
  Mat2 frame;
  double radius = 0.0;
  std::function<double(double)> graph;
  std::function<double(double)> graph_slope;
  Modulus sigma;          // modulus of graph_slope
  Modulus sigma_regular;  // smoothed version used by the diffeomorphism
  // +1 lifts by +3|x|sigma as in the displayed map; -1 flips the lift.
  int lift_sign = 1;

  static BoundaryChart flat(const Modulus& sigma, double radius);

  Vec2 to_local(Vec2 world) const { return frame.transpose() * (world - origin); }
  Vec2 to_world(Vec2 local) const { return frame * local + origin; }
  Vec2 outward_normal() const { return -frame.col(1); }
  Vec2 tangent() const { return frame.col(0); }
};

class Domain {
 public:
  explicit Domain(DomainParams params);

  const DomainParams& params() const { return params_; }
  DomainKind kind() const { return params_.kind; }
  double signed_distance(Vec2 p) const;
  bool contains(Vec2 p) const { return signed_distance(p) < 0.0; }
  Vec2 lower() const { return lower_; }
  Vec2 upper() const { return upper_; }
  double area() const;
  double inradius() const;
  double perimeter() const;

  // Nearest boundary point and its outward normal.
  BoundaryPoint project(Vec2 p) const;
  // Boundary point at arc-length parameter t in [0, perimeter).
  BoundaryPoint boundary_at(double t) const;
  std::vector<BoundaryPoint> boundary_polyline(double spacing) const;
  std::string boundary_csv(double spacing) const;

  // Charts exist on the disk everywhere, on the straight sides of the rounded rectangle away
  // from the corners, and on the graph part of the epigraph.
  bool chart_available(Vec2 boundary_point) const;
  BoundaryChart chart(Vec2 boundary_point) const;

  // Fraction t in (0, 1] with inside + t (outside - inside) on the boundary.
  double boundary_fraction(Vec2 inside, Vec2 outside) const;

  Grid make_grid(double h) const;
  std::vector<std::uint8_t> mask(const Grid& grid) const;

 private:
  double graph(double x) const;
  double graph_slope(double x) const;
  double distance_to_graph(Vec2 p, double& foot) const;

  DomainParams params_;
  Vec2 lower_, upper_;
};

bool mask_connected(const Grid& grid, const std::vector<std::uint8_t>& mask);

// Boundary-straightening map in chart coordinates.
double cutoff(double t, double R);
double cutoff_derivative(double t, double R);
Vec2 psi(const BoundaryChart& chart, Vec2 x);
Vec2 psi_world(const BoundaryChart& chart, Vec2 x);
Mat2 psi_jacobian(const BoundaryChart& chart, Vec2 x);
// Inverse of psi_world by Newton iteration on the second coordinate.
Vec2 psi_inverse(const BoundaryChart& chart, Vec2 world);
// x2 + lift - graph(x1); positive exactly on the transformed domain.
double transformed_level(const BoundaryChart& chart, Vec2 x);

class CoefficientField {
 public:
  explicit CoefficientField(BoundaryChart chart);

  Mat2 A(Vec2 x) const;
  double p(Vec2 x) const;
  double mu(Vec2 x) const;
  Vec2 alpha_vec(Vec2 x) const;
  Vec2 beta(Vec2 x) const;
  double det(Vec2 x) const { return p(x); }
  // max_ij |grad A_ij|, by central differences with step 1e-5 |x|
  double grad_A(Vec2 x) const;
  double grad_p(Vec2 x) const;
  double grad_mu(Vec2 x) const;
  double div_alpha(Vec2 x) const;
  double div_beta(Vec2 x) const;
  // operator norm of D beta - I
  double dbeta_minus_identity(Vec2 x) const;
  const BoundaryChart& chart() const { return chart_; }

 private:
  BoundaryChart chart_;
};

CoefficientField coefficients(const BoundaryChart& chart);

struct StarshapedMargins {
  double A_margin = 0.0;  // min over Gamma_r of A x.nu - |x| sigma
  double x_margin = 0.0;  // min over Gamma_r of x.nu - |x| sigma / 2
  int samples = 0;
};

StarshapedMargins check_starshaped(const BoundaryChart& chart, double r, int samples = 400);

struct RegionSample {
  std::vector<Vec2> volume_points;
  std::vector<double> volume_weights;
  std::vector<Vec2> surface_points;
  std::vector<double> surface_weights;
  double area() const;
  double surface_length() const;
};

RegionSample transformed_region(const BoundaryChart& chart, double r, int n_r, int n_theta);

struct CoefficientBounds {
  double A_minus_I = 0.0;   // max |A - I| / sigma
  double p_minus_1 = 0.0;   // max |p - 1| / sigma
  double mu_minus_1 = 0.0;  // max |mu - 1| / sigma
  double beta_minus_x = 0.0;  // max |beta - x| / (|x| sigma)
  double grad_A = 0.0;      // max |grad A| |x| / sigma
  double grad_mu = 0.0;     // max |grad mu| |x| / sigma
  double div_alpha = 0.0;   // max |div alpha - mu/|x|| |x| / sigma
  double dbeta = 0.0;       // max |D beta - I| / sigma
  double div_beta = 0.0;    // max |div beta - 2| / sigma
  double min_eigen = 0.0;   // ellipticity range of A
  double max_eigen = 0.0;
  double min_mu = 0.0;
  double max_mu = 0.0;
  double max_det_deviation = 0.0;  // max |det D psi - 1|
  double kappa() const;
};

// Ratios sampled over the transformed domain inside B_r.
CoefficientBounds fit_coefficient_bounds(const BoundaryChart& chart, double r, int n_r = 40, int n_theta = 96);

struct ChartLimit {
  double radius = 0.0;   // largest sampled radius where every check passes
  std::string failing;   // first check that fails beyond it, empty if none
};

// Scans radii up to the chart radius and reports which chart property fails first:
// det bound of the full map on B_r, mu range on O_r, A x.nu >= |x| sigma on Gamma_r.
ChartLimit chart_limit(const BoundaryChart& chart, int steps = 40);

}  // namespace fblab
