#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fblab/geometry.hpp"

namespace fblab {

// Interior nodes of the grid with the 5-point stencil. A link to a node outside the domain
// is shortened to the boundary crossing at fraction theta, which enters the diagonal as 1/theta.
struct Discretization {
  Grid grid;
  std::vector<std::uint8_t> mask;
  std::vector<int> unknown;              // grid index -> unknown, or -1
  std::vector<std::size_t> node;         // unknown -> grid index
  std::vector<std::array<int, 4>> nbr;   // +x, -x, +y, -y neighbour unknown or -1
  std::vector<std::array<double, 4>> theta;

  std::size_t size() const { return node.size(); }
  double h() const { return grid.h; }
  Vec2 position(std::size_t k) const;
  // (L u)_k with L = -h^2 Laplacian
  double apply(const std::vector<double>& u, std::size_t k) const;
};

std::shared_ptr<const Discretization> discretize(const Domain& domain, double h);

struct SolverConfig {
  int N = 2;
  std::vector<double> penalties{1.0, 1e-1, 1e-2, 1e-3, 1e-4};
  int inner_iterations = 400;
  // Implicit step of the normalized flow; 0 means an infinite step (inverse iteration).
  double step = 0.0;
  double tolerance = 1e-7;
  std::uint64_t seed = 1;
  int retries = 3;
  int levels = 3;
  int sweeps = 200;
  // Passes that move each interface inside its grid link towards balanced slopes.
  int interface_updates = 0;
};

struct DensityField {
  std::shared_ptr<const Discretization> disc;
  std::vector<std::vector<double>> u;  // per component, indexed by unknown
  std::vector<double> lambda;
  // Per component and link, the fraction of the link inside the component where it borders
  // another component; 1 elsewhere.
  std::vector<std::vector<std::array<double, 4>>> cut;
  std::vector<double> history;  // sum of eigenvalues after each refinement sweep
  std::vector<int> pieces;      // connected pieces of each support
  std::uint64_t seed = 0;
  int iterations = 0;

  int N() const { return static_cast<int>(u.size()); }
  double sum_lambda() const;
  // value of component i at a grid node, zero outside the domain
  double at(int i, std::size_t grid_index) const;
  std::string csv() const;
};

DensityField minimize_partition(const Domain& domain, double h, const SolverConfig& config);

// Penalized flow, projection and refinement on a single grid from given starting densities.
DensityField relax_partition(std::shared_ptr<const Discretization> disc, std::vector<std::vector<double>> start,
                             const SolverConfig& config);

// Voronoi cells of N random interior nodes.
std::vector<std::vector<double>> voronoi_start(const Discretization& disc, int N, std::uint64_t seed);

double eigenvalue(const Discretization& disc, const std::vector<double>& u);
// Rayleigh quotient of component i with its interface links shortened as in the refinement.
double eigenvalue(const DensityField& field, int i);

// Largest normalized violation of the two distributional inequalities, tested against
// nonnegative tent functions of half-width width_factor * inradius supported inside D.
std::pair<double, double> extremality_residual(const DensityField& field, double inradius,
                                               double width_factor = 0.1);

double lipschitz_estimate(const DensityField& field);

int connected_pieces(const Discretization& disc, const std::vector<double>& u, double threshold);

}  // namespace fblab
