#include "fblab/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <sstream>

#include "fblab/error.hpp"
#include "fblab/parallel.hpp"

namespace fblab {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

constexpr int dx[4] = {1, -1, 0, 0};
constexpr int dy[4] = {0, 0, 1, -1};

SpMat stiffness(const Discretization& d) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(d.size() * 5);
  const double s = 1.0 / (d.h() * d.h());
  for (std::size_t k = 0; k < d.size(); ++k) {
    double diag = 0.0;
    for (int m = 0; m < 4; ++m) {
      diag += 1.0 / d.theta[k][m];
      if (d.nbr[k][m] >= 0) t.emplace_back(static_cast<int>(k), d.nbr[k][m], -s);
    }
    t.emplace_back(static_cast<int>(k), static_cast<int>(k), s * diag);
  }
  SpMat L(static_cast<int>(d.size()), static_cast<int>(d.size()));
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

double norm2(const Discretization& d, const std::vector<double>& u) {
  double s = 0.0;
  for (double x : u) s += x * x;
  return s * d.h() * d.h();
}

bool normalize(const Discretization& d, std::vector<double>& u) {
  const double n = norm2(d, u);
  if (!(n > 0.0) || !std::isfinite(n)) return false;
  const double c = 1.0 / std::sqrt(n);
  for (double& x : u) x *= c;
  return true;
}

struct FlowState {
  std::vector<std::vector<double>> u;
  std::vector<double> mu;
  int iterations = 0;
};

// Normalized implicit flow for the penalized energy with fixed penalty eps.
void flow(const Discretization& d, const SpMat& L, FlowState& st, double eps, const SolverConfig& cfg, int max_iter) {
  const int N = static_cast<int>(st.u.size());
  const std::size_t n = d.size();
  st.mu.assign(N, 0.0);
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    std::vector<std::vector<double>> next(N);
    std::vector<double> mu(N, 0.0);
    parallel_for(N, [&](std::size_t i) {
      Vec pot = Vec::Zero(static_cast<int>(n));
      for (int j = 0; j < N; ++j) {
        if (j == static_cast<int>(i)) continue;
        for (std::size_t k = 0; k < n; ++k) pot[k] += st.u[j][k] * st.u[j][k];
      }
      pot /= eps;
      SpMat A = L;
      for (std::size_t k = 0; k < n; ++k) A.coeffRef(static_cast<int>(k), static_cast<int>(k)) += pot[k];
      Vec rhs = Eigen::Map<const Vec>(st.u[i].data(), static_cast<int>(n));
      // Rayleigh quotient of the current iterate, used to scale the right-hand side so that
      // the solution stays of unit size.
      const Vec Au = A * rhs;
      const double q = rhs.dot(Au) / rhs.squaredNorm();
      if (cfg.step > 0.0) {
        for (std::size_t k = 0; k < n; ++k) A.coeffRef(static_cast<int>(k), static_cast<int>(k)) += 1.0 / cfg.step;
        rhs /= cfg.step;
      } else {
        rhs *= q;
      }
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
      cg.setTolerance(1e-10);
      cg.setMaxIterations(4 * static_cast<int>(std::sqrt(static_cast<double>(n))) + 200);
      cg.compute(A);
      Vec guess = Eigen::Map<const Vec>(st.u[i].data(), static_cast<int>(n));
      Vec v = cg.solveWithGuess(rhs, guess);
      next[i].resize(n);
      for (std::size_t k = 0; k < n; ++k) next[i][k] = std::max(0.0, v[k]);
      mu[i] = q;
    });
    for (int i = 0; i < N; ++i)
      if (!normalize(d, next[i])) throw Error("solver", "component collapsed during the penalized flow");
    st.u = std::move(next);
    st.mu = mu;
    ++st.iterations;
    double total = 0.0;
    for (double m : mu) total += m;
    if (std::abs(total - previous) <= cfg.tolerance * total) break;
    previous = total;
  }
}

// Keep the largest component at each node; ties go to the lowest index.
bool project(const Discretization& d, std::vector<std::vector<double>>& u) {
  const int N = static_cast<int>(u.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    int best = 0;
    for (int i = 1; i < N; ++i)
      if (u[i][k] > u[best][k]) best = i;
    for (int i = 0; i < N; ++i)
      if (i != best) u[i][k] = 0.0;
  }
  for (auto& c : u)
    if (!normalize(d, c)) return false;
  return true;
}

// Fraction along the link k -> nb where the reference field changes owner, from the zero of
// r_i - r_j on the link; j owns nb in the reference.
constexpr double snap_floor = 1e-2;

double interface_fraction(const std::vector<std::vector<double>>& r, int i, int k, int nb) {
  int j = -1;
  for (int c = 0; c < static_cast<int>(r.size()); ++c)
    if (c != i && (j < 0 || r[c][nb] > r[j][nb])) j = c;
  if (j < 0) return 1.0;
  const double wk = r[i][k] - r[j][k], wn = r[i][nb] - r[j][nb];
  if (!(wk > 0.0) || !(wn < 0.0)) return 1.0;
  return std::clamp(wk / (wk - wn), snap_floor, 1.0);
}

void refine(const Discretization& d, DensityField& f, const std::vector<std::vector<double>>& reference, int sweeps) {
  const int N = f.N();
  const double h2 = d.h() * d.h();
  const double cut = 10.0 * std::numeric_limits<double>::epsilon();
  struct Part {
    std::vector<int> idx;
    Eigen::SimplicialLDLT<SpMat> solver;
    SpMat A;
    Vec x;
  };
  // A node whose own interface crossing is within snap of it is treated as lying on the
  // interface, with zero data for every component. This avoids spurious links between
  // nodes of a grid line that the interface runs through.
  constexpr double snap = 0.05;
  std::vector<std::uint8_t> on_interface(d.size(), 0);
  for (int i = 0; i < N; ++i)
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (!(f.u[i][k] > cut)) continue;
      for (int m = 0; m < 4; ++m) {
        const int nb = d.nbr[k][m];
        if (nb >= 0 && !(f.u[i][nb] > cut) && interface_fraction(reference, i, static_cast<int>(k), nb) < snap)
          on_interface[k] = 1;
      }
    }
  for (auto& c : f.u)
    for (std::size_t k = 0; k < d.size(); ++k)
      if (on_interface[k]) c[k] = 0.0;
  std::vector<Part> parts(N);
  f.cut.assign(N, std::vector<std::array<double, 4>>(d.size(), {1.0, 1.0, 1.0, 1.0}));
  parallel_for(N, [&](std::size_t i) {
    Part& p = parts[i];
    std::vector<int> local(d.size(), -1);
    for (std::size_t k = 0; k < d.size(); ++k)
      if (f.u[i][k] > cut) {
        local[k] = static_cast<int>(p.idx.size());
        p.idx.push_back(static_cast<int>(k));
      }
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t a = 0; a < p.idx.size(); ++a) {
      const int k = p.idx[a];
      double diag = 0.0;
      for (int m = 0; m < 4; ++m) {
        const int nb = d.nbr[k][m];
        if (nb < 0) {
          diag += 1.0 / d.theta[k][m];
        } else if (local[nb] >= 0) {
          diag += 1.0;
          t.emplace_back(static_cast<int>(a), local[nb], -1.0 / h2);
        } else {
          const double th = interface_fraction(reference, static_cast<int>(i), k, nb);
          f.cut[i][k][m] = th;
          diag += 1.0 / th;
        }
      }
      t.emplace_back(static_cast<int>(a), static_cast<int>(a), diag / h2);
    }
    const int m = static_cast<int>(p.idx.size());
    p.A.resize(m, m);
    p.A.setFromTriplets(t.begin(), t.end());
    p.solver.compute(p.A);
    if (p.solver.info() != Eigen::Success) throw Error("solver", "support factorization failed");
    p.x.resize(m);
    for (int a = 0; a < m; ++a) p.x[a] = f.u[i][p.idx[a]];
  });
  f.lambda.assign(N, 0.0);
  f.history.clear();
  std::vector<double> last(N, std::numeric_limits<double>::infinity());
  for (int s = 0; s < sweeps; ++s) {
    std::vector<double> lam(N);
    parallel_for(N, [&](std::size_t i) {
      Part& p = parts[i];
      Vec y = p.solver.solve(p.x);
      y /= std::sqrt(y.squaredNorm() * h2);
      lam[i] = y.dot(p.A * y) / y.squaredNorm();
      p.x = y;
    });
    double total = 0.0;
    bool done = true;
    for (int i = 0; i < N; ++i) {
      total += lam[i];
      if (std::abs(lam[i] - last[i]) > 1e-14 * lam[i]) done = false;
    }
    last = lam;
    f.history.push_back(total);
    if (done) break;
  }
  for (int i = 0; i < N; ++i) {
    std::fill(f.u[i].begin(), f.u[i].end(), 0.0);
    const Part& p = parts[i];
    for (std::size_t a = 0; a < p.idx.size(); ++a) f.u[i][p.idx[a]] = std::max(0.0, p.x[static_cast<int>(a)]);
    normalize(d, f.u[i]);
    f.lambda[i] = eigenvalue(f, i);
  }
}

std::vector<double> prolong(const Discretization& coarse, const std::vector<double>& u, const Discretization& fine) {
  const Grid& g = coarse.grid;
  auto value = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= g.nx || j >= g.ny) return 0.0;
    const int k = coarse.unknown[g.index(i, j)];
    return k < 0 ? 0.0 : u[k];
  };
  std::vector<double> out(fine.size());
  for (std::size_t k = 0; k < fine.size(); ++k) {
    const Vec2 x = fine.position(k);
    const double fx = (x.x - g.origin.x) / g.h, fy = (x.y - g.origin.y) / g.h;
    const int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy));
    const double a = fx - i, b = fy - j;
    out[k] = (1 - a) * (1 - b) * value(i, j) + a * (1 - b) * value(i + 1, j) + (1 - a) * b * value(i, j + 1) +
             a * b * value(i + 1, j + 1);
  }
  return out;
}

void validate(const SolverConfig& config) {
  if (config.penalties.empty()) throw Error("solver", "empty penalty schedule");
  for (std::size_t k = 0; k < config.penalties.size(); ++k)
    if (!(config.penalties[k] > 0.0) || (k > 0 && !(config.penalties[k] < config.penalties[k - 1])))
      throw Error("solver", "penalty schedule must decrease strictly and stay positive");
  if (config.inner_iterations < 1 || config.sweeps < 1 || config.levels < 1 || config.retries < 0 ||
      config.step < 0.0 || !(config.tolerance > 0.0) || config.interface_updates < 0)
    throw Error("solver", "invalid solver configuration");
}

DensityField finish(std::shared_ptr<const Discretization> disc, FlowState& st, const SolverConfig& cfg) {
  DensityField f;
  f.disc = disc;
  f.u = st.u;
  f.iterations = st.iterations;
  if (!project(*disc, f.u)) throw Error("solver", "component collapsed at projection");
  refine(*disc, f, st.u, cfg.sweeps);
  for (int pass = 0; pass < cfg.interface_updates; ++pass) {
    const auto reference = f.u;
    refine(*disc, f, reference, cfg.sweeps);
  }
  for (const auto& c : f.u) {
    double mx = 0.0;
    for (double x : c) mx = std::max(mx, x);
    f.pieces.push_back(connected_pieces(*disc, c, 1e-6 * mx));
  }
  return f;
}

}  // namespace

Vec2 Discretization::position(std::size_t k) const {
  const std::size_t g = node[k];
  return grid.node(static_cast<int>(g % grid.nx), static_cast<int>(g / grid.nx));
}

double Discretization::apply(const std::vector<double>& u, std::size_t k) const {
  double s = 0.0;
  for (int m = 0; m < 4; ++m) {
    s += u[k] / theta[k][m];
    if (nbr[k][m] >= 0) s -= u[nbr[k][m]];
  }
  return s;
}

std::shared_ptr<const Discretization> discretize(const Domain& domain, double h) {
  auto d = std::make_shared<Discretization>();
  d->grid = domain.make_grid(h);
  d->mask = domain.mask(d->grid);
  const Grid& g = d->grid;
  d->unknown.assign(g.size(), -1);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (d->mask[k]) {
      d->unknown[k] = static_cast<int>(d->node.size());
      d->node.push_back(k);
    }
  d->nbr.resize(d->node.size());
  d->theta.resize(d->node.size());
  for (std::size_t k = 0; k < d->node.size(); ++k) {
    const int i = static_cast<int>(d->node[k] % g.nx), j = static_cast<int>(d->node[k] / g.nx);
    for (int m = 0; m < 4; ++m) {
      const int ii = i + dx[m], jj = j + dy[m];
      const std::size_t q = g.index(ii, jj);
      if (d->mask[q]) {
        d->nbr[k][m] = d->unknown[q];
        d->theta[k][m] = 1.0;
      } else {
        d->nbr[k][m] = -1;
        d->theta[k][m] = std::max(1e-2, domain.boundary_fraction(g.node(i, j), g.node(ii, jj)));
      }
    }
  }
  return d;
}

double DensityField::sum_lambda() const {
  double s = 0.0;
  for (double l : lambda) s += l;
  return s;
}

double DensityField::at(int i, std::size_t grid_index) const {
  const int k = disc->unknown[grid_index];
  return k < 0 ? 0.0 : u[i][k];
}

std::string DensityField::csv() const {
  std::ostringstream out;
  out.precision(12);
  out << "i,x,y";
  for (int i = 0; i < N(); ++i) out << ",u_" << i + 1;
  out << "\n";
  for (std::size_t k = 0; k < disc->size(); ++k) {
    const Vec2 x = disc->position(k);
    out << k << "," << x.x << "," << x.y;
    for (int i = 0; i < N(); ++i) out << "," << u[i][k];
    out << "\n";
  }
  return out.str();
}

std::vector<std::vector<double>> voronoi_start(const Discretization& disc, int N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, disc.size() - 1);
  std::vector<Vec2> centers;
  while (static_cast<int>(centers.size()) < N) {
    const Vec2 c = disc.position(pick(rng));
    bool fresh = true;
    for (const Vec2& o : centers) fresh = fresh && norm(c - o) > 0.0;
    if (fresh) centers.push_back(c);
  }
  std::vector<std::vector<double>> u(N, std::vector<double>(disc.size(), 0.0));
  for (std::size_t k = 0; k < disc.size(); ++k) {
    const Vec2 x = disc.position(k);
    int best = 0;
    for (int i = 1; i < N; ++i)
      if (norm(x - centers[i]) < norm(x - centers[best])) best = i;
    u[best][k] = 1.0;
  }
  for (auto& c : u) normalize(disc, c);
  return u;
}

DensityField relax_partition(std::shared_ptr<const Discretization> disc, std::vector<std::vector<double>> start,
                             const SolverConfig& config) {
  validate(config);
  const SpMat L = stiffness(*disc);
  FlowState st;
  st.u = std::move(start);
  for (auto& c : st.u)
    if (!normalize(*disc, c)) throw Error("solver", "zero starting density");
  if (st.u.size() > 1)
    for (double eps : config.penalties) flow(*disc, L, st, eps, config, config.inner_iterations);
  return finish(disc, st, config);
}

DensityField minimize_partition(const Domain& domain, double h, const SolverConfig& config) {
  if (config.N < 1) throw Error("solver", "need at least one component");
  validate(config);
  auto fine = discretize(domain, h);
  if (fine->size() < 100u * config.N) throw Error("solver", "grid too coarse: fewer than 100 nodes per component");
  std::vector<std::shared_ptr<const Discretization>> levels{fine};
  for (int l = 1; l < config.levels; ++l) {
    auto c = discretize(domain, h * std::ldexp(1.0, l));
    if (c->size() < 100u * config.N) break;
    levels.push_back(c);
  }
  std::reverse(levels.begin(), levels.end());
  const SpMat Lfine = stiffness(*fine);
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    const std::uint64_t seed = config.seed + attempt;
    try {
      FlowState st;
      st.u = voronoi_start(*levels.front(), config.N, seed);
      if (config.N > 1) {
        for (std::size_t l = 0; l < levels.size(); ++l) {
          if (l > 0) {
            for (auto& c : st.u) {
              c = prolong(*levels[l - 1], c, *levels[l]);
              if (!normalize(*levels[l], c)) throw Error("solver", "component collapsed in prolongation");
            }
          }
          const SpMat L = l + 1 == levels.size() ? Lfine : stiffness(*levels[l]);
          if (l == 0) {
            for (double eps : config.penalties) flow(*levels[l], L, st, eps, config, config.inner_iterations);
          } else {
            flow(*levels[l], L, st, config.penalties.back(), config, config.inner_iterations);
          }
        }
      } else {
        st.u = voronoi_start(*fine, 1, seed);
      }
      DensityField f = finish(fine, st, config);
      f.seed = seed;
      bool ok = true;
      for (const auto& c : f.u) {
        int active = 0;
        for (double x : c) active += x > 0.0;
        ok = ok && active > 0;
      }
      if (ok) return f;
    } catch (const Error& e) {
      if (std::string(e.what()).find("collapsed") == std::string::npos) throw;
    }
  }
  throw Error("solver", "component collapse persisted after all restarts");
}

double eigenvalue(const DensityField& f, int i) {
  const Discretization& d = *f.disc;
  const auto& u = f.u[i];
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (u[k] == 0.0) continue;
    double s = 0.0;
    for (int m = 0; m < 4; ++m) {
      const int nb = d.nbr[k][m];
      if (nb < 0) {
        s += u[k] / d.theta[k][m];
      } else if (u[nb] == 0.0 && !f.cut.empty()) {
        s += u[k] / f.cut[i][k][m];
      } else {
        s += u[k] - u[nb];
      }
    }
    num += u[k] * s;
    den += u[k] * u[k];
  }
  if (!(den > 0.0)) throw Error("solver", "eigenvalue of the zero function");
  return num / (den * d.h() * d.h());
}

double eigenvalue(const Discretization& disc, const std::vector<double>& u) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < disc.size(); ++k) {
    num += u[k] * disc.apply(u, k);
    den += u[k] * u[k];
  }
  if (!(den > 0.0)) throw Error("solver", "eigenvalue of the zero function");
  return num / (den * disc.h() * disc.h());
}

std::pair<double, double> extremality_residual(const DensityField& f, double inradius, double width_factor) {
  const Discretization& d = *f.disc;
  const int N = f.N();
  const double w = width_factor * inradius, h = d.h();
  std::vector<std::vector<double>> Lu(N, std::vector<double>(d.size()));
  std::vector<double> sup(N, 0.0);
  for (int i = 0; i < N; ++i) {
    for (std::size_t k = 0; k < d.size(); ++k) {
      Lu[i][k] = d.apply(f.u[i], k);
      sup[i] = std::max(sup[i], f.u[i][k]);
    }
  }
  double scale_all = 0.0;
  for (int i = 0; i < N; ++i) scale_all = std::max(scale_all, f.lambda[i] * sup[i]);
  const Grid& g = d.grid;
  const int span = static_cast<int>(std::ceil(w / h));
  const int stride = std::max(1, span / 2);
  double sub = 0.0, super = 0.0;
  for (int cj = 0; cj < g.ny; cj += stride) {
    for (int ci = 0; ci < g.nx; ci += stride) {
      const std::size_t c = g.index(ci, cj);
      if (d.unknown[c] < 0) continue;
      bool inside = true;
      for (int m = 0; m < 4 && inside; ++m) {
        const int ii = ci + (m & 1 ? span : -span), jj = cj + (m & 2 ? span : -span);
        if (ii < 0 || jj < 0 || ii >= g.nx || jj >= g.ny || d.unknown[g.index(ii, jj)] < 0) inside = false;
      }
      if (!inside) continue;
      std::vector<double> a(N, 0.0), b(N, 0.0);
      double mass = 0.0;
      for (int jj = cj - span + 1; jj < cj + span; ++jj) {
        for (int ii = ci - span + 1; ii < ci + span; ++ii) {
          const int k = d.unknown[g.index(ii, jj)];
          if (k < 0) continue;
          const double phi = (1.0 - std::abs(ii - ci) / double(span)) * (1.0 - std::abs(jj - cj) / double(span));
          mass += phi * h * h;
          for (int i = 0; i < N; ++i) {
            a[i] += phi * Lu[i][k];
            b[i] += phi * f.u[i][k] * h * h;
          }
        }
      }
      for (int i = 0; i < N; ++i) {
        if (sup[i] > 0.0) sub = std::max(sub, (a[i] - f.lambda[i] * b[i]) / (f.lambda[i] * sup[i] * mass));
        double A = a[i], B = f.lambda[i] * b[i];
        for (int j = 0; j < N; ++j) {
          if (j == i) continue;
          A -= a[j];
          B -= f.lambda[j] * b[j];
        }
        if (scale_all > 0.0) super = std::max(super, (B - A) / (scale_all * mass));
      }
    }
  }
  return {std::max(0.0, sub), std::max(0.0, super)};
}

double lipschitz_estimate(const DensityField& f) {
  const Discretization& d = *f.disc;
  double best = 0.0;
  for (const auto& u : f.u)
    for (std::size_t k = 0; k < d.size(); ++k)
      for (int m : {0, 2}) {
        const int nb = d.nbr[k][m];
        if (nb >= 0) best = std::max(best, std::abs(u[k] - u[nb]) / d.h());
      }
  return best;
}

int connected_pieces(const Discretization& d, const std::vector<double>& u, double threshold) {
  std::vector<std::uint8_t> seen(d.size(), 0);
  int pieces = 0;
  for (std::size_t s = 0; s < d.size(); ++s) {
    if (seen[s] || !(u[s] > threshold)) continue;
    ++pieces;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const std::size_t k = q.front();
      q.pop();
      for (int m = 0; m < 4; ++m) {
        const int nb = d.nbr[k][m];
        if (nb >= 0 && !seen[nb] && u[nb] > threshold) {
          seen[nb] = 1;
          q.push(nb);
        }
      }
    }
  }
  return pieces;
}

}  // namespace fblab
