#include "fblab/field.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "fblab/error.hpp"

namespace fblab {

AnalyticField AnalyticField::scaled(double c) const {
  std::vector<AnalyticComponent> out;
  for (const auto& p : parts_) {
    out.push_back({[v = p.value, c](Vec2 x) { return c * v(x); }, [g = p.gradient, c](Vec2 x) { return c * g(x); },
                   p.lambda});
  }
  return AnalyticField(std::move(out));
}

AnalyticField homogeneous_sectors(Vec2 origin, double angle0, double gamma, int sectors) {
  if (!(gamma > 0.0) || sectors < 1) throw Error("field", "invalid homogeneous sector field");
  const double pi = std::numbers::pi;
  const double opening = pi / gamma;
  if (sectors * opening > 2.0 * pi * (1.0 + 1e-12)) throw Error("field", "sectors overlap");
  std::vector<AnalyticComponent> parts;
  for (int s = 0; s < sectors; ++s) {
    // index of the sector containing x, or -1
    auto phase = [=](Vec2 x, double& r, double& phi) {
      const Vec2 y = x - origin;
      r = norm(y);
      phi = std::remainder(std::atan2(y.y, y.x) - angle0 - s * opening - 0.5 * opening, 2.0 * pi) + 0.5 * opening;
      return r > 0.0 && phi > 0.0 && phi < opening;
    };
    AnalyticComponent c;
    c.value = [=](Vec2 x) {
      double r, phi;
      if (!phase(x, r, phi)) return 0.0;
      return std::pow(r, gamma) * std::sin(gamma * phi);
    };
    c.gradient = [=](Vec2 x) {
      double r, phi;
      if (!phase(x, r, phi)) return Vec2{};
      const double t = angle0 + s * opening + phi;
      const Vec2 er{std::cos(t), std::sin(t)}, et{-std::sin(t), std::cos(t)};
      const double rg = std::pow(r, gamma - 1.0);
      return gamma * rg * std::sin(gamma * phi) * er + gamma * rg * std::cos(gamma * phi) * et;
    };
    parts.push_back(std::move(c));
  }
  return AnalyticField(std::move(parts));
}

namespace {
constexpr int dx[4] = {1, -1, 0, 0};
constexpr int dy[4] = {0, 0, 1, -1};
}  // namespace

GridField::GridField(const DensityField& f) : grid_(f.disc->grid), lambda_(f.lambda) {
  const Discretization& d = *f.disc;
  const Grid& g = grid_;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const int N = f.N();
  ext_.assign(N, std::vector<double>(g.size(), nan));
  grad_.assign(N, std::vector<Vec2>(g.size()));
  for (int c = 0; c < N; ++c) {
    auto& e = ext_[c];
    const auto& u = f.u[c];
    std::vector<double> sum(g.size(), 0.0);
    std::vector<int> count(g.size(), 0);
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (!(u[k] > 0.0)) continue;
      e[d.node[k]] = u[k];
      const int i = static_cast<int>(d.node[k] % g.nx), j = static_cast<int>(d.node[k] / g.nx);
      for (int m = 0; m < 4; ++m) {
        const int nb = d.nbr[k][m];
        if (nb >= 0 && u[nb] > 0.0) continue;
        double theta = 1.0;
        if (nb < 0) theta = d.theta[k][m];
        else if (!f.cut.empty()) theta = f.cut[c][k][m];
        const std::size_t q = g.index(i + dx[m], j + dy[m]);
        sum[q] -= u[k] * (1.0 - theta) / theta;
        ++count[q];
      }
    }
    for (std::size_t q = 0; q < g.size(); ++q)
      if (std::isnan(e[q]) && count[q] > 0) e[q] = sum[q] / count[q];
    // second layer: planar extrapolation across cells with three known corners
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (int j = 0; j + 1 < g.ny; ++j)
      for (int i = 0; i + 1 < g.nx; ++i) {
        const std::size_t q[4] = {g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)};
        int missing = -1, n_missing = 0;
        for (int t = 0; t < 4; ++t)
          if (std::isnan(e[q[t]])) {
            missing = t;
            ++n_missing;
          }
        if (n_missing != 1) continue;
        const std::size_t opp = q[(missing + 2) % 4];
        sum[q[missing]] += e[q[(missing + 1) % 4]] + e[q[(missing + 3) % 4]] - e[opp];
        ++count[q[missing]];
      }
    std::vector<std::uint8_t> known(g.size(), 0);
    for (std::size_t q = 0; q < g.size(); ++q) {
      if (std::isnan(e[q]) && count[q] > 0) e[q] = std::min(0.0, sum[q] / count[q]);
      known[q] = !std::isnan(e[q]);
    }
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t q = g.index(i, j);
        if (!known[q]) continue;
        double comp[2];
        for (int axis = 0; axis < 2; ++axis) {
          const int m = 2 * axis;
          const int ip = i + dx[m], jp = j + dy[m], im = i + dx[m + 1], jm = j + dy[m + 1];
          const bool hp = ip >= 0 && jp >= 0 && ip < g.nx && jp < g.ny && known[g.index(ip, jp)];
          const bool hm = im >= 0 && jm >= 0 && im < g.nx && jm < g.ny && known[g.index(im, jm)];
          if (hp && hm) comp[axis] = (e[g.index(ip, jp)] - e[g.index(im, jm)]) / (2.0 * g.h);
          else if (hp) comp[axis] = (e[g.index(ip, jp)] - e[q]) / g.h;
          else if (hm) comp[axis] = (e[q] - e[g.index(im, jm)]) / g.h;
          else comp[axis] = 0.0;
        }
        grad_[c][q] = {comp[0], comp[1]};
      }
    for (double& x : e)
      if (std::isnan(x)) x = 0.0;
  }
}

bool GridField::cell(Vec2 x, int& i0, int& j0, double& a, double& b) const {
  const double fx = (x.x - grid_.origin.x) / grid_.h, fy = (x.y - grid_.origin.y) / grid_.h;
  i0 = static_cast<int>(std::floor(fx));
  j0 = static_cast<int>(std::floor(fy));
  a = fx - i0;
  b = fy - j0;
  return i0 >= 0 && j0 >= 0 && i0 + 1 < grid_.nx && j0 + 1 < grid_.ny;
}

bool GridField::covers(Vec2 x) const {
  int i, j;
  double a, b;
  return cell(x, i, j, a, b);
}

double GridField::value(int c, Vec2 x) const {
  int i, j;
  double a, b;
  if (!cell(x, i, j, a, b)) throw Error("field", "point outside the computational grid");
  const auto& e = ext_[c];
  const Grid& g = grid_;
  const double v = (1 - a) * (1 - b) * e[g.index(i, j)] + a * (1 - b) * e[g.index(i + 1, j)] +
                   (1 - a) * b * e[g.index(i, j + 1)] + a * b * e[g.index(i + 1, j + 1)];
  return std::max(0.0, v);
}

Vec2 GridField::gradient(int c, Vec2 x) const {
  if (!(value(c, x) > 0.0)) return {};
  int i, j;
  double a, b;
  cell(x, i, j, a, b);
  const auto& gr = grad_[c];
  const Grid& g = grid_;
  return (1 - a) * (1 - b) * gr[g.index(i, j)] + a * (1 - b) * gr[g.index(i + 1, j)] +
         (1 - a) * b * gr[g.index(i, j + 1)] + a * b * gr[g.index(i + 1, j + 1)];
}

}  // namespace fblab
