#include "fblab/interface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fblab/error.hpp"
#include "fblab/field.hpp"

namespace fblab {

namespace {

constexpr double pi = std::numbers::pi;

struct Segment {
  Vec2 a, b;
};

Vec2 boundary_crossing(const Domain& D, Vec2 in, Vec2 out) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    (D.contains(in + mid * (out - in)) ? lo : hi) = mid;
  }
  return in + 0.5 * (lo + hi) * (out - in);
}

int owner_of(const DensityField& u, int k) {
  for (int c = 0; c < u.N(); ++c)
    if (u.u[c][k] > 0.0) return c;
  return -1;
}

// Zero set of u_i - u_j over the cells whose corners belong to i, to j, or are zero nodes
// bordering both. Crossings between an i node and a j node sit at the solver's cut fraction.
std::vector<Segment> contour(const DensityField& u, const Domain& D, int i, int j) {
  const Discretization& d = *u.disc;
  const Grid& g = d.grid;
  // per grid node: +1 owned by i, -1 owned by j, 0 shared zero node, 2 unusable
  std::vector<std::int8_t> label(g.size(), 2);
  for (std::size_t k = 0; k < d.size(); ++k) {
    const int o = owner_of(u, static_cast<int>(k));
    if (o == i) label[d.node[k]] = 1;
    else if (o == j) label[d.node[k]] = -1;
  }
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (owner_of(u, static_cast<int>(k)) >= 0) continue;
    const int gx = static_cast<int>(d.node[k] % g.nx), gy = static_cast<int>(d.node[k] / g.nx);
    bool near_i = false, near_j = false;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = gx + dx, y = gy + dy;
        if (x < 0 || y < 0 || x >= g.nx || y >= g.ny) continue;
        const std::int8_t l = label[g.index(x, y)];
        near_i = near_i || l == 1;
        near_j = near_j || l == -1;
      }
    if (near_i && near_j) label[d.node[k]] = 0;
  }
  // fraction from grid node a towards its neighbour b in direction m where the sign changes
  auto crossing = [&](std::size_t a, std::size_t b, int m) {
    const int ka = d.unknown[a], kb = d.unknown[b];
    const int back = m ^ 1;
    if (label[a] == 0) return 0.0;
    if (label[b] == 0) return 1.0;
    if (!u.cut.empty()) return label[a] == 1 ? u.cut[i][ka][m] : 1.0 - u.cut[i][kb][back];
    const double va = u.u[label[a] == 1 ? i : j][ka], vb = u.u[label[b] == 1 ? i : j][kb];
    return va / (va + vb);
  };
  std::vector<Segment> out;
  for (int cy = 0; cy + 1 < g.ny; ++cy)
    for (int cx = 0; cx + 1 < g.nx; ++cx) {
      const std::size_t q[4] = {g.index(cx, cy), g.index(cx + 1, cy), g.index(cx + 1, cy + 1), g.index(cx, cy + 1)};
      // direction codes of the cell edges q[e] -> q[e+1]: +x, +y, -x, -y
      constexpr int dir[4] = {0, 2, 1, 3};
      bool usable = true;
      bool sgn[4];
      for (int t = 0; t < 4; ++t) {
        usable = usable && label[q[t]] != 2;
        sgn[t] = label[q[t]] >= 0;
      }
      if (!usable) continue;
      Vec2 cross[4];
      bool has[4];
      int count = 0;
      for (int e = 0; e < 4; ++e) {
        const std::size_t a = q[e], b = q[(e + 1) % 4];
        has[e] = sgn[e] != sgn[(e + 1) % 4];
        if (!has[e]) continue;
        const double t = crossing(a, b, dir[e]);
        const Vec2 pa = g.node(static_cast<int>(a % g.nx), static_cast<int>(a / g.nx));
        const Vec2 pb = g.node(static_cast<int>(b % g.nx), static_cast<int>(b / g.nx));
        cross[e] = pa + t * (pb - pa);
        ++count;
      }
      std::vector<Segment> local;
      if (count == 2) {
        int e0 = -1, e1 = -1;
        for (int e = 0; e < 4; ++e)
          if (has[e]) (e0 < 0 ? e0 : e1) = e;
        local.push_back({cross[e0], cross[e1]});
      } else if (count == 4) {
        // saddle: keep the i corners connected
        for (int t = 0; t < 4; ++t)
          if (!sgn[t]) local.push_back({cross[(t + 3) % 4], cross[t]});
      }
      for (auto s : local) {
        if (norm(s.a - s.b) < 1e-12 * g.h) continue;
        const bool ia = D.contains(s.a), ib = D.contains(s.b);
        if (!ia && !ib) continue;
        if (!ia) s.a = boundary_crossing(D, s.b, s.a);
        if (!ib) s.b = boundary_crossing(D, s.a, s.b);
        out.push_back(s);
      }
    }
  return out;
}

// Chains segments into polylines; vertices of degree other than 2 end a chain.
std::vector<std::vector<Vec2>> chain(const std::vector<Segment>& segs, double h) {
  std::map<std::pair<long long, long long>, int> id;
  std::vector<Vec2> vert;
  auto key = [&](Vec2 p) {
    const double q = 1e-7 * h;
    const auto k = std::make_pair(std::llround(p.x / q), std::llround(p.y / q));
    auto it = id.find(k);
    if (it != id.end()) return it->second;
    id[k] = static_cast<int>(vert.size());
    vert.push_back(p);
    return static_cast<int>(vert.size()) - 1;
  };
  std::vector<std::pair<int, int>> edges;
  for (const auto& s : segs) {
    const int a = key(s.a), b = key(s.b);
    if (a != b) edges.push_back({a, b});
  }
  std::vector<std::vector<int>> adj(vert.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj[edges[e].first].push_back(static_cast<int>(e));
    adj[edges[e].second].push_back(static_cast<int>(e));
  }
  std::vector<std::uint8_t> used(edges.size(), 0);
  std::vector<std::vector<Vec2>> lines;
  auto walk = [&](int start, int e) {
    std::vector<Vec2> line{vert[start]};
    int v = start;
    while (true) {
      used[e] = 1;
      v = edges[e].first == v ? edges[e].second : edges[e].first;
      line.push_back(vert[v]);
      if (adj[v].size() != 2) break;
      const int next = used[adj[v][0]] ? adj[v][1] : adj[v][0];
      if (used[next]) break;
      e = next;
    }
    lines.push_back(std::move(line));
  };
  for (std::size_t v = 0; v < vert.size(); ++v)
    if (adj[v].size() != 2)
      for (int e : adj[v])
        if (!used[e]) walk(static_cast<int>(v), e);
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (!used[e]) walk(edges[e].first, static_cast<int>(e));
  return lines;
}

double depth(const Domain& D, Vec2 x) { return -D.signed_distance(x); }

}  // namespace

double Arc::length() const {
  double s = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) s += norm(points[k] - points[k - 1]);
  return s;
}

std::string InterfaceGraph::csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "arc,i,j,x,y\n";
  for (std::size_t a = 0; a < arcs.size(); ++a)
    for (const auto& p : arcs[a].points) out << a << ',' << arcs[a].i << ',' << arcs[a].j << ',' << p.x << ',' << p.y << '\n';
  return out.str();
}

TraceSet traces_on_boundary(const DensityField& u, const Domain& D, const InterfaceOptions& opt) {
  const GridField f(u);
  const double h = f.spacing();
  const int N = u.N();
  TraceSet out;
  out.threshold = 3.0 * h * lipschitz_estimate(u);
  const auto samples = D.boundary_polyline(h);
  const std::size_t n = samples.size();
  if (n < 3) throw Error("interface", "boundary polyline too coarse");
  std::vector<double> arclen(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) arclen[k] = arclen[k - 1] + norm(samples[k % n].x - samples[k - 1].x);
  const double delta = opt.quotient_depth * h;
  std::vector<int> owner(n, -1);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 q = samples[k].x - delta * samples[k].normal;
    double best = out.threshold;
    for (int c = 0; c < N; ++c) {
      const double quotient = f.value(c, q) / delta;
      if (quotient > best) {
        best = quotient;
        owner[k] = c;
      }
    }
  }
  // runs of equal owner on the closed boundary, starting at a change
  std::size_t start = 0;
  while (start < n && owner[start] == owner[(start + n - 1) % n]) ++start;
  if (start == n) {
    if (owner[0] >= 0) {
      Trace t;
      t.component = owner[0];
      for (const auto& s : samples) t.points.push_back(s.x);
      t.end = arclen[n];
      out.traces.push_back(t);
    }
    return out;
  }
  struct Run {
    int owner;
    std::size_t first, count;
  };
  std::vector<Run> runs;
  for (std::size_t m = 0; m < n; ++m) {
    const std::size_t k = (start + m) % n;
    if (runs.empty() || runs.back().owner != owner[k]) runs.push_back({owner[k], k, 0});
    ++runs.back().count;
  }
  // arc length covered by `count` consecutive samples starting at `first`
  auto span = [&](std::size_t first, std::size_t count) {
    double len = 0.0;
    for (std::size_t m = 0; m + 1 < count; ++m) len += norm(samples[(first + m + 1) % n].x - samples[(first + m) % n].x);
    return len;
  };
  const std::size_t R = runs.size();
  for (std::size_t r = 0; r < R; ++r) {
    const Run& run = runs[r];
    const Run& prev = runs[(r + R - 1) % R];
    const Run& next = runs[(r + 1) % R];
    if (run.owner >= 0) {
      Trace t;
      t.component = run.owner;
      for (std::size_t m = 0; m < run.count; ++m) t.points.push_back(samples[(run.first + m) % n].x);
      t.start = arclen[run.first];
      t.end = t.start + span(run.first, run.count);
      out.traces.push_back(t);
      if (next.owner >= 0) {
        // direct switch between two traces
        const std::size_t a = (run.first + run.count - 1) % n, b = (a + 1) % n;
        BoundaryFreePoint p;
        p.x = D.project(0.5 * (samples[a].x + samples[b].x)).x;
        p.normal = D.project(p.x).normal;
        p.before = run.owner;
        p.after = next.owner;
        out.free_points.push_back(p);
      }
    } else {
      BoundaryFreePoint p;
      const std::size_t mid = (run.first + run.count / 2) % n;
      p.x = run.count % 2 ? samples[mid].x : D.project(0.5 * (samples[mid].x + samples[(mid + n - 1) % n].x)).x;
      p.normal = D.project(p.x).normal;
      p.width = span((run.first + n - 1) % n, run.count + 2);
      p.before = prev.owner;
      p.after = next.owner;
      out.free_points.push_back(p);
      if (p.width > opt.isolation * h) out.isolated = false;
    }
  }
  return out;
}

InterfaceGraph extract_interface(const DensityField& u, const Domain& D, const InterfaceOptions& opt) {
  InterfaceGraph g;
  g.h = u.disc->h();
  g.traces = traces_on_boundary(u, D, opt);
  const int N = u.N();
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      for (auto& line : chain(contour(u, D, i, j), g.h)) {
        Arc a{i, j, std::move(line)};
        if (a.length() >= g.h) g.arcs.push_back(std::move(a));
      }

  // arc ends: touching the boundary, or candidates for junctions
  struct End {
    int arc, end;
    Vec2 x;
  };
  std::vector<End> free_ends;
  for (std::size_t a = 0; a < g.arcs.size(); ++a) {
    const auto& pts = g.arcs[a].points;
    if (norm(pts.front() - pts.back()) < 1e-12 * g.h) continue;  // closed loop
    for (int e = 0; e < 2; ++e) {
      const Vec2 x = e == 0 ? pts.front() : pts.back();
      if (depth(D, x) <= opt.contact_radius * g.h) {
        const auto bp = D.project(x);
        g.contacts.push_back({bp.x, bp.normal, static_cast<int>(a), e});
      } else {
        free_ends.push_back({static_cast<int>(a), e, x});
      }
    }
  }
  const std::size_t m = free_ends.size();
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      if (norm(free_ends[a].x - free_ends[b].x) <= opt.junction_radius * g.h) parent[root(a)] = root(b);
  std::map<std::size_t, std::vector<std::size_t>> clusters;
  for (std::size_t a = 0; a < m; ++a) clusters[root(a)].push_back(a);
  for (const auto& [r, members] : clusters) {
    if (members.size() < 3) continue;
    Junction J;
    Vec2 c;
    for (std::size_t a : members) {
      c = c + free_ends[a].x;
      J.arcs.push_back(free_ends[a].arc);
      J.ends.push_back(free_ends[a].end);
    }
    J.x = c / static_cast<double>(members.size());
    g.junctions.push_back(J);
  }
  return g;
}

TangentFit end_tangent(const Arc& arc, int end, int nodes, int skip) {
  std::vector<Vec2> pts = arc.points;
  if (end == 1) std::reverse(pts.begin(), pts.end());
  TangentFit t;
  if (pts.size() < 2) throw Error("interface", "arc has fewer than two nodes");
  std::size_t first = static_cast<std::size_t>(skip);
  if (first + 2 > pts.size()) {
    first = 0;
    t.reduced = true;
  }
  const std::size_t last = std::min(pts.size(), first + static_cast<std::size_t>(nodes));
  if (last - first < static_cast<std::size_t>(nodes)) t.reduced = true;
  t.nodes = static_cast<int>(last - first);
  Vec2 mean;
  for (std::size_t k = first; k < last; ++k) mean = mean + pts[k];
  mean = mean / static_cast<double>(t.nodes);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = first; k < last; ++k) {
    const Vec2 d = pts[k] - mean;
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
  }
  // principal axis of the scatter
  const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  Vec2 dir = polar(1.0, angle);
  if (dot(dir, pts[last - 1] - pts[first]) < 0.0) dir = -dir;
  t.direction = dir;
  return t;
}

JunctionAngles junction_angles(const InterfaceGraph& g, const Junction& J) {
  const std::size_t k = J.arcs.size();
  if (k < 3) throw Error("interface", "junction needs at least three arcs");
  JunctionAngles out;
  std::vector<double> dirs;
  for (std::size_t a = 0; a < k; ++a) {
    const auto t = end_tangent(g.arcs[J.arcs[a]], J.ends[a]);
    out.reduced = out.reduced || t.reduced;
    dirs.push_back(std::atan2(t.direction.y, t.direction.x));
  }
  std::sort(dirs.begin(), dirs.end());
  for (std::size_t a = 0; a < k; ++a) {
    double d = (a + 1 < k ? dirs[a + 1] : dirs[0] + 2 * pi) - dirs[a];
    out.angles.push_back(d * 180.0 / pi);
    out.deviation = std::max(out.deviation, std::abs(d * 180.0 / pi - 360.0 / k));
  }
  return out;
}

ContactAngle boundary_contact_angle(const InterfaceGraph& g, const Contact& c) {
  const auto t = end_tangent(g.arcs[c.arc], c.end, 8, 3);
  ContactAngle out;
  out.reduced = t.reduced;
  out.degrees = std::acos(std::min(1.0, std::abs(dot(t.direction, c.normal)))) * 180.0 / pi;
  return out;
}

CleanupResult cleanup_check(const DensityField& u, const Domain& D, Vec2 x0, double r) {
  const Discretization& d = *u.disc;
  const double h = d.h();
  if (r < 8.0 * h * (1.0 - 1e-12)) throw Error("interface", "clean-up radius below 8h");
  const int N = u.N();
  CleanupResult out;
  out.threshold = 3.0 * h * lipschitz_estimate(u);
  out.sup.assign(N, 0.0);
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (norm(d.position(k) - x0) > r) continue;
    for (int i = 0; i < N; ++i) out.sup[i] = std::max(out.sup[i], u.u[i][k]);
  }
  for (int i = 0; i < N; ++i) {
    if (out.sup[i] > out.threshold) ++out.active;
    if (out.dominant < 0 || out.sup[i] > out.sup[out.dominant]) out.dominant = i;
  }
  out.linear_constant = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const Vec2 x = d.position(k);
    if (norm(x - x0) > 0.5 * r) continue;
    const double dist = depth(D, x);
    if (dist < h) continue;
    out.linear_constant = std::min(out.linear_constant, u.u[out.dominant][k] / dist);
  }
  return out;
}

std::string interface_svg(const DensityField& u, const Domain& D, const InterfaceGraph& g) {
  static const char* palette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
                                  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  const Discretization& d = *u.disc;
  const Grid& grid = d.grid;
  const Vec2 lo = D.lower(), hi = D.upper();
  const double pad = 0.05 * std::max(hi.x - lo.x, hi.y - lo.y);
  std::ostringstream out;
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << lo.x - pad << ' ' << -(hi.y + pad) << ' '
      << hi.x - lo.x + 2 * pad << ' ' << hi.y - lo.y + 2 * pad << "\" width=\"600\" height=\""
      << static_cast<int>(600 * (hi.y - lo.y + 2 * pad) / (hi.x - lo.x + 2 * pad)) << "\">\n";
  out << "<g transform=\"scale(1,-1)\">\n";
  // one rectangle per run of equally owned nodes in a grid row
  for (int j = 0; j < grid.ny; ++j) {
    int i = 0;
    while (i < grid.nx) {
      auto owner = [&](int ii) {
        const int k = d.unknown[grid.index(ii, j)];
        if (k < 0) return -2;
        int best = -1;
        double v = 0.0;
        for (int c = 0; c < u.N(); ++c)
          if (u.u[c][k] > v) {
            v = u.u[c][k];
            best = c;
          }
        return best;
      };
      const int o = owner(i);
      int e = i + 1;
      while (e < grid.nx && owner(e) == o) ++e;
      if (o >= 0) {
        const Vec2 p = grid.node(i, j);
        out << "<rect x=\"" << p.x - 0.5 * grid.h << "\" y=\"" << p.y - 0.5 * grid.h << "\" width=\"" << (e - i) * grid.h
            << "\" height=\"" << grid.h << "\" fill=\"" << palette[o % 10] << "\"/>\n";
      }
      i = e;
    }
  }
  const double stroke = 0.004 * std::max(hi.x - lo.x, hi.y - lo.y);
  out << "<polygon fill=\"none\" stroke=\"#333\" stroke-width=\"" << stroke << "\" points=\"";
  for (const auto& b : D.boundary_polyline(0.01)) out << b.x.x << ',' << b.x.y << ' ';
  out << "\"/>\n";
  for (const auto& a : g.arcs) {
    out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"" << stroke << "\" points=\"";
    for (const auto& p : a.points) out << p.x << ',' << p.y << ' ';
    out << "\"/>\n";
  }
  for (const auto& J : g.junctions)
    out << "<circle cx=\"" << J.x.x << "\" cy=\"" << J.x.y << "\" r=\"" << 4 * stroke << "\" fill=\"red\"/>\n";
  for (const auto& c : g.contacts)
    out << "<circle cx=\"" << c.x.x << "\" cy=\"" << c.x.y << "\" r=\"" << 4 * stroke << "\" fill=\"blue\"/>\n";
  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace fblab
