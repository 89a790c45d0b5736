#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "fblab/linalg.hpp"
#include "fblab/solver.hpp"

namespace fblab {

// Segregated nonnegative components evaluated at arbitrary points.
class Field {
 public:
  virtual ~Field() = default;
  virtual int components() const = 0;
  virtual double value(int i, Vec2 x) const = 0;
  virtual Vec2 gradient(int i, Vec2 x) const = 0;
  virtual double lambda(int i) const = 0;
  // grid spacing, 0 for exact fields
  virtual double spacing() const { return 0.0; }
  virtual bool covers(Vec2) const { return true; }
};

struct AnalyticComponent {
  std::function<double(Vec2)> value;
  std::function<Vec2(Vec2)> gradient;
  double lambda = 0.0;
};

class AnalyticField : public Field {
 public:
  explicit AnalyticField(std::vector<AnalyticComponent> components) : parts_(std::move(components)) {}
  int components() const override { return static_cast<int>(parts_.size()); }
  double value(int i, Vec2 x) const override { return parts_[i].value(x); }
  Vec2 gradient(int i, Vec2 x) const override { return parts_[i].gradient(x); }
  double lambda(int i) const override { return parts_[i].lambda; }
  AnalyticField scaled(double c) const;

 private:
  std::vector<AnalyticComponent> parts_;
};

// r^gamma |sin(gamma (theta - angle0))| around origin, split into `sectors` consecutive sectors of
// opening pi / gamma starting at angle0, one component per sector.
AnalyticField homogeneous_sectors(Vec2 origin, double angle0, double gamma, int sectors);

// Bilinear interpolation of a solver field. Each component is first extended linearly past
// its zero set so that the extension vanishes where the solver placed the boundary or the
// interface inside a grid link; values are the positive part of the extension and gradients
// are interpolated from nodal differences of the extension.
class GridField : public Field {
 public:
  explicit GridField(const DensityField& field);
  int components() const override { return static_cast<int>(ext_.size()); }
  double value(int i, Vec2 x) const override;
  Vec2 gradient(int i, Vec2 x) const override;
  double lambda(int i) const override { return lambda_[i]; }
  double spacing() const override { return grid_.h; }
  bool covers(Vec2 x) const override;
  const Grid& grid() const { return grid_; }

 private:
  bool cell(Vec2 x, int& i0, int& j0, double& a, double& b) const;
  Grid grid_;
  std::vector<double> lambda_;
  std::vector<std::vector<double>> ext_;
  std::vector<std::vector<Vec2>> grad_;
};

}  // namespace fblab
