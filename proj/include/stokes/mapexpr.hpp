#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stokes/geometry.hpp"

namespace stokes {

// ---------------------------------------------------------------------------
// expression trees
//
// Grammar (see the CLI help text for the user-facing form):
//   map    := "(" expr { "," expr } ")"
//   expr   := term { ("+"|"-") term }
//   term   := factor { ("*"|"/") factor }
//   factor := "-" factor | primary { "^" integer }
//   primary:= number | x1..x4 | func "(" expr ["," expr] ")" | "(" expr ")"
// Functions: sin, cos, sqrt, exp, atan2 (two arguments).

struct ExprNode {
  enum class Kind {
    Number, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Sqrt, Exp, Atan2
  };
  Kind kind;
  double number = 0.0;  // Kind::Number
  int var = 0;          // Kind::Var, zero-based
  int exponent = 0;     // Kind::Pow
  std::shared_ptr<const ExprNode> a, b;

  double eval(const double* x) const;
};
using ExprPtr = std::shared_ptr<const ExprNode>;

// Parse a single expression (no outer component parentheses).
ExprPtr parse_expression(const std::string& text);

// Minimal-parenthesis form; reparsing yields a structurally equal tree.
std::string print_expression(const ExprPtr& e);

bool expr_equal(const ExprPtr& a, const ExprPtr& b);

// ---------------------------------------------------------------------------
// smooth maps

class SmoothMap {
 public:
  virtual ~SmoothMap() = default;
  virtual int in_dim() const = 0;
  virtual int out_dim() const = 0;
  virtual Domain domain() const { return Domain::None; }
  // Raw evaluation; callers guarantee x is a valid point of the domain.
  virtual void eval_into(const double* x, double* y) const = 0;

  // Checked evaluation: validates membership in the declared domain.
  Vec operator()(const Vec& x) const;
  Vec eval_unchecked(const Vec& x) const;
};
using MapPtr = std::shared_ptr<const SmoothMap>;

class MapExpr final : public SmoothMap {
 public:
  // Throws SyntaxError (with line/column) or ArityError. When a domain is
  // declared, variable indices are capped by its ambient dimension and the
  // input arity is the ambient dimension; otherwise arity is the highest
  // variable used.
  static std::shared_ptr<const MapExpr> parse(const std::string& source,
                                              Domain dom = Domain::None);

  int in_dim() const override { return in_dim_; }
  int out_dim() const override { return int(components_.size()); }
  Domain domain() const override { return domain_; }
  void eval_into(const double* x, double* y) const override;

  const std::string& source() const { return source_; }
  const std::vector<ExprPtr>& components() const { return components_; }
  std::string pretty() const;

 private:
  MapExpr() = default;
  std::vector<ExprPtr> components_;
  std::string source_;
  Domain domain_ = Domain::None;
  int in_dim_ = 0;
};

class FunctionMap final : public SmoothMap {
 public:
  using Fn = std::function<void(const double*, double*)>;
  FunctionMap(int in, int out, Domain dom, Fn fn)
      : in_(in), out_(out), dom_(dom), fn_(std::move(fn)) {}
  int in_dim() const override { return in_; }
  int out_dim() const override { return out_; }
  Domain domain() const override { return dom_; }
  void eval_into(const double* x, double* y) const override { fn_(x, y); }

 private:
  int in_, out_;
  Domain dom_;
  Fn fn_;
};

inline MapPtr make_map(int in, int out, Domain dom, FunctionMap::Fn fn) {
  return std::make_shared<FunctionMap>(in, out, dom, std::move(fn));
}

// Map tabulated at the interpolation vertices of a sphere mesh (S^1 or S^2).
// S^1 interpolates linearly in arc length, S^2 barycentrically on the leaf
// triangulation.  Sphere-valued grids renormalize after interpolation.
class GridMap final : public SmoothMap {
 public:
  GridMap(std::shared_ptr<const SphereMesh> mesh, int out_dim,
          std::vector<double> vert_values, bool sphere_valued);
  static GridMap tabulate(const SmoothMap& m,
                          std::shared_ptr<const SphereMesh> mesh,
                          bool sphere_valued);

  int in_dim() const override { return mesh_->adim(); }
  int out_dim() const override { return out_; }
  Domain domain() const override;
  void eval_into(const double* x, double* y) const override;

  const SphereMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const SphereMesh>& mesh_ptr() const { return mesh_; }
  bool sphere_valued() const { return sphere_valued_; }
  const std::vector<double>& values() const { return values_; }
  double value(int vert, int comp) const {
    return values_[std::size_t(vert) * out_ + comp];
  }

 private:
  std::shared_ptr<const SphereMesh> mesh_;
  int out_ = 0;
  std::vector<double> values_;  // vertex-major
  bool sphere_valued_ = false;
};

// Convolution with the compactly supported kernel (1 - (d/width)^2)^2 over
// geodesic balls, mass-normalized per vertex.  width must be >= 2 spacings.
GridMap mollify(const GridMap& g, double width);

// x -> m(x)/|m(x)|; evaluation throws NearZeroValue below min_norm.
MapPtr project_to_sphere(MapPtr m, double min_norm = 0.1);

// max over mesh nodes of |m(-x) + m(x)|; zero iff m is odd on the nodes.
double equivariance_defect(const SmoothMap& m, const SphereMesh& mesh);

// ---------------------------------------------------------------------------
// finite-difference derivatives

struct JacobianStencil {
  double h = 1e-5;
  int order = 2;  // 2 or 4
};

// Directional derivatives along the (unit) columns of dirs.  When the map's
// domain is a sphere the shifted evaluation points are renormalized onto it;
// on ball-like domains a shifted point that exits the domain falls back to a
// second-order one-sided stencil.
Eigen::MatrixXd jacobian_in_frame(const SmoothMap& m, const Vec& x,
                                  const Eigen::MatrixXd& dirs,
                                  const JacobianStencil& st = {});

// Full ambient Jacobian (out_dim x in_dim).
Eigen::MatrixXd jacobian(const SmoothMap& m, const Vec& x,
                         const JacobianStencil& st = {});

}  // namespace stokes
