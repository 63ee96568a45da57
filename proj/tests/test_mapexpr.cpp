#include "doctest.h"

#include <cmath>

#include "stokes/mapexpr.hpp"
#include "stokes/rng.hpp"

using namespace stokes;

namespace {
Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

// random expression trees for the print/reparse round-trip property
ExprPtr random_tree(Rng& rng, int depth) {
  auto mk = [](ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); };
  ExprNode n;
  if (depth <= 0 || rng.uniform() < 0.25) {
    if (rng.uniform() < 0.5) {
      n.kind = ExprNode::Kind::Var;
      n.var = rng.uniform_int(0, 3);
    } else {
      n.kind = ExprNode::Kind::Number;
      n.number = rng.uniform(-3.0, 3.0);
    }
    return mk(std::move(n));
  }
  switch (rng.uniform_int(0, 9)) {
    case 0: n.kind = ExprNode::Kind::Add; break;
    case 1: n.kind = ExprNode::Kind::Sub; break;
    case 2: n.kind = ExprNode::Kind::Mul; break;
    case 3: n.kind = ExprNode::Kind::Div; break;
    case 4: n.kind = ExprNode::Kind::Pow; break;
    case 5: n.kind = ExprNode::Kind::Neg; break;
    case 6: n.kind = ExprNode::Kind::Sin; break;
    case 7: n.kind = ExprNode::Kind::Cos; break;
    case 8: n.kind = ExprNode::Kind::Exp; break;
    default: n.kind = ExprNode::Kind::Atan2; break;
  }
  n.a = random_tree(rng, depth - 1);
  if (n.kind == ExprNode::Kind::Neg && n.a->kind == ExprNode::Kind::Number) {
    // the parser folds "-literal" into the literal, so such a tree cannot
    // round-trip; use a variable instead
    ExprNode v;
    v.kind = ExprNode::Kind::Var;
    v.var = 0;
    n.a = mk(std::move(v));
  }
  if (n.kind == ExprNode::Kind::Pow) {
    n.exponent = rng.uniform_int(-3, 3);
  } else if (n.kind == ExprNode::Kind::Add || n.kind == ExprNode::Kind::Sub ||
             n.kind == ExprNode::Kind::Mul || n.kind == ExprNode::Kind::Div ||
             n.kind == ExprNode::Kind::Atan2) {
    n.b = random_tree(rng, depth - 1);
  }
  return mk(std::move(n));
}
}  // namespace

TEST_CASE("parsing and evaluation of basic maps") {
  auto id2 = MapExpr::parse("(x1, x2)", Domain::Disk2);
  CHECK(id2->in_dim() == 2);
  CHECK(id2->out_dim() == 2);
  const Vec y = (*id2)(vec2(0.3, -0.4));
  CHECK(y[0] == 0.3);
  CHECK(y[1] == -0.4);

  auto proj = MapExpr::parse("(x1, x2)", Domain::Sphere2);
  CHECK(proj->in_dim() == 3);
  const Vec z = (*proj)(vec3(0, 0, 1));
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);

  auto curve = MapExpr::parse("(cos(6.283185*x1), sin(6.283185*x1))", Domain::Curve);
  CHECK(curve->in_dim() == 1);
  CHECK(curve->out_dim() == 2);

  try {
    (*id2)(vec2(2, 0));
    FAIL("outside point accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainError);
  }
}

TEST_CASE("syntax errors carry line and column") {
  try {
    MapExpr::parse("(x1,");
    FAIL("no error on truncated map");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SyntaxError);
    CHECK(std::string(e.what()).find("column") != std::string::npos);
  }
  CHECK_THROWS_AS(MapExpr::parse("(x1 + )"), Error);
  CHECK_THROWS_AS(MapExpr::parse("(foo(x1))"), Error);
  CHECK_THROWS_AS(MapExpr::parse("(x1^x2)"), Error);
  CHECK_THROWS_AS(MapExpr::parse("x1, x2"), Error);
  CHECK_THROWS_AS(MapExpr::parse("(atan2(x1))"), Error);
  try {
    MapExpr::parse("(x3, x1)", Domain::Disk2);
    FAIL("variable beyond domain arity accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ArityError);
  }
}

TEST_CASE("pretty-printed expressions reparse to equal trees") {
  for (const char* src : {
           "(x1 + x2*x3, 1/(1 + x1^2))",
           "(sin(x1) - cos(x2)*sqrt(x3 + 4), exp(-x1))",
           "(atan2(x2, x1), x1^-2, -(x1 + x2))",
           "(-x1^2, (x1 + x2)^3, 2 - -3)",
           "(0.1*x1/(x2/x3))",
       }) {
    auto m = MapExpr::parse(src);
    auto again = MapExpr::parse(m->pretty());
    REQUIRE(m->out_dim() == again->out_dim());
    for (int c = 0; c < m->out_dim(); ++c)
      CHECK(expr_equal(m->components()[c], again->components()[c]));
  }

  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    ExprPtr t = random_tree(rng, 4);
    const std::string text = print_expression(t);
    CAPTURE(text);
    ExprPtr back = parse_expression(text);
    CHECK(expr_equal(t, back));
  }
}

TEST_CASE("unicode minus is accepted") {
  auto m = MapExpr::parse("(x1 \xE2\x88\x92 x2)");
  double x[2] = {5, 3}, y[1];
  m->eval_into(x, y);
  CHECK(y[0] == 2.0);
}

TEST_CASE("jacobians of reference maps") {
  JacobianStencil st;
  auto id2 = MapExpr::parse("(x1, x2)", Domain::Disk2);
  const Eigen::MatrixXd J = jacobian(*id2, vec2(0.2, 0.1), st);
  CHECK(std::abs(J(0, 0) - 1) < 1e-10);
  CHECK(std::abs(J(1, 1) - 1) < 1e-10);
  CHECK(std::abs(J(0, 1)) < 1e-10);
  CHECK(std::abs(J(1, 0)) < 1e-10);

  auto lin = MapExpr::parse("(2*x1, 3*x2)", Domain::Disk2);
  const Eigen::MatrixXd L = jacobian(*lin, vec2(0.1, -0.2), st);
  CHECK(std::abs(L(0, 0) - 2) < 1e-10);
  CHECK(std::abs(L(1, 1) - 3) < 1e-10);

  auto sq = MapExpr::parse("(x1^2, x2)", Domain::Disk2);
  const Eigen::MatrixXd S = jacobian(*sq, vec2(0.5, 0.0), st);
  CHECK(std::abs(S(0, 0) - 1.0) < 1e-8);
  CHECK(std::abs(S(1, 1) - 1.0) < 1e-10);
}

TEST_CASE("sphere-domain jacobians renormalize their increments") {
  // identity on the sphere: the tangential derivative along a unit tangent
  // direction u at x is exactly u
  auto id3 = MapExpr::parse("(x1, x2, x3)", Domain::Sphere2);
  const Vec x = vec3(0, 0, 1);
  Eigen::MatrixXd dirs(3, 2);
  dirs << 1, 0, 0, 1, 0, 0;
  const Eigen::MatrixXd J = jacobian_in_frame(*id3, x, dirs);
  CHECK(std::abs(J(0, 0) - 1) < 1e-9);
  CHECK(std::abs(J(1, 1) - 1) < 1e-9);
  CHECK(std::abs(J(2, 0)) < 1e-8);  // radial component killed by renormalization
}

TEST_CASE("one-sided stencil takes over at the disk boundary") {
  auto m = MapExpr::parse("(x1^2 + x2, x2)", Domain::Disk2);
  const Vec x = vec2(1.0, 0.0);
  Eigen::MatrixXd radial(2, 1);
  radial << 1, 0;
  const Eigen::MatrixXd J = jacobian_in_frame(*m, x, radial);
  CHECK(std::abs(J(0, 0) - 2.0) < 1e-6);
  CHECK(std::abs(J(1, 0)) < 1e-6);
}

TEST_CASE("equivariance defect flags non-odd maps") {
  const auto mesh = make_sphere_mesh(1, 256);
  auto ident = MapExpr::parse("(x1, x2)", Domain::Sphere1);
  CHECK(equivariance_defect(*ident, mesh) == 0.0);

  auto constant = MapExpr::parse("(1, 0)", Domain::Sphere1);
  CHECK(equivariance_defect(*constant, mesh) == doctest::Approx(2.0));

  auto odd3 = MapExpr::parse(
      "(cos(3*atan2(x2, x1)), sin(3*atan2(x2, x1)))", Domain::Sphere1);
  CHECK(equivariance_defect(*odd3, mesh) <= 1e-12);

  auto even2 = MapExpr::parse(
      "(cos(2*atan2(x2, x1)), sin(2*atan2(x2, x1)))", Domain::Sphere1);
  CHECK(equivariance_defect(*even2, mesh) > 1.0);
}

TEST_CASE("grid maps interpolate tabulated values") {
  auto mesh2 = std::make_shared<const SphereMesh>(make_sphere_mesh(2, 48));
  auto id3 = MapExpr::parse("(x1, x2, x3)", Domain::Sphere2);
  const GridMap g = GridMap::tabulate(*id3, mesh2, true);
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const Vec x = rng.sphere_point(3);
    const Vec y = g.eval_unchecked(x);
    CHECK(std::abs(y.norm() - 1.0) < 1e-12);  // renormalized
    CHECK((y - x).norm() < 3e-2);             // interpolation error at this level
  }

  auto mesh1 = std::make_shared<const SphereMesh>(make_sphere_mesh(1, 512));
  auto wind = MapExpr::parse(
      "(cos(2*atan2(x2, x1)), sin(2*atan2(x2, x1)))", Domain::Sphere1);
  const GridMap h = GridMap::tabulate(*wind, mesh1, true);
  for (int t = 0; t < 100; ++t) {
    const double a = rng.uniform(0, 2 * M_PI);
    const Vec x = vec2(std::cos(a), std::sin(a));
    const Vec y = h.eval_unchecked(x);
    const Vec want = vec2(std::cos(2 * a), std::sin(2 * a));
    CHECK((y - want).norm() < 2e-4);
  }

  // values must sit on the sphere when declared sphere-valued
  std::vector<double> bad(std::size_t(mesh1->vert_count()) * 2, 0.5);
  CHECK_THROWS_AS(GridMap(mesh1, 2, bad, true), Error);

  auto id2 = MapExpr::parse("(x1, x2)", Domain::Disk2);
  CHECK_THROWS_AS(GridMap::tabulate(*id2, mesh2, false), Error);
}

TEST_CASE("mollification smooths, preserves constants and oddness") {
  auto mesh = std::make_shared<const SphereMesh>(make_sphere_mesh(2, 48));

  auto constant = MapExpr::parse("(0.7)", Domain::Sphere2);
  const GridMap cg = GridMap::tabulate(*constant, mesh, false);
  const GridMap cm = mollify(cg, 6 * mesh->spacing);
  for (int v = 0; v < mesh->vert_count(); ++v)
    CHECK(cm.value(v, 0) == doctest::Approx(0.7).epsilon(1e-13));

  auto odd = MapExpr::parse("(x3, x1)", Domain::Sphere2);
  const GridMap og = GridMap::tabulate(*odd, mesh, false);
  const GridMap om = mollify(og, 5 * mesh->spacing);
  CHECK(equivariance_defect(om, *mesh) <= 1e-12);

  // sup distance bounded by the input's modulus of continuity at the width:
  // |x3| has Lipschitz constant 1 on the sphere
  auto lip = MapExpr::parse("(x3)", Domain::Sphere2);
  const GridMap lg = GridMap::tabulate(*lip, mesh, false);
  const double w = 4 * mesh->spacing;
  const GridMap lm = mollify(lg, w);
  double sup = 0;
  for (int v = 0; v < mesh->vert_count(); ++v)
    sup = std::max(sup, std::abs(lm.value(v, 0) - lg.value(v, 0)));
  CHECK(sup <= w);

  try {
    mollify(lg, 0.5 * mesh->spacing);
    FAIL("undersized width accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WidthTooSmall);
  }
}

TEST_CASE("projection to the sphere normalizes and reports near-zeros") {
  auto planar = MapExpr::parse("(x1, x2)", Domain::Sphere2);
  MapPtr p = project_to_sphere(
      std::shared_ptr<const SmoothMap>(planar), 0.1);
  const Vec y = p->eval_unchecked(vec3(0.6, 0.0, 0.8));
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(std::abs(Vec(p->eval_unchecked(vec3(0.3, 0.4, std::sqrt(0.75)))).norm() -
                 1.0) < 1e-14);
  try {
    p->eval_unchecked(vec3(0.01, 0.0, std::sqrt(1 - 0.0001)));
    FAIL("near-zero value projected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NearZeroValue);
    CHECK(e.witness().has_value());
  }
}
