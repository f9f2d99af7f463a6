#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "safempc/cbf_filter.hpp"
#include "safempc/qp_solver.hpp"
#include "safempc/scenario.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace safempc;
using namespace safempc::testing;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

ControlVec vec(std::initializer_list<double> v) {
  ControlVec u(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) u[i++] = e;
  return u;
}

StateVec mirror(const StateVec& x) {
  StateVec y = x;
  y[0] = -x[0];
  y[2] = kPi - x[2];
  y[3] = -x[3];
  y[5] = -x[5];
  return y;
}

double value(const LinearCbfConstraint& c, const ControlVec& u) { return c.a.dot(u) - c.b; }

}  // namespace

TEST_CASE("solve_single_halfspace") {
  CHECK(solve_single_halfspace(vec({2.0}), vec({1.0}), 0.0)[0] == 2.0);
  CHECK(solve_single_halfspace(vec({-1.0}), vec({1.0}), 0.0)[0] == 0.0);
  const ControlVec u = solve_single_halfspace(vec({1.0, 1.0}), vec({0.0, 1.0}), 3.0);
  CHECK(u[0] == 1.0);
  CHECK(u[1] == Approx(3.0));
}

TEST_CASE("solve: trivial cases") {
  const QpSolution none = solve(QpProblem{vec({0.3, -2.0}), {}, {}});
  CHECK(none.status == QpStatus::kOptimal);
  CHECK(none.u_star == vec({0.3, -2.0}));
  CHECK(none.active_set.empty());

  const ControlVec a = vec({1.0, -2.0});
  const QpSolution one = solve(QpProblem{vec({0.0, 0.0}), {{a, 1.0}}, {}});
  CHECK(one.status == QpStatus::kOptimal);
  CHECK((one.u_star - solve_single_halfspace(vec({0.0, 0.0}), a, 1.0)).norm() < 1e-15);
  CHECK(one.active_set == std::vector<int>{0});
}

TEST_CASE("solve: box and one diagonal halfspace") {
  // min |u|^2, u0 in [1, 2], u0 + u1 >= 3. The symmetric point (1.5, 1.5) is
  // inside the box, so the bound does not bind.
  QpProblem p{vec({0.0, 0.0}), {{vec({1.0, 1.0}), 3.0}}, {Interval{1.0, 2.0}, Interval{}}};
  const QpSolution s = solve(p);
  REQUIRE(s.status == QpStatus::kOptimal);
  CHECK(s.u_star[0] == Approx(1.5).epsilon(1e-14));
  CHECK(s.u_star[1] == Approx(1.5).epsilon(1e-14));
  CHECK(s.active_set == std::vector<int>{0});

  const ControlBounds box{Interval{1.0, 2.0}, Interval{-5.0, 5.0}};
  const GridResult g = grid_search(p.u_ref, with_box(p.ineqs, box), box, 1e-3);
  REQUIRE(g.any_feasible);
  CHECK((s.u_star - p.u_ref).squaredNorm() <= g.best_sq_dist + 1e-12);
  CHECK((g.best - s.u_star).norm() < 2e-3);
}

TEST_CASE("solve: bound indices and infeasibility") {
  QpProblem p{vec({5.0, 0.0}), {}, {Interval{-1.0, 1.0}, Interval{-1.0, 1.0}}};
  const QpSolution s = solve(p);
  CHECK(s.u_star == vec({1.0, 0.0}));
  CHECK(s.active_set == std::vector<int>{1});  // upper bound of channel 0

  QpProblem bad{vec({0.0}), {{vec({1.0}), 2.0}}, {Interval{-1.0, 1.0}}};
  const QpSolution b = solve(bad);
  CHECK(b.status == QpStatus::kInfeasible);

  QpProblem clash{vec({0.0, 0.0}), {{vec({1.0, 0.0}), 1.0}, {vec({-1.0, 0.0}), 0.0}}, {}};
  CHECK(solve(clash).status == QpStatus::kInfeasible);
}

TEST_CASE("solve: feasible reference is returned exactly") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    QpProblem p;
    p.u_ref = vec({d(rng), d(rng)});
    for (int i = 0; i < 3; ++i) {
      const ControlVec a = vec({d(rng), d(rng)});
      p.ineqs.push_back({a, a.dot(p.u_ref) - std::abs(d(rng))});
    }
    p.bounds = {Interval{-2, 2}, Interval{-2, 2}};
    const QpSolution s = solve(p);
    CHECK(s.status == QpStatus::kOptimal);
    CHECK(s.u_star == p.u_ref);
  }
}

TEST_CASE("solve: equal candidates prefer the smaller active set") {
  // Two identical rows: the answer should cite only the first.
  QpProblem p{vec({0.0, 0.0}), {{vec({0.0, 1.0}), 1.0}, {vec({0.0, 1.0}), 1.0}}, {}};
  const QpSolution s = solve(p);
  CHECK(s.active_set == std::vector<int>{0});
}

TEST_CASE("solve: randomized grid oracle and KKT") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::uniform_int_distribution<int> count(0, 4);
  int optimal = 0;
  for (int t = 0; t < 200; ++t) {
    QpProblem p;
    p.u_ref = vec({2.0 * d(rng), 2.0 * d(rng)});
    const ControlBounds box{Interval{-1.0, 1.0}, Interval{-1.0, 1.0}};
    p.bounds = box;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      ControlVec a = vec({d(rng), d(rng)});
      if (a.norm() < 0.1) a = vec({1.0, 0.0});
      p.ineqs.push_back({a, 0.6 * d(rng)});
    }
    const QpSolution s = solve(p);
    const GridResult g = grid_search(p.u_ref, with_box(p.ineqs, box), box, 1e-3);
    if (s.status != QpStatus::kOptimal) {
      CHECK_FALSE(g.any_feasible);
      continue;
    }
    ++optimal;
    CHECK(satisfies(s.u_star, p.ineqs, 1e-9));
    CHECK(s.u_star[0] >= -1.0);
    CHECK(s.u_star[0] <= 1.0);
    CHECK(s.u_star[1] >= -1.0);
    CHECK(s.u_star[1] <= 1.0);
    if (g.any_feasible) CHECK((s.u_star - p.u_ref).squaredNorm() <= g.best_sq_dist + 1e-4);
    CHECK(kkt_residual(p, s) < 1e-8);
  }
  CHECK(optimal > 100);
}

TEST_CASE("dubins_hocbf_constraint") {
  CbfParams p{1.5, 1.0};
  const Obstacle obs{0.4, -0.3, 0.2};
  const double v = 1.3;
  const double dist = 0.7;

  SUBCASE("tangent heading") {
    StateVec x(3);
    x << obs.x + dist, obs.y, kPi / 2;
    const LinearCbfConstraint c = dubins_hocbf_constraint(x, obs, p, v);
    const double h = p.alpha * (dist * dist - obs.radius * obs.radius);
    CHECK(c.barrier == Approx(h).epsilon(1e-14));
    CHECK(c.a[0] == Approx(-2.0 * v * dist).epsilon(1e-14));
    CHECK(c.b == Approx(-2.0 * v * v - p.gamma * h).epsilon(1e-14));
    CHECK(c.margin == Approx(dist - obs.radius));
  }

  SUBCASE("radial heading has no control authority") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
      StateVec x(3);
      x << obs.x + d(rng), obs.y + d(rng), 0.0;
      x[2] = std::atan2(x[1] - obs.y, x[0] - obs.x) + (i % 2 == 0 ? 0.0 : kPi);
      CHECK(std::abs(dubins_hocbf_constraint(x, obs, p, v).a[0]) < 1e-12);
    }
  }

  SUBCASE("matches the Lie derivatives of h along the model") {
    DubinsParams dp;
    dp.speed = v;
    dp.obstacles = {obs};
    const DubinsCar car = dubins_model(dp);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
      StateVec x(3);
      x << d(rng), d(rng), 2.0 * d(rng);
      const LinearCbfConstraint c = dubins_hocbf_constraint(x, obs, p, v);
      auto h_at = [&](const StateVec& y) { return dubins_hocbf_constraint(y, obs, p, v).barrier; };
      StateVec grad(3);
      for (int j = 0; j < 3; ++j) {
        StateVec xp = x, xm = x;
        xp[j] += 1e-6;
        xm[j] -= 1e-6;
        grad[j] = (h_at(xp) - h_at(xm)) / 2e-6;
      }
      const double lf = grad.dot(car.drift(x));
      const double lg = grad.dot(car.actuation(x).col(0));
      CHECK(c.a[0] == Approx(lg).epsilon(1e-6));
      CHECK(-c.b - p.gamma * c.barrier == Approx(lf).epsilon(1e-6));
    }
  }

  SUBCASE("far away with large h, zero turn satisfies the constraint when predicted") {
    StateVec x(3);
    x << 5.0, 4.0, 0.3;
    const LinearCbfConstraint c = dubins_hocbf_constraint(x, obs, p, v);
    const double rs = (x[0] - obs.x) * std::cos(x[2]) + (x[1] - obs.y) * std::sin(x[2]);
    const bool predicted = p.gamma * c.barrier >= -2.0 * v * v - 2.0 * p.alpha * v * rs;
    CHECK(predicted == (0.0 >= c.b));
  }
}

TEST_CASE("quad_wall_constraints") {
  const QuadrotorParams qp;
  const CbfParams p{6.0, 1.0};

  SUBCASE("hover at the origin") {
    StateVec x = StateVec::Zero(6);
    x[2] = kPi / 2;
    const auto cs = quad_wall_constraints(x, qp, p);
    const double a = p.alpha;
    // Ceiling: F (-3a/m) >= -3 a g - a^3 w.
    CHECK(cs[0].a[0] == Approx(-3.0 * a));
    CHECK(cs[0].b == Approx(-3.0 * a * qp.gravity - a * a * a * qp.half_width));
    CHECK(cs[1].a[0] == Approx(3.0 * a));
    CHECK(cs[1].b == Approx(3.0 * a * qp.gravity - a * a * a * qp.half_width));
    const ControlVec hover = vec({qp.mass * qp.gravity, 0.0});
    for (const auto& c : cs) CHECK(value(c, hover) > 0.0);
  }

  SUBCASE("no torque term and margins from the wall distances") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> d(-0.85, 0.85);
    for (int i = 0; i < 100; ++i) {
      StateVec x(6);
      for (int j = 0; j < 6; ++j) x[j] = d(rng);
      const auto cs = quad_wall_constraints(x, qp, p);
      const auto dist = quad_wall_distances(x, qp);
      for (int w = 0; w < 4; ++w) {
        CHECK(cs[w].a[1] == 0.0);
        CHECK(cs[w].margin == dist[w]);
        CHECK(cs[w].label == w);
      }
    }
  }

  SUBCASE("mirror state swaps the side walls") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::uniform_real_distribution<double> f(0.0, 19.62);
    for (int i = 0; i < 200; ++i) {
      StateVec x(6);
      for (int j = 0; j < 6; ++j) x[j] = d(rng);
      x[2] += kPi / 2;
      const ControlVec u = vec({f(rng), 3.0 * d(rng)});
      const auto a = quad_wall_constraints(x, qp, p);
      const auto b = quad_wall_constraints(mirror(x), qp, p);
      CHECK(value(a[2], u) == Approx(value(b[3], u)).epsilon(1e-12));
      CHECK(value(a[3], u) == Approx(value(b[2], u)).epsilon(1e-12));
      CHECK(value(a[0], u) == Approx(value(b[0], u)).epsilon(1e-12));
    }
  }

  SUBCASE("C is the third derivative composition of each wall barrier") {
    // (d/dt + a)^3 b with thrust frozen, via finite differences of psi2 along the flow.
    const PlanarQuadrotor quad = quadrotor_model(qp);
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> d(-0.8, 0.8);
    for (int i = 0; i < 30; ++i) {
      StateVec x(6);
      for (int j = 0; j < 6; ++j) x[j] = d(rng);
      x[2] += kPi / 2;
      const ControlVec u = vec({9.0 + 5.0 * d(rng), 0.0});
      const double a = p.alpha;
      // psi2 = bdd + 2a bd + a^2 b, exact under the model for frozen F.
      auto psi2 = [&](const StateVec& y, int wall) {
        const StateVec ydot = quad.drift(y) + quad.actuation(y) * u;
        const double sign = (wall == 0 || wall == 2) ? -1.0 : 1.0;
        const int pos = (wall < 2) ? 1 : 0;
        const int vel = pos + 3;
        const double b = qp.half_width + sign * y[pos];
        const double bd = sign * y[vel];
        const double bdd = sign * ydot[vel];
        return bdd + 2.0 * a * bd + a * a * b;
      };
      const auto cs = quad_wall_constraints(x, qp, p);
      const StateVec xdot = quad.drift(x) + quad.actuation(x) * u;
      for (int w = 0; w < 4; ++w) {
        const double step = 1e-6;
        const double dpsi = (psi2(x + step * xdot, w) - psi2(x - step * xdot, w)) / (2.0 * step);
        CHECK(value(cs[w], u) == Approx(dpsi + a * psi2(x, w)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("filter") {
  SUBCASE("feasible reference is untouched") {
    LinearCbfConstraint c;
    c.a = vec({1.0});
    c.b = -1.0;
    const FilterResult r = filter(vec({0.25}), std::span(&c, 1), {Interval{-2, 2}});
    CHECK(r.u == vec({0.25}));
    CHECK_FALSE(r.intervened);
    CHECK(r.optimal);
  }

  SUBCASE("single violated Dubins constraint equals the projection") {
    DubinsParams dp;
    dp.obstacles = {{0.6, 0.05, 0.2}};
    StateVec x(3);
    x << 0.0, 0.0, 0.0;
    const auto cs = dubins_constraints(x, dp, CbfParams{});
    const ControlVec u_ref = vec({0.0});
    REQUIRE(value(cs[0], u_ref) < 0.0);
    const FilterResult r = filter(u_ref, cs, {});
    CHECK(r.u[0] == Approx(solve_single_halfspace(u_ref, cs[0].a, cs[0].b)[0]).epsilon(1e-14));
    CHECK(r.intervened);
  }

  SUBCASE("infeasible set falls back to the most violated row") {
    LinearCbfConstraint hi, lo;
    hi.a = vec({1.0});
    hi.b = 1.5;
    lo.a = vec({-1.0});
    lo.b = 0.0;
    const std::vector<LinearCbfConstraint> cs{hi, lo};
    const FilterResult r = filter(vec({0.0}), cs, {Interval{-1, 1}});
    CHECK_FALSE(r.optimal);
    CHECK(r.u[0] == 1.0);
  }
}

TEST_CASE("prioritized_filter") {
  const QuadrotorParams qp;
  const CbfParams p{6.0, 1.0};
  const ControlBounds none{Interval{}, Interval{}};

  SUBCASE("identity when every wall is satisfied") {
    StateVec x = StateVec::Zero(6);
    x[2] = kPi / 2;
    const ControlVec u = vec({qp.mass * qp.gravity, 0.3});
    const FilterResult r = prioritized_filter(x, u, qp, p, ControlBounds{qp.thrust, qp.torque});
    CHECK(r.u == u);
    CHECK_FALSE(r.intervened);
  }

  SUBCASE("one violated wall equals its projection") {
    // Rising fast toward the ceiling with full thrust.
    StateVec x = StateVec::Zero(6);
    x[1] = 0.6;
    x[2] = kPi / 2;
    x[4] = 1.0;
    const ControlVec u = vec({19.0, 0.0});
    const auto cs = quad_wall_constraints(x, qp, p);
    REQUIRE(value(cs[0], u) < 0.0);
    for (int w = 1; w < 4; ++w) REQUIRE(value(cs[w], u) > 0.0);
    const FilterResult r = prioritized_filter(x, u, qp, p, none);
    const ControlVec proj = solve_single_halfspace(u, cs[0].a, cs[0].b);
    CHECK((r.u - proj).norm() < 1e-12);
    CHECK(r.optimal);
  }

  SUBCASE("ties on the diagonal are ordered by wall id") {
    StateVec x = StateVec::Zero(6);
    x[0] = 0.5;
    x[1] = 0.5;
    const auto order = wall_priority(x, qp);
    CHECK(order[0] == Wall::kCeiling);
    CHECK(order[1] == Wall::kRight);
    CHECK(order[2] == Wall::kFloor);
    CHECK(order[3] == Wall::kLeft);
    x[0] = -0.5;
    x[1] = -0.5;
    const auto order2 = wall_priority(x, qp);
    CHECK(order2[0] == Wall::kFloor);
    CHECK(order2[1] == Wall::kLeft);
  }

  SUBCASE("closest wall first") {
    StateVec x = StateVec::Zero(6);
    x[0] = -0.7;
    x[1] = 0.2;
    const auto order = wall_priority(x, qp);
    CHECK(order[0] == Wall::kLeft);
    CHECK(order[1] == Wall::kCeiling);
    CHECK(order[2] == Wall::kFloor);
    CHECK(order[3] == Wall::kRight);
  }
}
