#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "odebayes/common/special.hpp"
#include "odebayes/io/csv.hpp"
#include "odebayes/model/dataset.hpp"
#include "odebayes/model/parameter_space.hpp"
#include "odebayes/model/simulate.hpp"
#include "odebayes/models/library.hpp"
#include "odebayes/ode/solver.hpp"
#include "testutil.hpp"

using namespace odebayes;

namespace {

ParameterSpace toy_like_space() {
  return make_model(ModelKind::toy).space;
}

}  // namespace

TEST_CASE("one-sided transform reference points") {
  ParameterSpace space({{"x", 0.0, std::numeric_limits<double>::infinity()}});
  CHECK(space.unconstrain(std::vector<double>{1.0})[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(space.unconstrain(std::vector<double>{4.04})[0] ==
        doctest::Approx(1.3962446919730587).epsilon(1e-12));
  auto [c, lj] = space.constrain_with_logjac(std::vector<double>{0.0});
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(lj == doctest::Approx(0.0).scale(1.0));
  auto [c2, lj2] = space.constrain_with_logjac(std::vector<double>{2.0});
  CHECK(c2[0] == doctest::Approx(std::exp(2.0)));
  CHECK(lj2 == doctest::Approx(2.0));
}

TEST_CASE("two-sided transform reference points") {
  ParameterSpace space({{"x", 0.0, 1.0}});
  CHECK(space.unconstrain(std::vector<double>{0.5})[0] == doctest::Approx(0.0).scale(1.0));
  auto [c, lj] = space.constrain_with_logjac(std::vector<double>{0.0});
  CHECK(c[0] == doctest::Approx(0.5));
  CHECK(lj == doctest::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("round-trip transform identity") {
  auto space = toy_like_space();
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> theta(space.n());
    for (int i = 0; i < space.n(); ++i) theta[i] = 0.01 + 8.0 * rng.uniform();
    const auto u = space.unconstrain(theta);
    const auto [back, lj] = space.constrain_with_logjac(u);
    for (int i = 0; i < space.n(); ++i)
      CHECK(back[i] == doctest::Approx(theta[i]).epsilon(1e-12));
    // one-sided bounds: log-jacobian is exactly the sum of log coordinates
    double direct = 0.0;
    for (double v : u) direct += v;
    CHECK(lj == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("out-of-bounds values are rejected") {
  ParameterSpace space({{"x", 0.0, std::numeric_limits<double>::infinity()}});
  CHECK_THROWS_AS(space.unconstrain(std::vector<double>{0.0}), OutOfBoundsError);
  CHECK_THROWS_AS(space.unconstrain(std::vector<double>{-1.0}), OutOfBoundsError);
  ParameterSpace unit({{"x", 0.0, 1.0}});
  CHECK_THROWS_AS(unit.unconstrain(std::vector<double>{1.0}), OutOfBoundsError);
}

TEST_CASE("prior log densities keep their constants") {
  CHECK(PriorDist::normal(0, 1).logpdf(0.0) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-12));
  CHECK(PriorDist::exponential(1.0).logpdf(2.0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(PriorDist::flat().logpdf(123.0) == 0.0);
  CHECK(PriorDist::uniform(0, 2).logpdf(1.0) == doctest::Approx(-std::log(2.0)));
  CHECK(PriorDist::uniform(0, 2).logpdf(3.0) == -std::numeric_limits<double>::infinity());
  // half-normal integrates to one over [0, inf): twice the normal density
  CHECK(PriorDist::half_normal(2.0).logpdf(0.5) ==
        doctest::Approx(std::log(2.0) + normal_logpdf(0.5, 0.0, 2.0)).epsilon(1e-12));
}

TEST_CASE("prior gradients match finite differences") {
  const std::vector<PriorDist> priors = {
      PriorDist::normal(0.3, 1.7), PriorDist::half_normal(2.0),
      PriorDist::log_normal(0.1, 0.8), PriorDist::exponential(1.4),
      PriorDist::uniform(0.0, 5.0), PriorDist::flat()};
  for (const auto& prior : priors) {
    for (double x : {0.4, 1.1, 2.9}) {
      const double h = 1e-6;
      const double fd = (prior.logpdf(x + h) - prior.logpdf(x - h)) / (2 * h);
      CHECK(prior.dlogpdf(x) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("log_prior sums per-parameter terms and respects support") {
  auto space = toy_like_space();
  std::vector<double> theta = {0.14, 0.12, 4.04, 1.24, 0.72, 0.18};
  double expect = 0.0;
  for (int i = 0; i < space.n(); ++i) expect += space.spec(i).prior.logpdf(theta[i]);
  CHECK(space.log_prior(theta) == doctest::Approx(expect).epsilon(1e-12));
  theta[2] = -1.0;
  CHECK(space.log_prior(theta) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("simulate_data is deterministic and collapses to the trajectory at sigma=0") {
  const auto model = make_model(ModelKind::toy);
  const std::vector<double> truth = {0.14, 0.12, 4.04, 1.24, 0.72, 0.18};
  std::vector<double> times;
  for (int i = 0; i <= 12; ++i) times.push_back(4.0 * i);

  const auto a = simulate_data(model, truth, times, 6, 99);
  const auto b = simulate_data(model, truth, times, 6, 99);
  REQUIRE(a.groups.size() == 6);
  CHECK(a.n_channels() == 2);
  CHECK(a.n_observations() == 156);
  for (std::size_t g = 0; g < a.groups.size(); ++g)
    for (std::size_t i = 0; i < times.size(); ++i)
      for (int ch = 0; ch < 2; ++ch)
        CHECK(a.groups[g].observations(ch, i) == b.groups[g].observations(ch, i));

  std::vector<double> noise_free_truth = truth;
  noise_free_truth[5] = 0.0;
  const auto c = simulate_data(model, noise_free_truth, times, 2, 1);
  const auto traj = solve(model.system, model.xi_from_theta(noise_free_truth), times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(c.groups[0].observations(0, i) == doctest::Approx(traj.states(i, 0)));
    CHECK(c.groups[1].observations(1, i) == doctest::Approx(traj.states(i, 1)));
  }
}

TEST_CASE("dataset csv round-trips") {
  const auto model = make_model(ModelKind::toy);
  const std::vector<double> truth = {0.2, 0.15, 3.0, 1.0, 0.5, 0.1};
  const std::vector<double> times = {0.0, 4.0, 8.0};
  const auto ds = simulate_data(model, truth, times, 3, 7);

  const auto path = std::filesystem::temp_directory_path() / "odebayes_test_data.csv";
  ds.to_csv(path.string());
  const auto back = Dataset::from_csv(path.string());
  REQUIRE(back.groups.size() == ds.groups.size());
  for (std::size_t g = 0; g < ds.groups.size(); ++g) {
    CHECK(back.groups[g].id == ds.groups[g].id);
    for (std::size_t i = 0; i < times.size(); ++i)
      for (int ch = 0; ch < 2; ++ch)
        CHECK(back.groups[g].observations(ch, i) == ds.groups[g].observations(ch, i));
  }
  std::filesystem::remove(path);
}

TEST_CASE("malformed csv rows name the line") {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "odebayes_bad.csv";
  {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    std::fputs("group,time,channel,value\nw1,0,0,1.5\nw1,zero,0,1.5\n", f);
    std::fclose(f);
  }
  try {
    Dataset::from_csv(path.string());
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("treatment schedules become right-continuous forcing") {
  namespace fs = std::filesystem;
  const auto data = fs::temp_directory_path() / "odebayes_sched_data.csv";
  const auto sched = fs::temp_directory_path() / "odebayes_sched.csv";
  {
    std::FILE* f = std::fopen(data.string().c_str(), "w");
    std::fputs("group,time,channel,value\nP1,0,0,10\nP1,1,0,9\n", f);
    std::fclose(f);
    f = std::fopen(sched.string().c_str(), "w");
    std::fputs("group,t_on,t_off\nP1,0,6\nP1,12,18\n", f);
    std::fclose(f);
  }
  auto ds = Dataset::from_csv(data.string());
  ds.apply_schedule_csv(sched.string());
  const auto& forcing = ds.groups[0].forcing;
  CHECK(forcing.value_at(-1.0) == 0.0);
  CHECK(forcing.value_at(0.0) == 1.0);
  CHECK(forcing.value_at(5.9) == 1.0);
  CHECK(forcing.value_at(6.0) == 0.0);
  CHECK(forcing.value_at(12.0) == 1.0);
  CHECK(forcing.value_at(18.0) == 0.0);
  fs::remove(data);
  fs::remove(sched);
}

TEST_CASE("toy rhs fixed points and positivity") {
  const auto model = make_model(ModelKind::toy);
  const std::vector<double> xi = {0.14, 0.12, 4.04, 1.0, 1.0};
  std::vector<double> dydt(2);

  model.system.rhs(0.0, std::vector<double>{0.0, 0.0}, xi, 0.0, dydt);
  CHECK(dydt[0] == 0.0);
  CHECK(dydt[1] == 0.0);

  // y1 + y2 = K: equilibrium, and the solution stays constant
  const std::vector<double> eq_xi = {0.14, 0.12, 4.04, 3.0, 1.04};
  model.system.rhs(0.0, std::vector<double>{3.0, 1.04}, eq_xi, 0.0, dydt);
  CHECK(dydt[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(dydt[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  const auto traj = solve(model.system, eq_xi, std::vector<double>{10.0, 48.0});
  CHECK(traj.states(1, 0) == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(traj.states(1, 1) == doctest::Approx(1.04).epsilon(1e-7));

  // below capacity both derivatives are positive
  model.system.rhs(0.0, std::vector<double>{1.0, 1.0}, xi, 0.0, dydt);
  CHECK(dydt[0] > 0.0);
  CHECK(dydt[1] > 0.0);
}

TEST_CASE("coral rhs fixed point and logistic reduction") {
  const auto model = make_model(ModelKind::coral);
  std::vector<double> dydt(2);
  const std::vector<double> xi = {0.5, 0.2, 0.3, 0.1};
  model.system.rhs(0.0, std::vector<double>{0.0, 0.0}, xi, 0.0, dydt);
  CHECK(dydt[0] == 0.0);
  CHECK(dydt[1] == 0.0);

  // beta = 0 and B0 = 0 reduces C to logistic growth with closed form
  ModelOverrides ov;
  ov.initial_conditions = {{"C0", 0.2}, {"B0", 0.0}};
  const auto reduced = make_model(ModelKind::coral, ov);
  const std::vector<double> xi_red = {0.5, 0.0, 0.3, 0.1};
  const std::vector<double> ts = {1.0, 3.0, 8.0};
  const auto traj = solve(reduced.system, xi_red, ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double a = 0.5, c0 = 0.2;
    const double expect = c0 * std::exp(a * ts[i]) / (1.0 + c0 * (std::exp(a * ts[i]) - 1.0));
    CHECK(traj.states(i, 0) == doctest::Approx(expect).epsilon(1e-6));
    CHECK(traj.states(i, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  }
}

TEST_CASE("prostate rhs hand-checked point and stem-cell monotonicity") {
  const auto model = make_model(ModelKind::prostate);
  std::vector<double> dydt(3);
  // S=1, D=1, P=0, p=0.5, lambda=1, alpha=0, rho=2, phi=1, T=0
  model.system.rhs(0.0, std::vector<double>{1.0, 1.0, 0.0},
                   std::vector<double>{0.5, 1.0, 0.0, 2.0, 1.0}, 0.0, dydt);
  CHECK(dydt[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(dydt[1] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(dydt[2] == doctest::Approx(2.0).epsilon(1e-14));

  // S + D = 0 guard
  model.system.rhs(0.0, std::vector<double>{0.0, 0.0, 1.0},
                   std::vector<double>{0.5, 1.0, 0.2, 2.0, 1.0}, 1.0, dydt);
  CHECK(dydt[0] == 0.0);
  CHECK(dydt[1] == 0.0);

  // dS/dt >= 0 whenever S, D >= 0
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const std::vector<double> y = {rng.uniform() * 5, rng.uniform() * 5, rng.uniform() * 20};
    const std::vector<double> xi = {rng.uniform(), rng.uniform(), rng.uniform(),
                                    rng.uniform(), rng.uniform()};
    model.system.rhs(0.0, y, xi, rng.coin() ? 1.0 : 0.0, dydt);
    CHECK(dydt[0] >= 0.0);
  }
}

TEST_CASE("analytic jacobians agree with the dual-number route") {
  Rng rng(11);
  for (auto kind : {ModelKind::toy, ModelKind::coral, ModelKind::prostate}) {
    const auto model = make_model(kind);
    const int dim = model.system.dim;
    const int n_xi = model.system.n_xi;
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> y(dim), xi(n_xi);
      for (auto& v : y) v = 0.05 + 3.0 * rng.uniform();
      for (auto& v : xi) v = 0.05 + rng.uniform();
      if (kind == ModelKind::prostate) xi[0] = 0.2 + 0.6 * rng.uniform();
      const double u = rng.coin() ? 1.0 : 0.0;

      Matrix jy_a, jxi_a, jy_d, jxi_d;
      jy_a = Matrix(dim, dim);
      jxi_a = Matrix(dim, n_xi);
      model.system.jacobians(0.0, y, xi, u, jy_a, jxi_a);
      jacobians_via_dual(model.system, 0.0, y, xi, u, jy_d, jxi_d);
      for (int i = 0; i < dim; ++i) {
        for (int k = 0; k < dim; ++k)
          CHECK(jy_a(i, k) == doctest::Approx(jy_d(i, k)).epsilon(1e-6));
        for (int j = 0; j < n_xi; ++j)
          CHECK(jxi_a(i, j) == doctest::Approx(jxi_d(i, j)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("toy sensitivities agree with central finite differences") {
  const auto model = make_model(ModelKind::toy);
  // parameter point from the published posterior means
  const std::vector<double> xi = {0.14, 0.12, 4.04, 1.24, 0.72};
  std::vector<double> times;
  for (int i = 1; i <= 12; ++i) times.push_back(4.0 * i);
  SolverConfig cfg;
  cfg.rel_tol = cfg.abs_tol = 1e-10;
  const auto traj = solve_with_sensitivities(model.system, xi, times, cfg);

  for (std::size_t j = 0; j < xi.size(); ++j) {
    const double h = 1e-5;
    auto up = xi, dn = xi;
    up[j] += h;
    dn[j] -= h;
    const auto tu = solve(model.system, up, times, cfg);
    const auto td = solve(model.system, dn, times, cfg);
    for (std::size_t i = 0; i < times.size(); ++i)
      for (int s = 0; s < 2; ++s) {
        const double fd = (tu.states(i, s) - td.states(i, s)) / (2.0 * h);
        const double got = traj.sensitivities[i](s, j);
        const double denom = std::max(std::fabs(fd), 1e-6);
        CHECK(std::fabs(got - fd) / denom < 1e-4);
      }
  }
}

TEST_CASE("model overrides are validated") {
  ModelOverrides bad_prior;
  bad_prior.priors = {{"nope", PriorDist::flat()}};
  CHECK_THROWS_AS(make_model(ModelKind::toy, bad_prior), UnknownOverrideError);
  ModelOverrides bad_ic;
  bad_ic.initial_conditions = {{"C0", 0.2}};
  CHECK_THROWS_AS(make_model(ModelKind::toy, bad_ic), UnknownOverrideError);
  ModelOverrides good;
  good.initial_conditions = {{"C0", 0.2}, {"B0", 0.05}};
  const auto coral = make_model(ModelKind::coral, good);
  CHECK(coral.space.n() == 5);
  CHECK(coral.system.y0.entries[0].value == 0.2);
  CHECK(coral.system.y0.entries[1].value == 0.05);
}
