#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <set>

#include "odebayes/sample/adapt.hpp"
#include "odebayes/sample/run.hpp"
#include "odebayes/sample/steps.hpp"
#include "testutil.hpp"

using namespace odebayes;
using testutil::CliffTarget;
using testutil::FlatTarget;
using testutil::GaussianTarget;
using testutil::WallTarget;

namespace {

/// 1-D target with a table of prescribed log densities around integers,
/// used to pin acceptance probabilities exactly.
class TableTarget : public Target {
 public:
  explicit TableTarget(std::function<double(double)> f) : f_(std::move(f)) {}
  int dim() const override { return 1; }
  EvalRecord eval(std::span<const double> x) const override {
    EvalRecord rec;
    rec.value = f_(x[0]);
    rec.gradient.assign(1, 0.0);
    return rec;
  }

 private:
  std::function<double(double)> f_;
};

class LogNormalWalkProposal : public Proposal {
 public:
  explicit LogNormalWalkProposal(double s) : s_(s) {}
  std::vector<double> sample(std::span<const double> theta, Rng& rng) const override {
    return {theta[0] * std::exp(s_ * rng.normal())};
  }
  double log_q(std::span<const double> to, std::span<const double> from) const override {
    if (to[0] <= 0.0 || from[0] <= 0.0) return -std::numeric_limits<double>::infinity();
    const double z = (std::log(to[0]) - std::log(from[0])) / s_;
    return -0.5 * z * z - std::log(s_) - std::log(to[0]);
  }

 private:
  double s_;
};

}  // namespace

TEST_CASE("rwm acceptance probabilities follow the density ratio") {
  // fixed proposal landscape: logpi(x) = 0 at 0, -log 2 elsewhere
  TableTarget equal([](double) { return 1.7; });
  Rng rng(1);
  std::vector<double> sigma = {0.5};
  double n_acc = 0;
  for (int i = 0; i < 200; ++i) {
    const auto r = rwm_step(equal, std::vector<double>{0.0}, 1.7, sigma, rng);
    CHECK(r.stats.accept_prob == 1.0);
    n_acc += 1;
  }

  TableTarget half([](double x) { return x == 0.0 ? 0.0 : -std::log(2.0); });
  for (int i = 0; i < 50; ++i) {
    const auto r = rwm_step(half, std::vector<double>{0.0}, 0.0, sigma, rng);
    CHECK(r.stats.accept_prob == doctest::Approx(0.5).epsilon(1e-12));
  }

  TableTarget wall([](double x) {
    return x == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  });
  for (int i = 0; i < 50; ++i) {
    const auto r = rwm_step(wall, std::vector<double>{0.0}, 0.0, sigma, rng);
    CHECK(r.stats.accept_prob == 0.0);
    CHECK(r.theta[0] == 0.0);  // stayed
  }
}

TEST_CASE("mh with a symmetric proposal reproduces rwm draw for draw") {
  GaussianTarget target(3);
  std::vector<double> sigma = {0.7, 0.7, 0.7};
  Rng rng_a(99, 5), rng_b(99, 5);
  std::vector<double> theta_a = {0.3, -0.2, 1.0}, theta_b = theta_a;
  double lp_a = target.eval_value(theta_a), lp_b = lp_a;
  GaussianWalkProposal prop(sigma);
  for (int i = 0; i < 500; ++i) {
    const auto a = rwm_step(target, theta_a, lp_a, sigma, rng_a);
    const auto b = mh_step(target, theta_b, lp_b, prop, rng_b);
    REQUIRE(a.theta == b.theta);
    CHECK(a.stats.accept_prob == b.stats.accept_prob);
    theta_a = a.theta;
    lp_a = a.logp;
    theta_b = b.theta;
    lp_b = b.logp;
  }
}

TEST_CASE("mh with a log-normal walk matches the analytic q-ratio on a flat target") {
  // alpha = min(1, theta'/theta) on a positive flat target
  TableTarget flat_pos([](double x) {
    return x > 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  });
  LogNormalWalkProposal prop(0.8);
  Rng rng(4);
  std::vector<double> theta = {1.0};
  for (int i = 0; i < 300; ++i) {
    Rng probe = rng;  // replay the same stream to predict the proposal
    const double proposed = theta[0] * std::exp(0.8 * probe.normal());
    const auto r = mh_step(flat_pos, theta, 0.0, prop, rng);
    const double expect = std::min(1.0, proposed / theta[0]);
    CHECK(r.stats.accept_prob == doctest::Approx(expect).epsilon(1e-12));
    theta = r.theta;
  }
}

TEST_CASE("irreversible proposals are never accepted") {
  class OneWayProposal : public Proposal {
   public:
    std::vector<double> sample(std::span<const double> theta, Rng& rng) const override {
      return {theta[0] + std::fabs(rng.normal()) + 0.1};  // only moves right
    }
    double log_q(std::span<const double> to, std::span<const double> from) const override {
      return to[0] > from[0] ? -1.0 : -std::numeric_limits<double>::infinity();
    }
  };
  FlatTarget flat(1);
  OneWayProposal prop;
  Rng rng(8);
  const auto r = mh_step(flat, std::vector<double>{0.0}, 0.0, prop, rng);
  CHECK(r.stats.accept_prob == 0.0);
  CHECK(r.theta[0] == 0.0);
}

TEST_CASE("leapfrog reproduces the hand-worked step") {
  GaussianTarget target(1);
  PhasePoint z;
  z.theta = {1.0};
  z.r = {0.0};
  const auto rec = target.eval(z.theta);
  z.logp = rec.value;
  z.grad = rec.gradient;
  const std::vector<double> mass = {1.0};
  const auto z1 = leapfrog(target, z, 0.1, mass);
  CHECK(z1.theta[0] == doctest::Approx(0.995).epsilon(1e-15));
  CHECK(z1.r[0] == doctest::Approx(-0.09975).epsilon(1e-12));
}

TEST_CASE("leapfrog is time-reversible and epsilon=0 is the identity") {
  GaussianTarget target({0.4, -1.0}, {1.3, 0.6});
  const std::vector<double> mass = {0.8, 2.0};
  PhasePoint z;
  z.theta = {0.3, 0.9};
  z.r = {-0.5, 0.25};
  const auto rec = target.eval(z.theta);
  z.logp = rec.value;
  z.grad = rec.gradient;

  auto fwd = z;
  for (int i = 0; i < 8; ++i) fwd = leapfrog(target, fwd, 0.15, mass);
  auto back = fwd;
  back.r = {-fwd.r[0], -fwd.r[1]};
  for (int i = 0; i < 8; ++i) back = leapfrog(target, back, 0.15, mass);
  CHECK(back.theta[0] == doctest::Approx(z.theta[0]).epsilon(1e-12));
  CHECK(back.theta[1] == doctest::Approx(z.theta[1]).epsilon(1e-12));
  CHECK(-back.r[0] == doctest::Approx(z.r[0]).epsilon(1e-12));
  CHECK(-back.r[1] == doctest::Approx(z.r[1]).epsilon(1e-12));

  const auto same = leapfrog(target, z, 0.0, mass);
  CHECK(same.theta == z.theta);
  CHECK(same.r == z.r);
}

TEST_CASE("leapfrog preserves phase-space volume") {
  GaussianTarget target({0.0, 0.0}, {1.0, 0.5});
  const std::vector<double> mass = {1.0, 1.5};
  const double eps = 0.2, h = 1e-6;

  auto flow = [&](std::span<const double> in) {
    PhasePoint z;
    z.theta = {in[0], in[1]};
    z.r = {in[2], in[3]};
    const auto rec = target.eval(z.theta);
    z.logp = rec.value;
    z.grad = rec.gradient;
    const auto z1 = leapfrog(target, z, eps, mass);
    return std::array<double, 4>{z1.theta[0], z1.theta[1], z1.r[0], z1.r[1]};
  };

  std::vector<double> x0 = {0.3, -0.7, 0.4, 0.9};
  double jac[4][4];
  for (int j = 0; j < 4; ++j) {
    auto up = x0, dn = x0;
    up[j] += h;
    dn[j] -= h;
    const auto fu = flow(up), fd = flow(dn);
    for (int i = 0; i < 4; ++i) jac[i][j] = (fu[i] - fd[i]) / (2.0 * h);
  }
  // direct 4x4 determinant by cofactor over the first row
  auto det3 = [&](int r0, int r1, int r2, int c0, int c1, int c2) {
    return jac[r0][c0] * (jac[r1][c1] * jac[r2][c2] - jac[r1][c2] * jac[r2][c1]) -
           jac[r0][c1] * (jac[r1][c0] * jac[r2][c2] - jac[r1][c2] * jac[r2][c0]) +
           jac[r0][c2] * (jac[r1][c0] * jac[r2][c1] - jac[r1][c1] * jac[r2][c0]);
  };
  const double det = jac[0][0] * det3(1, 2, 3, 1, 2, 3) - jac[0][1] * det3(1, 2, 3, 0, 2, 3) +
                     jac[0][2] * det3(1, 2, 3, 0, 1, 3) - jac[0][3] * det3(1, 2, 3, 0, 1, 2);
  CHECK(std::fabs(std::fabs(det) - 1.0) < 1e-6);
}

TEST_CASE("hmc accepts nearly always in the stable step regime") {
  GaussianTarget target(1);
  const std::vector<double> mass = {1.0};
  Rng rng(21);
  PhasePoint z;
  z.theta = {0.0};
  const auto rec = target.eval(z.theta);
  z.logp = rec.value;
  z.grad = rec.gradient;

  long accepted = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto res = hmc_step(target, z, 0.5, 16, mass, 1000.0, rng);
    if (res.theta[0] != z.theta[0]) ++accepted;
    z.theta = res.theta;
    z.logp = res.logp;
    z.grad = res.grad;
    CHECK(!res.stats.divergent);
  }
  CHECK(static_cast<double>(accepted) / n > 0.95);
}

TEST_CASE("hmc flags a wall as divergent and rejects") {
  WallTarget target(1.0);
  const std::vector<double> mass = {1.0};
  Rng rng(3);
  PhasePoint z;
  z.theta = {0.9};
  const auto rec = target.eval(z.theta);
  z.logp = rec.value;
  z.grad = rec.gradient;
  bool saw_divergence = false;
  for (int i = 0; i < 200 && !saw_divergence; ++i) {
    const auto res = hmc_step(target, z, 0.4, 8, mass, 1000.0, rng);
    if (res.stats.divergent) {
      saw_divergence = true;
      CHECK(res.theta[0] == z.theta[0]);  // rejected back to the start
    }
  }
  CHECK(saw_divergence);
}

TEST_CASE("nuts varies its leapfrog count across draws") {
  GaussianTarget target(1);
  const std::vector<double> mass = {1.0};
  Rng rng(17);
  PhasePoint z;
  z.theta = {0.2};
  auto rec = target.eval(z.theta);
  z.logp = rec.value;
  z.grad = rec.gradient;

  std::set<long> counts;
  for (int i = 0; i < 1000; ++i) {
    const auto res = nuts_step(target, z, 0.9, mass, 10, 1000.0, rng);
    counts.insert(res.stats.n_leapfrog);
    z.theta = res.theta;
    z.logp = res.logp;
    z.grad = res.grad;
  }
  CHECK(counts.size() > 1);
}

TEST_CASE("nuts on a flat plateau doubles to the depth cap") {
  FlatTarget target(2);
  const std::vector<double> mass = {1.0, 1.0};
  Rng rng(9);
  PhasePoint z;
  z.theta = {0.0, 0.0};
  const auto rec = target.eval(z.theta);
  z.logp = rec.value;
  z.grad = rec.gradient;
  const auto res = nuts_step(target, z, 0.3, mass, 6, 1000.0, rng);
  CHECK(res.stats.tree_depth == 6);
  CHECK(res.stats.n_leapfrog == (1 << 6) - 1);
  CHECK(!res.stats.divergent);
}

TEST_CASE("nuts flags cliff crossings and returns a pre-cliff state") {
  CliffTarget target(1.0, 2000.0);
  const std::vector<double> mass = {1.0};
  Rng rng(12);
  PhasePoint z;
  z.theta = {0.0};
  const auto rec = target.eval(z.theta);
  z.logp = rec.value;
  z.grad = rec.gradient;
  bool saw = false;
  for (int i = 0; i < 100; ++i) {
    const auto res = nuts_step(target, z, 0.5, mass, 8, 1000.0, rng);
    if (res.stats.divergent) {
      saw = true;
      CHECK(res.theta[0] < 1.0);
    }
    z.theta = res.theta;
    z.logp = res.logp;
    z.grad = res.grad;
  }
  CHECK(saw);
}

TEST_CASE("run_chains is bitwise deterministic") {
  GaussianTarget target(2);
  SamplerConfig cfg;
  cfg.n_chains = 4;
  cfg.n_warmup = 50;
  cfg.n_draws = 50;
  cfg.seed = 314;
  const auto a = run_chains(target, cfg);
  const auto b = run_chains(target, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    REQUIRE(a[c].draws_unconstrained.rows() == b[c].draws_unconstrained.rows());
    const auto fa = a[c].draws_unconstrained.flat();
    const auto fb = b[c].draws_unconstrained.flat();
    for (std::size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == fb[i]);
  }
}

TEST_CASE("run_chains mh equals rwm under identical streams") {
  GaussianTarget target(2);
  SamplerConfig cfg;
  cfg.n_chains = 2;
  cfg.n_warmup = 100;
  cfg.n_draws = 100;
  cfg.seed = 7;
  cfg.algorithm = Algorithm::rwm;
  const auto a = run_chains(target, cfg);
  cfg.algorithm = Algorithm::mh;
  const auto b = run_chains(target, cfg);
  for (std::size_t c = 0; c < a.size(); ++c) {
    const auto fa = a[c].draws_unconstrained.flat();
    const auto fb = b[c].draws_unconstrained.flat();
    REQUIRE(fa.size() == fb.size());
    for (std::size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == fb[i]);
  }
}

TEST_CASE("init_points redraw until finite and give up eventually") {
  GaussianTarget gauss(3);
  SamplerConfig cfg;
  cfg.n_chains = 4;
  const auto pts = init_points(gauss, cfg);
  CHECK(pts.size() == 4);
  for (const auto& p : pts)
    for (double x : p) CHECK((x >= -2.0 && x <= 2.0));
  CHECK(pts[0] != pts[1]);

  // a target finite only on a sliver that [-2,2]^1 rarely hits
  class SliverTarget : public Target {
   public:
    int dim() const override { return 1; }
    EvalRecord eval(std::span<const double> x) const override {
      EvalRecord rec;
      rec.gradient.assign(1, 0.0);
      rec.value = (x[0] > 1.9995 && x[0] < 2.0)
                      ? 0.0
                      : -std::numeric_limits<double>::infinity();
      return rec;
    }
  };
  SliverTarget sliver;
  Rng rng(1);
  CHECK_THROWS_AS(init_point(sliver, rng), InitFailure);
}

TEST_CASE("warmup schedule keeps phase boundaries ordered") {
  const auto s = WarmupSchedule::build(1000, true);
  CHECK(s.init_end == 150);
  CHECK(s.term_start == 900);
  REQUIRE(!s.window_ends.empty());
  int prev = s.init_end;
  for (int e : s.window_ends) {
    CHECK(e > prev);
    prev = e;
  }
  CHECK(s.window_ends.back() == 900);

  const auto tiny = WarmupSchedule::build(20, true);
  CHECK(tiny.window_ends.empty());
}

TEST_CASE("sampler config validation") {
  SamplerConfig cfg;
  cfg.n_draws = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.target_accept = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.rwm_sigma = {1.0, -1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
