#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "fvlab/kernels.hpp"
#include "fvlab/random.hpp"

using namespace fvlab;
using namespace fvlab::kernels;

namespace {

struct Lanes {
  std::vector<double> x, noise, dt;
};

Lanes make_lanes(std::size_t n, std::uint64_t stream, double lo, double hi) {
  RngStream rng(77, stream);
  Lanes l;
  for (std::size_t i = 0; i < n; ++i) {
    l.x.push_back(lo + (hi - lo) * rng.uniform());
    l.noise.push_back(rng.normal());
    l.dt.push_back(1e-4 * rng.uniform());
  }
  return l;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

constexpr std::size_t kSizes[] = {0, 1, 3, 4, 5, 8, 13, 64, 1001};

} // namespace

TEST_CASE("generic table is always available") {
  REQUIRE(table_for(Isa::generic) != nullptr);
  CHECK(table_for(Isa::generic)->isa == Isa::generic);
  CHECK(isa_name(Isa::generic) == "generic");
  CHECK(isa_name(Isa::avx2) == "avx2");
}

TEST_CASE("generic kernels follow their formulas") {
  const KernelTable& g = *table_for(Isa::generic);
  double x[2] = {1.0, 2.0};
  const double noise[2] = {0.5, -1.0};
  const double dt[2] = {0.01, 0.04};
  g.bessel_step(x, noise, dt, 2, -2.5);
  CHECK(x[0] == 1.0 + (-2.5 / 1.0) * 0.01 + 0.1 * 0.5);
  CHECK(x[1] == 2.0 + (-2.5 / 2.0) * 0.04 + 0.2 * -1.0);

  double p[1] = {2.0};
  const double z0[1] = {0.0};
  const double h[1] = {0.12};
  g.power_step(p, z0, h, 1, 3.0, 2.0);
  CHECK(std::abs(p[0] - (2.0 - 0.12 / 12.0)) < 1e-15);

  double up[1] = {1.9};
  const double big[1] = {4.0};
  const double one[1] = {0.01};
  g.power_step(up, big, one, 1, 3.0, 2.0);
  CHECK(up[0] <= 2.0);

  double d[3];
  const double xs[3] = {0.1, 1.0, 10.0};
  g.quadratic_dt(xs, d, 3, 1e-3, 0.01);
  CHECK(d[0] == 0.01 * 0.01);
  CHECK(d[1] == 1e-3);
  CHECK(d[2] == 1e-3);
  g.linear_dt(xs, d, 3, 1e-3, 0.01);
  CHECK(d[0] == 1e-3);
  CHECK(g.min_value(xs, 3) == 0.1);
  CHECK(g.max_value(xs, 3) == 10.0);
  CHECK(std::abs(g.sum_squares(xs, 3) - 101.01) < 1e-12);
}

TEST_CASE("avx2 kernels match the scalar reference") {
  const KernelTable* v = table_for(Isa::avx2);
  if (v == nullptr) {
    MESSAGE("AVX2 not available on this machine; equivalence not exercised");
    return;
  }
  const KernelTable& g = *table_for(Isa::generic);
  for (const std::size_t n : kSizes) {
    CAPTURE(n);
    const Lanes l = make_lanes(n, n, 1e-3, 2.0);

    auto a = l.x, b = l.x;
    g.bessel_step(a.data(), l.noise.data(), l.dt.data(), n, -1.25);
    v->bessel_step(b.data(), l.noise.data(), l.dt.data(), n, -1.25);
    CHECK(bit_equal(a, b));

    a = l.x, b = l.x;
    g.sqbessel_step(a.data(), l.noise.data(), l.dt.data(), n, 2.0);
    v->sqbessel_step(b.data(), l.noise.data(), l.dt.data(), n, 2.0);
    CHECK(bit_equal(a, b));

    // Non-integer exponent: both evaluate std::pow per lane.
    a = l.x, b = l.x;
    g.power_step(a.data(), l.noise.data(), l.dt.data(), n, 2.5, 2.0);
    v->power_step(b.data(), l.noise.data(), l.dt.data(), n, 2.5, 2.0);
    CHECK(bit_equal(a, b));

    // Integer exponent: repeated products in the same order on both sides.
    a = l.x, b = l.x;
    g.power_step(a.data(), l.noise.data(), l.dt.data(), n, 3.0, 2.0);
    v->power_step(b.data(), l.noise.data(), l.dt.data(), n, 3.0, 2.0);
    CHECK(bit_equal(a, b));

    std::vector<double> da(n), db(n);
    g.quadratic_dt(l.x.data(), da.data(), n, 1e-3, 0.004);
    v->quadratic_dt(l.x.data(), db.data(), n, 1e-3, 0.004);
    CHECK(bit_equal(da, db));
    g.linear_dt(l.x.data(), da.data(), n, 1e-3, 0.01);
    v->linear_dt(l.x.data(), db.data(), n, 1e-3, 0.01);
    CHECK(bit_equal(da, db));
    g.power_dt(l.x.data(), da.data(), n, 1e-3, 0.01, 2.5);
    v->power_dt(l.x.data(), db.data(), n, 1e-3, 0.01, 2.5);
    CHECK(bit_equal(da, db));
    g.power_dt(l.x.data(), da.data(), n, 1e-3, 0.01, 3.0);
    v->power_dt(l.x.data(), db.data(), n, 1e-3, 0.01, 3.0);
    CHECK(bit_equal(da, db));

    if (n > 0) {
      CHECK(g.min_value(l.x.data(), n) == v->min_value(l.x.data(), n));
      CHECK(g.max_value(l.x.data(), n) == v->max_value(l.x.data(), n));
      const double sa = g.sum_squares(l.x.data(), n);
      const double sb = v->sum_squares(l.x.data(), n);
      CHECK(std::abs(sa - sb) <= 1e-14 * sa);
    }
  }
}

TEST_CASE("reflection keeps power-drift lanes at or below the barrier") {
  for (const Isa isa : {Isa::generic, Isa::avx2}) {
    const KernelTable* t = table_for(isa);
    if (t == nullptr) {
      continue;
    }
    Lanes l = make_lanes(1000, 5, 1.5, 2.0);
    for (auto& z : l.noise) {
      z = std::abs(z) * 5.0;
    }
    t->power_step(l.x.data(), l.noise.data(), l.dt.data(), l.x.size(), 3.0, 2.0);
    for (const double x : l.x) {
      CHECK(x <= 2.0);
    }
  }
}

TEST_CASE("active table is one of the compiled tables") {
  const KernelTable& a = active();
  CHECK((&a == table_for(Isa::generic) || &a == table_for(Isa::avx2)));
}
