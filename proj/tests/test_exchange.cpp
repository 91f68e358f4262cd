#include "vadose/exchange.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

using namespace vadose;

TEST_CASE("reduce returns the fixed-tree result bit for bit on every worker") {
  const int parts = 4;
  std::vector<double> inputs{0.1, -2.5, 3.7, 1e-9};
  std::vector<double> max_seen(parts), sum_seen(parts);
  run_spmd(parts, [&](Comm& c) {
    max_seen[c.part()] = c.reduce(Reduce::Max, inputs[c.part()]);
    sum_seen[c.part()] = c.reduce(Reduce::Sum, inputs[c.part()]);
  });
  const double max_ref = detail::tree_combine(Reduce::Max, inputs);
  const double sum_ref = detail::tree_combine(Reduce::Sum, inputs);
  CHECK(max_ref == 3.7);
  for (int p = 0; p < parts; ++p) {
    CHECK(max_seen[p] == max_ref);
    CHECK(sum_seen[p] == sum_ref);
  }
}

TEST_CASE("tree combination matches a serial sum closely and max exactly") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int n : {1, 2, 3, 5, 8, 13}) {
    std::vector<double> xs(n);
    double serial = 0, top = -1e300;
    for (auto& x : xs) {
      x = val(rng);
      serial += x;
      top = std::max(top, x);
    }
    CHECK(detail::tree_combine(Reduce::Sum, xs) ==
          doctest::Approx(serial).epsilon(1e-14));
    CHECK(detail::tree_combine(Reduce::Max, xs) == top);
  }
}

TEST_CASE("repeated reductions with the same inputs are bitwise stable") {
  const int parts = 3;
  std::vector<double> first(parts), second(parts), third(parts);
  run_spmd(parts, [&](Comm& c) {
    const double x = std::sin(1.0 + c.part());
    first[c.part()] = c.reduce(Reduce::Sum, x);
    second[c.part()] = c.reduce(Reduce::Sum, x);
    third[c.part()] = c.reduce(Reduce::Sum, x);
  });
  for (int p = 0; p < parts; ++p) {
    CHECK(first[p] == second[p]);
    CHECK(second[p] == third[p]);
  }
}

TEST_CASE("halo exchange delivers every owner's current value") {
  GridSpec spec;
  spec.nx = spec.ny = spec.nz = 8;
  const Grid g = build_grid(spec);
  const auto map = partition_simple(g, {2, 2, 2});
  const auto topo = halo_topology(g, map);

  std::vector<int> bad(map.parts, 0);
  run_spmd(map.parts, [&](Comm& c) {
    const auto& pt = topo.parts[c.part()];
    std::vector<double> field(pt.n_own + pt.n_halo, -1.0);
    for (int l = 0; l < pt.n_own; ++l) field[l] = double(pt.owned_global[l]);
    c.exchange(field, pt);
    for (int l = 0; l < pt.n_own; ++l) {
      const auto cc = g.decode(pt.owned_global[l]);
      for (int d = 0; d < kDirs; ++d) {
        auto nc = cc;
        nc[d / 2] += d % 2 ? 1 : -1;
        if (nc[d / 2] < 0 || nc[d / 2] >= 8) continue;
        if (field[pt.nbr[d][l]] != double(g.encode(nc[0], nc[1], nc[2])))
          ++bad[c.part()];
      }
    }
  });
  for (int p = 0; p < map.parts; ++p) CHECK(bad[p] == 0);
}

TEST_CASE("halo exchange tracks changing owned values") {
  GridSpec spec;
  spec.nx = 16;
  const Grid g = build_grid(spec);
  const auto map = partition_simple(g, {4, 1, 1});
  const auto topo = halo_topology(g, map);
  std::vector<int> bad(map.parts, 0);
  run_spmd(map.parts, [&](Comm& c) {
    const auto& pt = topo.parts[c.part()];
    std::vector<double> field(pt.n_own + pt.n_halo, 0.0);
    for (int round = 0; round < 3; ++round) {
      for (int l = 0; l < pt.n_own; ++l)
        field[l] = 100.0 * round + double(pt.owned_global[l]);
      c.exchange(field, pt);
      for (int l = 0; l < pt.n_own; ++l)
        for (int d = 0; d < 2; ++d) {
          const auto idx = pt.nbr[d][l];
          if (idx < 0) continue;
          const double expect = 100.0 * round +
                                double(pt.owned_global[l]) + (d ? 1 : -1);
          if (field[idx] != expect) ++bad[c.part()];
        }
    }
  });
  for (int p = 0; p < map.parts; ++p) CHECK(bad[p] == 0);
}

TEST_CASE("collective counters agree across workers") {
  std::vector<long> reduces(3), exchanges(3);
  run_spmd(3, [&](Comm& c) {
    c.reduce(Reduce::Sum, 1.0);
    c.reduce(Reduce::Max, 2.0);
    c.check_uniform_collectives();
    reduces[c.part()] = c.reduce_count();
    exchanges[c.part()] = c.exchange_count();
  });
  for (int p = 0; p < 3; ++p) {
    CHECK(reduces[p] == 4);  // two payload reductions plus the check's two
    CHECK(exchanges[p] == 0);
  }
}

TEST_CASE("mismatched collective calls fail instead of deadlocking") {
  GridSpec spec;
  spec.nx = 4;
  const Grid g = build_grid(spec);
  const auto map = partition_simple(g, {2, 1, 1});
  const auto topo = halo_topology(g, map);
  CHECK_THROWS_AS(
      run_spmd(2,
               [&](Comm& c) {
                 if (c.part() == 0) {
                   c.reduce(Reduce::Sum, 1.0);
                 } else {
                   const auto& pt = topo.parts[1];
                   std::vector<double> f(pt.n_own + pt.n_halo, 0.0);
                   c.exchange(f, pt);
                 }
               },
               5.0),
      SyncError);
}

TEST_CASE("a worker that stops participating poisons the group quickly") {
  CHECK_THROWS_AS(run_spmd(2,
                           [&](Comm& c) {
                             if (c.part() == 0) return;  // skips the collective
                             c.reduce(Reduce::Sum, 1.0);
                           },
                           5.0),
                  SyncError);
}

TEST_CASE("worker exceptions surface as the root cause") {
  CHECK_THROWS_AS(run_spmd(2,
                           [&](Comm& c) {
                             if (c.part() == 1) throw InvalidInput("boom");
                             c.reduce(Reduce::Sum, 0.0);
                           },
                           5.0),
                  InvalidInput);
}

TEST_CASE("gather assembles the global field for every worker to read") {
  GridSpec spec;
  spec.nx = 6;
  spec.ny = 2;
  const Grid g = build_grid(spec);
  const auto map = partition_simple(g, {2, 2, 1});
  const auto topo = halo_topology(g, map);
  std::vector<double> global(g.cell_count(), -1.0);
  run_spmd(map.parts, [&](Comm& c) {
    const auto& pt = topo.parts[c.part()];
    std::vector<double> owned(pt.n_own);
    for (int l = 0; l < pt.n_own; ++l) owned[l] = 10.0 + double(pt.owned_global[l]);
    c.gather(owned, pt, global);
  });
  for (std::int64_t id = 0; id < g.cell_count(); ++id)
    CHECK(global[id] == 10.0 + double(id));
}
