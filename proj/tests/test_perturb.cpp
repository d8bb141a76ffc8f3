#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "regplace/perturb.hpp"
#include "regplace/place.hpp"

using namespace regplace;

namespace {

std::pair<Netlist, Placement> design(int registers = 16, std::uint64_t seed = 2) {
  GenConfig g;
  g.n_registers = registers;
  return generate_synthetic(g, seed);
}

// Ranks with ties sharing their average rank.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Perturb, ZeroSigmaIsIdentity) {
  auto [nl, pl] = design();
  PerturbConfig cfg;
  cfg.rho = 1.0;
  cfg.sigma = 0.0;
  Rng rng(1);
  EXPECT_EQ(gaussian_perturb(pl, nl, cfg, rng).placement, pl);
}

TEST(Perturb, ZeroRhoIsIdentity) {
  auto [nl, pl] = design();
  PerturbConfig cfg;
  cfg.rho = 0.0;
  Rng rng(1);
  auto r = gaussian_perturb(pl, nl, cfg, rng);
  EXPECT_EQ(r.placement, pl);
  for (const auto& d : r.samples) EXPECT_FALSE(d.selected);
}

TEST(Perturb, OnlyRegistersMove) {
  auto [nl, pl] = design();
  PerturbConfig cfg;
  cfg.rho = 1.0;
  Rng rng(3);
  auto r = gaussian_perturb(pl, nl, cfg, rng);
  for (NodeId g : nl.gates()) EXPECT_EQ(r.placement[g], pl[g]);
  for (NodeId q : nl.registers()) EXPECT_TRUE(nl.die().contains(r.placement[q]));
}

TEST(Perturb, AutoSigmaIsFivePercentOfDiagonal) {
  PerturbConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.sigma_for({30, 40}), 2.5);
  cfg.sigma = 1.5;
  EXPECT_DOUBLE_EQ(cfg.sigma_for({30, 40}), 1.5);
}

TEST(Perturb, RejectsBadConfig) {
  PerturbConfig cfg;
  cfg.rho = 1.5;
  EXPECT_THROW(cfg.check(), Error);
  cfg = {};
  cfg.n_snapshots = 0;
  EXPECT_THROW(cfg.check(), Error);
}

TEST(Perturb, DisplacementStatistics) {
  // Registers sit mid-die on a large die so clamping never bites.
  Netlist nl("big", {1000, 1000}, 1.0);
  std::vector<NodeId> regs;
  NodeId in = nl.add_input_port("in", {0, 500});
  std::vector<PinRef> sinks;
  for (int i = 0; i < 100; ++i) {
    regs.push_back(nl.add_register("r" + std::to_string(i)));
    sinks.push_back({regs.back(), Pin::D});
  }
  nl.add_net("n", {in, Pin::P}, sinks);
  Placement pl(nl);
  for (NodeId r : regs) pl.set(r, {500, 500});
  PerturbConfig cfg;
  cfg.rho = 0.3;
  cfg.sigma = 4.0;
  Rng rng(99);
  double sum = 0, sq = 0;
  long picked = 0, draws = 0;
  while (picked < 4000) {
    auto r = gaussian_perturb(pl, nl, cfg, rng);
    for (NodeId q : regs) {
      ++draws;
      double dx = r.placement[q].x - 500, dy = r.placement[q].y - 500;
      if (dx == 0 && dy == 0) continue;
      ++picked;
      sum += dx + dy;
      sq += dx * dx + dy * dy;
    }
  }
  double n = 2.0 * picked;
  double sd = std::sqrt((sq - sum * sum / n) / (n - 1));
  EXPECT_NEAR(sd, 4.0, 0.2);
  EXPECT_NEAR(static_cast<double>(picked) / draws, 0.3, 0.02);
}

TEST(Samples, CountLaw) {
  auto [nl, pl] = design(10);
  PerturbConfig cfg;
  cfg.n_snapshots = 2;
  Dataset ds = make_samples(nl, pl, FeatureConfig{}, cfg, DelayModel{}, Grid{});
  EXPECT_EQ(ds.rows.size(), 30u);
}

TEST(Samples, SameSeedSameCsv) {
  auto [nl, pl] = design();
  PerturbConfig cfg;
  cfg.n_snapshots = 4;
  cfg.seed = 17;
  std::string a = write_dataset_csv(make_samples(nl, pl, FeatureConfig{}, cfg, DelayModel{}, Grid{}));
  std::string b = write_dataset_csv(make_samples(nl, pl, FeatureConfig{}, cfg, DelayModel{}, Grid{}));
  EXPECT_EQ(a, b);
  cfg.seed = 18;
  EXPECT_NE(a, write_dataset_csv(make_samples(nl, pl, FeatureConfig{}, cfg, DelayModel{}, Grid{})));
}

TEST(Samples, SnapshotZeroIsTheBase) {
  auto [nl, pl] = design();
  PerturbConfig cfg;
  cfg.n_snapshots = 3;
  Dataset ds = make_samples(nl, pl, FeatureConfig{}, cfg, DelayModel{}, Grid{});
  TimingReport rep = sta(nl, pl, DelayModel{});
  Dataset base = build_dataset(nl, pl, rep, FeatureConfig{});
  const std::size_t r = nl.registers().size();
  for (std::size_t i = 0; i < r; ++i) {
    EXPECT_EQ(*ds.rows[i].target, pl[*nl.find(ds.rows[i].reg)]);
    EXPECT_EQ(ds.rows[i].wslack, register_worst_slack(rep, nl, ds.rows[i].reg));
    EXPECT_EQ(ds.rows[i].chains, base.rows[i].chains);
  }
}

TEST(Samples, SnapshotsAreLegalAndShareChains) {
  auto [nl, pl] = design(32, 5);
  PerturbConfig cfg;
  cfg.n_snapshots = 6;
  cfg.rho = 0.5;
  std::vector<Snapshot> snaps;
  Dataset ds = make_samples(nl, pl, FeatureConfig{}, cfg, DelayModel{}, Grid{}, &snaps);
  ASSERT_EQ(snaps.size(), 7u);
  for (const auto& s : snaps) {
    std::string why;
    EXPECT_TRUE(oracle::legal(nl, s.placement, Grid{}, &why)) << s.index << " " << why;
  }
  const std::size_t r = nl.registers().size();
  for (std::size_t i = r; i < ds.rows.size(); ++i) EXPECT_EQ(ds.rows[i].chains, ds.rows[i % r].chains);
  std::string manifest = write_manifest_csv(nl, snaps);
  EXPECT_EQ(manifest.rfind("snapshot,register,dx,dy,selected,wns,tns\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(manifest.begin(), manifest.end(), '\n')), 1 + 7 * r);
}

TEST(SamplesProperty, LargerSigmaMovesRegistersFurther) {
  auto [nl, pl] = design(32, 6);
  std::vector<double> sig, disp;
  for (double s : {0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0}) {
    PerturbConfig cfg;
    cfg.sigma = s;
    cfg.n_snapshots = 8;
    cfg.seed = 1000 + static_cast<std::uint64_t>(s * 10);
    std::vector<Snapshot> snaps;
    make_samples(nl, pl, FeatureConfig{1, 8, true, SlackFeature::Register}, cfg, DelayModel{}, Grid{}, &snaps);
    for (const auto& snap : snaps) {
      if (snap.index == 0) continue;
      double total = 0;
      for (const auto& m : snap.moves) total += std::abs(m.dx) + std::abs(m.dy);
      sig.push_back(s);
      disp.push_back(total / static_cast<double>(snap.moves.size()));
    }
  }
  ASSERT_GE(sig.size(), 50u);
  EXPECT_GT(pearson(ranks(sig), ranks(disp)), 0.0);
}
