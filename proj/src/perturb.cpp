#include "regplace/perturb.hpp"

#include <cmath>

#include "regplace/place.hpp"
#include "regplace/text.hpp"

namespace regplace {

double PerturbConfig::sigma_for(const Die& die) const {
  return sigma ? *sigma : 0.05 * std::hypot(die.width, die.height);
}

void PerturbConfig::check() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error(ErrorCode::Domain, "perturb.rho must lie in [0,1]");
  if (sigma && !(*sigma >= 0.0)) throw Error(ErrorCode::Domain, "perturb.sigma_um must be non-negative");
  if (n_snapshots < 1) throw Error(ErrorCode::Domain, "perturb.snapshots must be at least 1");
}

PerturbResult gaussian_perturb(const Placement& placement, const Netlist& nl, const PerturbConfig& config, Rng& rng) {
  config.check();
  validate_placement(nl, placement);
  const double sigma = config.sigma_for(nl.die());
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  PerturbResult out{placement, {}};
  for (NodeId r : nl.registers()) {
    Displacement d{r, 0.0, 0.0, u01(rng) < config.rho};
    if (d.selected) {
      d.dx = sigma * normal(rng);
      d.dy = sigma * normal(rng);
      Point p = placement[r];
      out.placement.set(r, nl.die().clamp({p.x + d.dx, p.y + d.dy}));
    }
    out.samples.push_back(d);
  }
  return out;
}

Dataset make_samples(const Netlist& nl, const Placement& base, const FeatureConfig& fcfg, const PerturbConfig& pcfg,
                     const DelayModel& model, const Grid& grid, std::vector<Snapshot>* snapshots) {
  fcfg.check();
  pcfg.check();
  validate_placement(nl, base);
  if (!is_legal(nl, base, grid)) throw Error(ErrorCode::Placement, "base placement is not legal");

  std::vector<Dataset> parts;
  auto record = [&](int index, Placement pl, std::vector<Displacement> moves) {
    TimingReport rep = sta(nl, pl, model);
    parts.push_back(build_dataset(nl, pl, rep, fcfg));
    if (snapshots) snapshots->push_back({index, std::move(pl), std::move(rep), std::move(moves)});
  };

  std::vector<Displacement> still;
  for (NodeId r : nl.registers()) still.push_back({r, 0.0, 0.0, false});
  record(0, base, still);

  for (int i = 1; i <= pcfg.n_snapshots; ++i) {
    Rng rng(derive_seed(pcfg.seed, static_cast<std::uint64_t>(i)));
    PerturbResult moved = gaussian_perturb(base, nl, pcfg, rng);
    Placement legal = legalize(nl, moved.placement, grid);
    std::vector<Displacement> moves;
    for (const Displacement& d : moved.samples)
      moves.push_back({d.reg, legal[d.reg].x - base[d.reg].x, legal[d.reg].y - base[d.reg].y, d.selected});
    record(i, std::move(legal), std::move(moves));
  }
  return merge_datasets(parts);
}

std::string write_manifest_csv(const Netlist& nl, const std::vector<Snapshot>& snapshots) {
  std::string out = "snapshot,register,dx,dy,selected,wns,tns\n";
  for (const Snapshot& s : snapshots)
    for (const Displacement& d : s.moves)
      out += std::to_string(s.index) + "," + nl.node(d.reg).name + "," + text::format_fixed(d.dx, 4) + "," +
             text::format_fixed(d.dy, 4) + "," + (d.selected ? "1" : "0") + "," + text::format_fixed(s.report.wns, 6) +
             "," + text::format_fixed(s.report.tns, 6) + "\n";
  return out;
}

}  // namespace regplace
