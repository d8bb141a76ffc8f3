#include "regplace/place.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "regplace/text.hpp"

namespace regplace {

namespace {

constexpr double kEps = 1e-9;

struct SiteGrid {
  int cols = 0;
  int rows = 0;
  double pitch = 1.0;
  double row_height = 1.0;

  SiteGrid(const Die& die, const Grid& grid)
      : cols(static_cast<int>(std::floor(die.width / grid.site_pitch + kEps))),
        rows(static_cast<int>(std::floor(die.height / grid.row_height + kEps))),
        pitch(grid.site_pitch),
        row_height(grid.row_height) {}

  int total() const { return cols * rows; }
  int col_of(double x) const { return std::clamp(static_cast<int>(std::lround(x / pitch)), 0, cols - 1); }
  int row_of(double y) const { return std::clamp(static_cast<int>(std::lround(y / row_height)), 0, rows - 1); }
  Point point(int site) const { return {(site % cols) * pitch, (site / cols) * row_height}; }
  int site(int col, int row) const { return row * cols + col; }
};

// Site index of an on-grid location, or -1.
int exact_site(const SiteGrid& sg, Point p) {
  double c = p.x / sg.pitch;
  double r = p.y / sg.row_height;
  double cr = std::round(c);
  double rr = std::round(r);
  if (std::abs(c - cr) > kEps || std::abs(r - rr) > kEps) return -1;
  if (cr < 0 || rr < 0 || cr >= sg.cols || rr >= sg.rows) return -1;
  return sg.site(static_cast<int>(cr), static_cast<int>(rr));
}

double net_length(const Net& net, const std::vector<Point>& loc) {
  Point p = loc[static_cast<std::size_t>(net.driver.node)];
  double x0 = p.x, x1 = p.x, y0 = p.y, y1 = p.y;
  for (const PinRef& s : net.sinks) {
    Point q = loc[static_cast<std::size_t>(s.node)];
    x0 = std::min(x0, q.x);
    x1 = std::max(x1, q.x);
    y0 = std::min(y0, q.y);
    y1 = std::max(y1, q.y);
  }
  return (x1 - x0) + (y1 - y0);
}

}  // namespace

void check_grid(const Die& die, const Grid& grid) {
  if (!(grid.site_pitch > 0.0) || !(grid.row_height > 0.0))
    throw Error(ErrorCode::Domain, "grid pitch and row height must be positive");
  double cols = die.width / grid.site_pitch;
  double rows = die.height / grid.row_height;
  if (std::abs(cols - std::round(cols)) > 1e-6 || std::abs(rows - std::round(rows)) > 1e-6 || std::round(cols) < 1 ||
      std::round(rows) < 1)
    throw Error(ErrorCode::Domain, "die " + text::format_double(die.width) + "x" + text::format_double(die.height) +
                                       " is not a whole number of sites and rows");
}

double hpwl(const Netlist& nl, const Placement& pl) {
  double total = 0.0;
  for (const Net& net : nl.nets()) total += net_length(net, pl.points());
  return total;
}

bool is_legal(const Netlist& nl, const Placement& pl, const Grid& grid) {
  if (pl.size() != nl.size()) return false;
  SiteGrid sg(nl.die(), grid);
  std::vector<bool> used(static_cast<std::size_t>(std::max(sg.total(), 0)), false);
  for (NodeId id : nl.movable()) {
    if (!pl.has(id)) return false;
    int s = exact_site(sg, pl[id]);
    if (s < 0 || used[static_cast<std::size_t>(s)]) return false;
    used[static_cast<std::size_t>(s)] = true;
  }
  return true;
}

namespace {

// Places `cells` in (row, col, name) order onto the first free site at or after their
// snapped site, marking sites in `used`.
void legalize_cells(const Netlist& nl, Placement& pl, const SiteGrid& sg, const std::vector<NodeId>& cells,
                    std::vector<bool>& used) {
  struct Item {
    int row, col;
    NodeId id;
  };
  std::vector<Item> items;
  items.reserve(cells.size());
  for (NodeId id : cells) items.push_back({sg.row_of(pl[id].y), sg.col_of(pl[id].x), id});
  std::sort(items.begin(), items.end(), [&](const Item& a, const Item& b) {
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    return nl.node(a.id).name < nl.node(b.id).name;
  });
  for (const Item& it : items) {
    int s = sg.site(it.col, it.row);
    while (used[static_cast<std::size_t>(s)]) s = (s + 1) % sg.total();
    used[static_cast<std::size_t>(s)] = true;
    pl.set(it.id, sg.point(s));
  }
}

SiteGrid checked_sites(const Netlist& nl, const Placement& pl, const Grid& grid) {
  check_grid(nl.die(), grid);
  validate_placement(nl, pl);
  SiteGrid sg(nl.die(), grid);
  auto cells = nl.movable().size();
  if (static_cast<long>(cells) > static_cast<long>(sg.total()))
    throw Error(ErrorCode::Capacity, "design '" + nl.name() + "' has " + std::to_string(cells) +
                                         " cells but the die only has " + std::to_string(sg.total()) + " sites");
  return sg;
}

}  // namespace

Placement legalize(const Netlist& nl, const Placement& pl, const Grid& grid) {
  SiteGrid sg = checked_sites(nl, pl, grid);
  Placement out = pl;
  std::vector<bool> used(static_cast<std::size_t>(sg.total()), false);
  legalize_cells(nl, out, sg, nl.movable(), used);
  return out;
}

Placement random_placement(const Netlist& nl, const Grid& grid, Rng& rng) {
  Placement pl(nl);
  std::uniform_real_distribution<double> ux(0.0, nl.die().width);
  std::uniform_real_distribution<double> uy(0.0, nl.die().height);
  for (NodeId id : nl.movable()) {
    double x = ux(rng);
    double y = uy(rng);
    pl.set(id, {x, y});
  }
  return legalize(nl, pl, grid);
}

double SoftBound::distance(Point p) const {
  return std::max(0.0, std::abs(p.x - center.x) - half_width) + std::max(0.0, std::abs(p.y - center.y) - half_height);
}

double softbound_penalty(const Netlist& nl, const Placement& pl, std::span<const SoftBound> bounds) {
  double total = 0.0;
  for (const SoftBound& b : bounds) {
    if (b.reg < 0 || static_cast<std::size_t>(b.reg) >= nl.size() || nl.node(b.reg).kind != NodeKind::Register)
      throw Error(ErrorCode::Domain, "soft bound refers to a node that is not a register");
    total += b.distance(pl[b.reg]);
  }
  return total;
}

SeedResult seed_from_predictions(const Netlist& nl, const std::map<std::string, Point>& predictions,
                                 const Grid& grid, double half_extent) {
  Placement pl(nl);
  std::vector<SoftBound> bounds;
  for (NodeId r : nl.registers()) {
    auto it = predictions.find(nl.node(r).name);
    if (it == predictions.end())
      throw Error(ErrorCode::Domain, "no prediction for register '" + nl.node(r).name + "'");
    Point p = nl.die().clamp(it->second);
    pl.set(r, p);
    bounds.push_back({r, it->second, half_extent, half_extent});
  }

  auto order = nl.comb_order();
  auto peers = [&](NodeId g) {
    std::vector<NodeId> out;
    const Node& n = nl.node(g);
    out.push_back(nl.driver_of(g, Pin::A));
    if (gate_inputs(n.gate) == 2) out.push_back(nl.driver_of(g, Pin::B));
    NetId y = nl.net_out_of(g, Pin::Y);
    if (y != kNoNet)
      for (const PinRef& s : nl.net(y).sinks) out.push_back(s.node);
    return out;
  };
  for (int pass = 0; pass < 2; ++pass) {
    for (NodeId g : order) {
      double sx = 0.0, sy = 0.0;
      int count = 0;
      for (NodeId p : peers(g)) {
        if (p == kNoNode || p == g || !pl.has(p)) continue;
        sx += pl[p].x;
        sy += pl[p].y;
        ++count;
      }
      pl.set(g, count > 0 ? Point{sx / count, sy / count} : nl.die().center());
    }
  }
  // Registers claim their sites before gates fill the remaining ones.
  SiteGrid sg = checked_sites(nl, pl, grid);
  std::vector<bool> used(static_cast<std::size_t>(sg.total()), false);
  legalize_cells(nl, pl, sg, nl.registers(), used);
  legalize_cells(nl, pl, sg, nl.gates(), used);
  return {std::move(pl), std::move(bounds)};
}

// ---- annealing ------------------------------------------------------------

void SAConfig::check() const {
  if (!(cooling > 0.0 && cooling < 1.0)) throw Error(ErrorCode::Domain, "cooling ratio must lie in (0,1)");
  if (!(moves_per_cell >= 0.0)) throw Error(ErrorCode::Domain, "moves per cell must be non-negative");
  if (!(w_wl >= 0.0 && w_tns >= 0.0 && w_sb >= 0.0)) throw Error(ErrorCode::Domain, "cost weights must be non-negative");
  if (!(t_start >= 0.0 && t_end >= 0.0)) throw Error(ErrorCode::Domain, "temperatures must be non-negative");
}

int SAConfig::temperatures() const {
  if (!(t_start > 0.0) || !(t_end > 0.0) || !(t_end < t_start)) return 0;
  return static_cast<int>(std::ceil(std::log(t_end / t_start) / std::log(cooling) - 1e-9));
}

PlaceResult sa_place(const Netlist& nl, const Placement& init, const SAConfig& config,
                     std::span<const SoftBound> bounds, const DelayModel& model, const Grid& grid) {
  config.check();
  check_grid(nl.die(), grid);
  validate_placement(nl, init);
  const auto t_begin = std::chrono::steady_clock::now();

  Placement start = legalize(nl, init, grid);
  SiteGrid sg(nl.die(), grid);
  const auto cells = nl.movable();
  const std::size_t n_cells = cells.size();

  std::vector<Point> loc = start.points();
  std::vector<int> site(n_cells);
  std::vector<int> occupant(static_cast<std::size_t>(sg.total()), -1);
  std::vector<int> cell_index(nl.size(), -1);
  for (std::size_t c = 0; c < n_cells; ++c) {
    site[c] = exact_site(sg, loc[static_cast<std::size_t>(cells[c])]);
    occupant[static_cast<std::size_t>(site[c])] = static_cast<int>(c);
    cell_index[static_cast<std::size_t>(cells[c])] = static_cast<int>(c);
  }

  std::vector<std::vector<NetId>> cell_nets(n_cells);
  for (NetId id = 0; id < static_cast<NetId>(nl.nets().size()); ++id) {
    const Net& net = nl.net(id);
    auto add = [&](NodeId node) {
      int c = cell_index[static_cast<std::size_t>(node)];
      if (c < 0) return;
      auto& v = cell_nets[static_cast<std::size_t>(c)];
      if (v.empty() || v.back() != id) v.push_back(id);
    };
    add(net.driver.node);
    for (const PinRef& s : net.sinks) add(s.node);
  }

  std::vector<const SoftBound*> bound_of(n_cells, nullptr);
  softbound_penalty(nl, start, bounds);  // validates bound targets
  for (const SoftBound& b : bounds) bound_of[static_cast<std::size_t>(cell_index[static_cast<std::size_t>(b.reg)])] = &b;

  std::vector<double> net_len(nl.nets().size());
  for (std::size_t i = 0; i < net_len.size(); ++i) net_len[i] = net_length(nl.nets()[i], loc);

  TimingGraph timing(nl, model);
  const bool use_tns = config.w_tns > 0.0 && timing.has_endpoints();
  auto tns_of = [&](const std::vector<Point>& l) { return timing.has_endpoints() ? timing.evaluate(l).tns : 0.0; };

  double cur_hpwl = std::accumulate(net_len.begin(), net_len.end(), 0.0);
  double cur_tns = tns_of(loc);
  double cur_sb = 0.0;
  for (std::size_t c = 0; c < n_cells; ++c)
    if (bound_of[c]) cur_sb += bound_of[c]->distance(loc[static_cast<std::size_t>(cells[c])]);
  auto cost = [&](double h, double tns, double sb) {
    return config.w_wl * h + config.w_tns * -std::min(tns, 0.0) + config.w_sb * sb;
  };
  double cur_cost = cost(cur_hpwl, cur_tns, cur_sb);
  double best_cost = cur_cost;
  double best_tns = cur_tns;
  std::vector<int> best_site = site;

  PlaceResult result;
  result.cost_trace.push_back(best_cost);
  result.tns_trace.push_back(best_tns);

  Rng rng(config.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n_temps = config.temperatures();
  const auto moves_per_temp = static_cast<std::int64_t>(std::llround(config.moves_per_cell * static_cast<double>(n_cells)));

  std::vector<std::uint32_t> net_stamp(nl.nets().size(), 0);
  std::uint32_t stamp = 0;
  std::vector<NetId> touched;
  std::vector<double> touched_len;
  std::int64_t moves = 0, accepted = 0;

  for (int k = 0; k < n_temps && n_cells > 0 && moves_per_temp > 0; ++k) {
    const double temp = config.t_start * std::pow(config.cooling, k);
    const double frac = temp / config.t_start;
    const int wc = std::max(1, static_cast<int>(std::ceil(sg.cols * frac)));
    const int wr = std::max(1, static_cast<int>(std::ceil(sg.rows * frac)));
    std::uniform_int_distribution<std::size_t> pick(0, n_cells - 1);

    for (std::int64_t m = 0; m < moves_per_temp; ++m) {
      ++moves;
      int a = static_cast<int>(pick(rng));
      int target;
      if (u01(rng) < 0.5) {
        int col = site[static_cast<std::size_t>(a)] % sg.cols;
        int row = site[static_cast<std::size_t>(a)] / sg.cols;
        std::uniform_int_distribution<int> dc(-wc, wc), dr(-wr, wr);
        int nc = std::clamp(col + dc(rng), 0, sg.cols - 1);
        int nr = std::clamp(row + dr(rng), 0, sg.rows - 1);
        target = sg.site(nc, nr);
      } else {
        int b = static_cast<int>(pick(rng));
        target = site[static_cast<std::size_t>(b)];
      }
      const int sa = site[static_cast<std::size_t>(a)];
      if (target == sa) continue;
      const int b = occupant[static_cast<std::size_t>(target)];

      const auto na = static_cast<std::size_t>(cells[static_cast<std::size_t>(a)]);
      const Point old_a = loc[na];
      loc[na] = sg.point(target);
      std::size_t nb = 0;
      Point old_b{};
      if (b >= 0) {
        nb = static_cast<std::size_t>(cells[static_cast<std::size_t>(b)]);
        old_b = loc[nb];
        loc[nb] = sg.point(sa);
      }

      ++stamp;
      touched.clear();
      touched_len.clear();
      double d_hpwl = 0.0;
      auto touch = [&](int c) {
        for (NetId id : cell_nets[static_cast<std::size_t>(c)]) {
          if (net_stamp[static_cast<std::size_t>(id)] == stamp) continue;
          net_stamp[static_cast<std::size_t>(id)] = stamp;
          double len = net_length(nl.net(id), loc);
          d_hpwl += len - net_len[static_cast<std::size_t>(id)];
          touched.push_back(id);
          touched_len.push_back(len);
        }
      };
      touch(a);
      if (b >= 0) touch(b);

      double d_sb = 0.0;
      if (const SoftBound* sb = bound_of[static_cast<std::size_t>(a)]) d_sb += sb->distance(loc[na]) - sb->distance(old_a);
      if (b >= 0)
        if (const SoftBound* sb = bound_of[static_cast<std::size_t>(b)]) d_sb += sb->distance(loc[nb]) - sb->distance(old_b);

      const double new_tns = use_tns ? timing.evaluate(loc).tns : cur_tns;
      const double new_cost = cost(cur_hpwl + d_hpwl, new_tns, cur_sb + d_sb);
      const double delta = new_cost - cur_cost;

      if (delta <= 0.0 || u01(rng) < std::exp(-delta / temp)) {
        ++accepted;
        for (std::size_t i = 0; i < touched.size(); ++i) net_len[static_cast<std::size_t>(touched[i])] = touched_len[i];
        site[static_cast<std::size_t>(a)] = target;
        occupant[static_cast<std::size_t>(target)] = a;
        occupant[static_cast<std::size_t>(sa)] = b;
        if (b >= 0) site[static_cast<std::size_t>(b)] = sa;
        cur_hpwl += d_hpwl;
        cur_sb += d_sb;
        cur_tns = new_tns;
        cur_cost = new_cost;
        if (cur_cost < best_cost) {
          best_cost = cur_cost;
          best_tns = cur_tns;
          best_site = site;
        }
      } else {
        loc[na] = old_a;
        if (b >= 0) loc[nb] = old_b;
      }
    }
    // resync the running sums
    cur_hpwl = std::accumulate(net_len.begin(), net_len.end(), 0.0);
    cur_sb = 0.0;
    for (std::size_t c = 0; c < n_cells; ++c)
      if (bound_of[c]) cur_sb += bound_of[c]->distance(loc[static_cast<std::size_t>(cells[c])]);
    cur_cost = cost(cur_hpwl, cur_tns, cur_sb);
    if (!use_tns && timing.has_endpoints()) {
      std::vector<Point> best_loc = loc;
      for (std::size_t c = 0; c < n_cells; ++c)
        best_loc[static_cast<std::size_t>(cells[c])] = sg.point(best_site[c]);
      best_tns = tns_of(best_loc);
    }
    result.cost_trace.push_back(best_cost);
    result.tns_trace.push_back(best_tns);
  }

  Placement best(nl);
  for (std::size_t c = 0; c < n_cells; ++c) best.set(cells[c], sg.point(best_site[c]));
  result.placement = legalize(nl, best, grid);

  TimingReport rep = sta(nl, result.placement, model);
  result.metrics.hpwl = hpwl(nl, result.placement);
  result.metrics.tns = rep.tns;
  result.metrics.wns = rep.wns;
  result.metrics.moves = moves;
  result.metrics.accepted = accepted;
  result.metrics.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return result;
}

std::string write_place_metrics_csv(const std::vector<std::pair<std::string, PlaceMetrics>>& runs) {
  std::string out = "run,hpwl,wns,tns,seconds,moves,accepted\n";
  for (const auto& [name, m] : runs)
    out += name + "," + text::format_fixed(m.hpwl, 4) + "," + text::format_fixed(m.wns, 6) + "," +
           text::format_fixed(m.tns, 6) + "," + text::format_fixed(m.seconds, 3) + "," + std::to_string(m.moves) +
           "," + std::to_string(m.accepted) + "\n";
  return out;
}

std::string write_cost_trace_csv(const PlaceResult& result) {
  std::string out = "temperature_index,best_cost\n";
  for (std::size_t i = 0; i < result.cost_trace.size(); ++i)
    out += std::to_string(i) + "," + text::format_double(result.cost_trace[i]) + "\n";
  return out;
}

}  // namespace regplace
