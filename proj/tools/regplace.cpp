// Command-line driver for the register placement pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "regplace/config.hpp"
#include "regplace/flow.hpp"
#include "regplace/text.hpp"

namespace fs = std::filesystem;
using namespace regplace;

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return 2;
    case ErrorCode::Parse: return 3;
    case ErrorCode::Validation: return 4;
    case ErrorCode::Placement: return 5;
    case ErrorCode::Capacity: return 6;
    case ErrorCode::Schema: return 7;
    case ErrorCode::Numeric: return 8;
    case ErrorCode::Config: return 9;
    case ErrorCode::Domain: return 10;
  }
  return 11;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n') c = ' ';
  return s;
}

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::vector<std::string> overrides;
};

RunConfig load_run_config(const Globals& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) cfg = parse_config(text::read_file(g.config_path));
  for (const std::string& kv : g.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Config, "--set expects key=value, got '" + kv + "'");
    cfg.set(text::trim(std::string_view(kv).substr(0, eq)), text::trim(std::string_view(kv).substr(eq + 1)));
  }
  if (g.seed) cfg.seed = *g.seed;
  cfg.check();
  return cfg;
}

class Output {
 public:
  Output(const std::string& dir, const RunConfig& cfg) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + dir + "': " + ec.message());
    write("config.effective", cfg.effective());
  }
  std::string path(const std::string& file) const { return (dir_ / file).string(); }
  void write(const std::string& file, std::string_view content) const { text::write_file(path(file), content); }

 private:
  fs::path dir_;
};

Netlist load_netlist(const std::string& path) { return parse_netlist(text::read_file(path)); }

Placement load_placement(const std::string& path, const Netlist& nl) {
  Placement pl = parse_placement(text::read_file(path), nl);
  validate_placement(nl, pl);
  return pl;
}

Dataset load_dataset(const std::string& csv, const std::string& schema) {
  return read_dataset_csv(text::read_file(csv), read_schema(text::read_file(schema)));
}

std::string write_predictions_csv(const std::map<std::string, Point>& preds, const Netlist& nl) {
  std::string out = "register,x,y\n";
  for (NodeId r : nl.registers()) {
    const std::string& name = nl.node(r).name;
    auto it = preds.find(name);
    if (it == preds.end()) continue;
    out += name + "," + text::format_fixed(it->second.x, 4) + "," + text::format_fixed(it->second.y, 4) + "\n";
  }
  return out;
}

std::map<std::string, Point> read_predictions_csv(std::string_view content) {
  std::map<std::string, Point> out;
  std::istringstream in{std::string(content)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || text::trim(line).empty()) continue;
    auto f = text::split(text::trim(line), ',');
    Point p;
    if (f.size() != 3 || !text::parse_double(f[1], p.x) || !text::parse_double(f[2], p.y))
      throw Error(ErrorCode::Parse, "predictions line " + std::to_string(line_no) + ": expected register,x,y");
    out[std::string(f[0])] = p;
  }
  return out;
}

std::vector<double> parse_fractions(const std::string& list) {
  std::vector<double> out;
  for (auto f : text::split(list, ',')) {
    double v = 0.0;
    if (!text::parse_double(text::trim(f), v)) throw Error(ErrorCode::Config, "bad fraction '" + std::string(f) + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regplace: register placement prediction and soft-bound guided annealing"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--set", g.overrides, "config override key=value (repeatable)");
  app.fallthrough();

  std::function<void()> action;

  // check
  auto* check = app.add_subcommand("check", "parse and validate a netlist (and optionally a placement)");
  std::string check_nl, check_pl;
  check->add_option("netlist", check_nl)->required();
  check->add_option("--placement", check_pl);
  check->callback([&] {
    action = [&] {
      load_run_config(g);  // a bad config or override fails here like in every other command
      Netlist nl = parse_netlist_unchecked(text::read_file(check_nl));
      auto diags = validate(nl);
      for (const auto& d : diags) {
        std::string names;
        for (const auto& n : d.names) names += (names.empty() ? "" : ",") + n;
        std::cout << "diag code=" << to_string(d.code) << " names=" << names << " message=" << d.message << "\n";
      }
      if (!diags.empty()) throw NetlistError(diags);
      if (!check_pl.empty()) load_placement(check_pl, nl);
      std::cout << "OK design=" << nl.name() << " nodes=" << nl.size() << " nets=" << nl.nets().size()
                << " registers=" << nl.registers().size() << "\n";
    };
  });

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic pipelined design and a random legal placement");
  std::string gen_name;
  gen->add_option("--name", gen_name, "design name (default derived from the seed)");
  gen->callback([&] {
    action = [&] {
      RunConfig cfg = load_run_config(g);
      Output out(g.out, cfg);
      GenConfig gc = cfg.gen;
      if (!gen_name.empty()) gc.name = gen_name;
      auto [nl, pl] = generate_synthetic(gc, cfg.seed, cfg.grid);
      out.write(nl.name() + ".rnl", write_netlist(nl));
      out.write(nl.name() + ".rpl", write_placement(nl, pl));
      std::cout << "generated design=" << nl.name() << " nodes=" << nl.size() << " registers=" << nl.registers().size()
                << " gates=" << nl.gates().size() << "\n";
    };
  });

  // sta
  auto* sta_cmd = app.add_subcommand("sta", "static timing analysis of a placed design");
  std::string sta_nl, sta_pl;
  sta_cmd->add_option("netlist", sta_nl)->required();
  sta_cmd->add_option("placement", sta_pl)->required();
  sta_cmd->callback([&] {
    action = [&] {
      RunConfig cfg = load_run_config(g);
      Netlist nl = load_netlist(sta_nl);
      Placement pl = load_placement(sta_pl, nl);
      TimingReport rep = sta(nl, pl, cfg.delay);
      Output out(g.out, cfg);
      out.write("timing.txt", write_timing_text(rep));
      out.write("timing.csv", write_timing_csv(rep));
      std::cout << "WNS " << text::format_fixed(rep.wns, 6) << " TNS " << text::format_fixed(rep.tns, 6) << "\n";
    };
  });

  // features
  auto* feat = app.add_subcommand("features", "logic-chain feature vectors for every register");
  std::string feat_nl, feat_pl;
  feat->add_option("netlist", feat_nl)->required();
  feat->add_option("placement", feat_pl, "with a placement rows carry slack and targets");
  feat->callback([&] {
    action = [&] {
      RunConfig cfg = load_run_config(g);
      Netlist nl = load_netlist(feat_nl);
      Dataset ds;
      if (feat_pl.empty()) {
        ds = prediction_rows(nl, cfg.feature);
      } else {
        Placement pl = load_placement(feat_pl, nl);
        ds = build_dataset(nl, pl, sta(nl, pl, cfg.delay), cfg.feature);
      }
      Output out(g.out, cfg);
      out.write("features.csv", write_dataset_csv(ds, !feat_pl.empty()));
      out.write("schema.json", write_schema(ds.schema));
      std::cout << "features rows=" << ds.rows.size() << " width=" << ds.schema.width() << "\n";
    };
  });

  // perturb
  auto* pert = app.add_subcommand("perturb", "gaussian perturbation snapshots of a legal placement");
  std::string pert_nl, pert_pl;
  pert->add_option("netlist", pert_nl)->required();
  pert->add_option("placement", pert_pl)->required();
  pert->callback([&] {
    action = [&] {
      RunConfig cfg = load_run_config(g);
      Netlist nl = load_netlist(pert_nl);
      Placement pl = load_placement(pert_pl, nl);
      PerturbConfig pc = cfg.perturb;
      pc.seed = stage_seed(cfg.seed, "perturb:0:" + nl.name());
      std::vector<Snapshot> snaps;
      Dataset ds = make_samples(nl, pl, cfg.feature, pc, cfg.delay, cfg.grid, &snaps);
      Output out(g.out, cfg);
      out.write("dataset.csv", write_dataset_csv(ds));
      out.write("schema.json", write_schema(ds.schema));
      out.write("manifest.csv", write_manifest_csv(nl, snaps));
      for (const Snapshot& s : snaps)
        if (s.index > 0) out.write("snapshot_" + std::to_string(s.index) + ".rpl", write_placement(nl, s.placement));
      std::cout << "perturb snapshots=" << snaps.size() - 1 << " rows=" << ds.rows.size() << "\n";
    };
  });

  // train
  auto* tr = app.add_subcommand("train", "fit a regressor on a dataset");
  std::string tr_csv, tr_schema, tr_kind;
  tr->add_option("dataset", tr_csv)->required();
  tr->add_option("schema", tr_schema)->required();
  tr->add_option("--model", tr_kind, "forest or krr (default from learn.model)");
  tr->callback([&] {
    action = [&] {
      RunConfig cfg = load_run_config(g);
      Dataset ds = load_dataset(tr_csv, tr_schema);
      LearnerConfig lc{cfg.forest, cfg.krr};
      lc.forest.seed = stage_seed(cfg.seed, "forest");
      ModelKind kind = tr_kind.empty() ? cfg.model : parse_model_kind(tr_kind);
      Model model = train(kind, ds, lc);
      Output out(g.out, cfg);
      out.write("model.json", save_model(model));
      std::cout << "trained model=" << to_string(kind) << " rows=" << ds.rows.size() << "\n";
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "error metrics of a model on a labelled dataset");
  std::string ev_model, ev_csv, ev_schema;
  ev->add_option("model", ev_model)->required();
  ev->add_option("dataset", ev_csv)->required();
  ev->add_option("schema", ev_schema)->required();
  ev->callback([&] {
    action = [&] {
      RunConfig cfg = load_run_config(g);
      Model model = load_model(text::read_file(ev_model));
      Dataset ds = load_dataset(ev_csv, ev_schema);
      std::vector<Point> truth;
      for (const auto& r : ds.rows) {
        if (!r.target) throw Error(ErrorCode::Schema, "dataset has no targets");
        truth.push_back(*r.target);
      }
      Metrics m = error_metrics(predict_rows(model, ds, false), truth);
      Output out(g.out, cfg);
      out.write("metrics.csv", "mae_x,mae_y,rmse_x,rmse_y\n" + text::format_fixed(m.mae_x, 6) + "," +
                                   text::format_fixed(m.mae_y, 6) + "," + text::format_fixed(m.rmse_x, 6) + "," +
                                   text::format_fixed(m.rmse_y, 6) + "\n");
      std::cout << "eval mae_x=" << text::format_fixed(m.mae_x, 4) << " mae_y=" << text::format_fixed(m.mae_y, 4)
                << " rmse_x=" << text::format_fixed(m.rmse_x, 4) << " rmse_y=" << text::format_fixed(m.rmse_y, 4)
                << "\n";
    };
  });

  // curve
  auto* cv = app.add_subcommand("curve", "k-fold learning curve");
  std::string cv_csv, cv_schema, cv_kind, cv_fractions = "0.2,0.4,0.6,0.8,1.0";
  int cv_folds = 5;
  cv->add_option("dataset", cv_csv)->required();
  cv->add_option("schema", cv_schema)->required();
  cv->add_option("--model", cv_kind, "forest or krr (default from learn.model)");
  cv->add_option("--fractions", cv_fractions, "comma-separated training fractions");
  cv->add_option("--folds", cv_folds);
  cv->callback([&] {
    action = [&] {
      RunConfig cfg = load_run_config(g);
      Dataset ds = load_dataset(cv_csv, cv_schema);
      LearnerConfig lc{cfg.forest, cfg.krr};
      lc.forest.seed = stage_seed(cfg.seed, "forest");
      ModelKind kind = cv_kind.empty() ? cfg.model : parse_model_kind(cv_kind);
      auto rows = learning_curve(kind, ds, parse_fractions(cv_fractions), cv_folds, stage_seed(cfg.seed, "curve"), lc);
      Output out(g.out, cfg);
      out.write("curve.csv", write_curve_csv(rows));
      std::cout << "curve model=" << to_string(kind) << " points=" << rows.size() << "\n";
    };
  });

  // predict
  auto* pr = app.add_subcommand("predict", "predict register locations for a netlist");
  std::string pr_model, pr_nl;
  pr->add_option("model", pr_model)->required();
  pr->add_option("netlist", pr_nl)->required();
  pr->callback([&] {
    action = [&] {
      RunConfig cfg = load_run_config(g);
      Model model = load_model(text::read_file(pr_model));
      Netlist nl = load_netlist(pr_nl);
      auto preds = predict_registers(model, nl, cfg);
      Output out(g.out, cfg);
      out.write("predictions.csv", write_predictions_csv(preds, nl));
      std::cout << "predicted registers=" << preds.size() << "\n";
    };
  });

  // place
  auto* pl_cmd = app.add_subcommand("place", "simulated-annealing placement, optionally guided by predictions");
  std::string pl_nl, pl_init, pl_pred;
  pl_cmd->add_option("netlist", pl_nl)->required();
  pl_cmd->add_option("--init", pl_init, "initial placement (default: random legal)");
  pl_cmd->add_option("--predictions", pl_pred, "register,x,y predictions: seed there and add soft bounds");
  pl_cmd->callback([&] {
    action = [&] {
      RunConfig cfg = load_run_config(g);
      Netlist nl = load_netlist(pl_nl);
      Placement init;
      std::vector<SoftBound> bounds;
      if (!pl_pred.empty()) {
        SeedResult seeded =
            seed_from_predictions(nl, read_predictions_csv(text::read_file(pl_pred)), cfg.grid, cfg.bound_half_um);
        init = std::move(seeded.placement);
        bounds = std::move(seeded.bounds);
      } else if (!pl_init.empty()) {
        init = load_placement(pl_init, nl);
      } else {
        Rng rng(stage_seed(cfg.seed, "place-init"));
        init = random_placement(nl, cfg.grid, rng);
      }
      SAConfig sa = cfg.sa;
      sa.seed = stage_seed(cfg.seed, "place");
      PlaceResult r = sa_place(nl, init, sa, bounds, cfg.delay, cfg.grid);
      Output out(g.out, cfg);
      out.write("placed.rpl", write_placement(nl, r.placement));
      out.write("metrics.csv", write_place_metrics_csv({{"place", r.metrics}}));
      out.write("cost_trace.csv", write_cost_trace_csv(r));
      std::cout << "placed hpwl=" << text::format_fixed(r.metrics.hpwl, 3)
                << " wns=" << text::format_fixed(r.metrics.wns, 6) << " tns=" << text::format_fixed(r.metrics.tns, 6)
                << " seconds=" << text::format_fixed(r.metrics.seconds, 3) << "\n";
    };
  });

  // flow
  auto* fl = app.add_subcommand("flow", "train on reference designs, then compare guided and baseline placement");
  std::vector<std::string> fl_train;
  std::string fl_test;
  fl->add_option("--train", fl_train, "DESIGN.rnl or DESIGN.rnl,REFERENCE.rpl (repeatable)")->required();
  fl->add_option("--test", fl_test, "held-out DESIGN.rnl")->required();
  fl->callback([&] {
    action = [&] {
      RunConfig cfg = load_run_config(g);
      std::vector<std::pair<Netlist, std::optional<Placement>>> train_set;
      for (const std::string& spec : fl_train) {
        auto comma = spec.find(',');
        Netlist nl = load_netlist(spec.substr(0, comma));
        std::optional<Placement> ref;
        if (comma != std::string::npos) ref = load_placement(spec.substr(comma + 1), nl);
        train_set.emplace_back(std::move(nl), std::move(ref));
      }
      Netlist test = load_netlist(fl_test);
      Output out(g.out, cfg);
      FlowResult r = run_flow(train_set, test, cfg);
      out.write("dataset.csv", write_dataset_csv(r.dataset));
      out.write("schema.json", write_schema(r.dataset.schema));
      out.write("model.json", save_model(r.model));
      out.write("predictions.csv", write_predictions_csv(r.predictions, test));
      out.write("baseline.rpl", write_placement(test, r.arms.baseline.placement));
      out.write("guided.rpl", write_placement(test, r.arms.guided.placement));
      out.write("place_metrics.csv", write_place_metrics_csv({{"baseline", r.arms.baseline.metrics},
                                                              {"guided", r.arms.guided.metrics}}));
      out.write("flow_report.csv", r.report.csv());
      out.write("flow_report.txt", r.report.table());
      std::cout << "flow tns baseline=" << text::format_fixed(r.report.baseline.tns, 6)
                << " guided=" << text::format_fixed(r.report.guided.tns, 6)
                << " iters_to_match=" << r.report.guided.iters << "/" << r.report.budget << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    action();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: code=" << to_string(e.code()) << " message=" << one_line(e.what()) << "\n";
    std::error_code ec;
    if (fs::is_directory(g.out, ec) && fs::exists(fs::path(g.out) / "config.effective", ec))
      text::write_file((fs::path(g.out) / "FAILED").string(),
                       "code=" + std::string(to_string(e.code())) + " message=" + one_line(e.what()) + "\n");
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: code=internal message=" << one_line(e.what()) << "\n";
    return 11;
  }
}
