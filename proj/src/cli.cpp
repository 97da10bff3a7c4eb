#include "peerscore/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "peerscore/report.hpp"

namespace peerscore::cli {

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"sensitivity", "verify-sd", "optimal-enforcement",
                                          "budget",      "counterexample", "presets"};
  return c;
}

namespace {

std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError("empty number list");
  return out;
}

void set_default(Json& j, const char* key, Json value) {
  if (!j.contains(key)) j[key] = std::move(value);
}

Json names_json(const std::vector<std::string>& names) {
  Json a = Json::array();
  for (const auto& n : names) a.push_back(n);
  return a;
}

std::vector<MechanismSpec> mechanisms_of(const Json& cfg) {
  std::vector<MechanismSpec> out;
  for (const auto& m : cfg.at("mechanisms")) out.push_back(mechanism_from_json(m));
  if (out.empty()) throw ValidationError("no mechanisms given");
  return out;
}

template <typename T>
T get(const Json& cfg, const char* key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Output run_sensitivity(const Json& cfg) {
  const auto specs = mechanisms_of(cfg);
  const InfoStructure base = structure_from_json(cfg.at("structure"));
  SweepConfig sc;
  const auto& sweep = cfg.at("sweep");
  const auto axis = get<std::string>(sweep, "axis");
  if (axis == "n") sc.axis = SweepAxis::n;
  else if (axis == "prior") sc.axis = SweepAxis::prior;
  else throw ValidationError("sweep axis must be 'n' or 'prior'");
  sc.values = get<std::vector<double>>(sweep, "values");
  sc.n = get<int>(cfg, "n");
  sc.mc.e = get<double>(cfg, "e");
  sc.mc.de = get<double>(cfg, "de");
  sc.mc.replicates = get<int>(cfg, "T");
  sc.mc.seed = get<std::uint64_t>(cfg, "seed");
  sc.mc.bootstrap = get<bool>(cfg, "bootstrap");
  sc.force_monte_carlo = get<bool>(cfg, "force_monte_carlo");
  if (sc.axis == SweepAxis::n)
    for (double v : sc.values)
      if (v < 1.0 || v != std::floor(v)) throw ValidationError("n sweep values must be positive integers");
  const auto rows = sensitivity_sweep(specs, base, sc);
  Output out;
  out.text = sweep_csv(rows, provenance("sensitivity", cfg));
  out.summary = std::to_string(rows.size()) + " sweep rows";
  return out;
}

Output run_verify(const Json& cfg) {
  const MechanismSpec spec = mechanism_from_json(cfg.at("mechanism"));
  const InfoStructure info = structure_from_json(cfg.at("structure"));
  SearchConfig sc;
  sc.resolution = get<int>(cfg, "resolution");
  sc.max_grid = get<std::size_t>(cfg, "max_grid");
  sc.manipulations = get<bool>(cfg, "manipulations");
  sc.manipulations_only = get<bool>(cfg, "manipulations_only");
  sc.reallocations_only = get<bool>(cfg, "reallocations_only");
  sc.exact.max_states = get<double>(cfg, "max_states");
  const DominanceReport r = verify_sd_truthfulness(spec, info, get<int>(cfg, "n"), sc);
  Json j;
  j["provenance"] = provenance("verify-sd", cfg);
  j["report"] = dominance_json(r);
  Output out;
  out.text = dump(j);
  if (r.certified) {
    out.summary = "certified: " + r.mechanism + " over " + std::to_string(r.candidates) + " candidates";
  } else {
    const auto& w = *r.witness;
    out.summary = "refuted: " + r.mechanism + ", witness " +
                  (w.strategy ? w.strategy->describe() : std::string("manipulation matrix")) + ", t=" +
                  fmt(w.threshold) + ", gap=" + fmt(w.gap);
    out.exit_code = kExitRefuted;
  }
  return out;
}

Output run_optimal(const Json& cfg) {
  const InfoStructure info = structure_from_json(cfg.at("structure"));
  const int n = get<int>(cfg, "n");
  const auto opt = optimal_enforcement(info, n);
  Json j;
  j["provenance"] = provenance("optimal-enforcement", cfg);
  j["n0"] = opt.n0;
  j["literal_boundary"] = opt.literal_boundary;
  j["threshold_ratio"] = opt.threshold_ratio;
  if (get<bool>(cfg, "scan")) {
    const auto scan = scan_enforcement(info, n, get<double>(cfg, "e"));
    Json s;
    s["argmax_delta"] = scan.argmax_delta;
    s["argmax_gradient"] = scan.argmax_gradient;
    Json rows = Json::array();
    for (std::size_t k = 0; k < scan.moments.size(); ++k) {
      const auto& m = scan.moments[k];
      rows.push_back({{"n0", k},
                      {"mean", m.mean},
                      {"stddev", m.stddev},
                      {"conditional_stddev", m.conditional_stddev},
                      {"gradient", m.gradient},
                      {"delta", m.delta()}});
    }
    s["moments"] = rows;
    j["scan"] = s;
  }
  Output out;
  out.text = dump(j);
  out.summary = "n0=" + std::to_string(opt.n0) + " threshold_ratio=" + fmt(opt.threshold_ratio) +
                " (literal boundary " + std::to_string(opt.literal_boundary) + ")";
  return out;
}

Output run_budget(const Json& cfg) {
  const auto specs = mechanisms_of(cfg);
  const InfoStructure info = structure_from_json(cfg.at("structure"));
  SimulationConfig sc;
  sc.crowd = crowd_from_json(cfg.at("crowd"));
  sc.rounds = get<int>(cfg, "T");
  sc.de = get<double>(cfg, "de");
  sc.seed = get<std::uint64_t>(cfg, "seed");
  const auto table = budget_table(specs, get<std::vector<double>>(cfg, "efforts"),
                                  parse_scheme(get<std::string>(cfg, "scheme")), sc, info,
                                  get<double>(cfg, "percentile"));
  Output out;
  out.text = budget_csv(table, provenance("budget", cfg));
  out.summary = std::to_string(table.rows.size()) + " budget rows";
  return out;
}

Output run_counterexample(const Json& cfg) {
  Json j;
  j["provenance"] = provenance("counterexample", cfg);
  Json list = Json::array();
  std::size_t refuted = 0, total = 0;
  for (const auto& t : cfg.at("targets")) {
    const auto r = counterexample(t.get<std::string>());
    refuted += !r.dominance.certified;
    ++total;
    list.push_back(counterexample_json(r));
  }
  j["counterexamples"] = list;
  Output out;
  out.text = dump(j);
  out.summary = std::to_string(refuted) + " of " + std::to_string(total) + " counterexamples refuted";
  return out;
}

Output run_presets(const Json& cfg) {
  Json j;
  j["provenance"] = provenance("presets", cfg);
  Json list = Json::array();
  std::ostringstream text;
  const auto name = get<std::string>(cfg, "name");
  for (const auto& p : presets()) {
    if (!name.empty() && p.name != name) continue;
    Json pj;
    pj["name"] = p.name;
    pj["description"] = p.description;
    pj["structure"] = structure_to_json(p.info);
    pj["joint"] = matrix_to_json(p.info.joint());
    list.push_back(pj);
    text << p.name << ": " << p.description << "\n";
    if (const auto& m = p.info.source_model()) {
      text << "  W (prior):";
      for (double w : m->prior) text << ' ' << fmt(w);
      text << "\n  Gamma:\n";
      for (std::size_t r = 0; r < m->confusion.rows(); ++r) {
        text << "   ";
        for (double g : m->confusion.row(r)) text << ' ' << fmt(g);
        text << '\n';
      }
    }
    text << "  joint:\n";
    for (std::size_t r = 0; r < p.info.joint().rows(); ++r) {
      text << "   ";
      for (double g : p.info.joint().row(r)) text << ' ' << fmt(g);
      text << '\n';
    }
  }
  if (list.empty()) throw ValidationError("unknown structure preset '" + name + "'");
  j["presets"] = list;
  Output out;
  out.text = get<bool>(cfg, "list") ? text.str() : dump(j);
  out.summary = std::to_string(list.size()) + " presets";
  return out;
}

}  // namespace

Json parse_sweep(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError("sweep must look like axis:start:stop:step or axis:v1,v2");
  Json out;
  out["axis"] = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  std::vector<double> values;
  if (rest.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_number_list(item).at(0));
    if (parts.size() != 3 || parts[2] <= 0.0 || parts[1] < parts[0])
      throw ValidationError("range sweep needs start:stop:step with step > 0 and stop >= start");
    const auto steps = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long k = 0; k <= steps; ++k) {
      // round to suppress accumulated binary noise in values like 0.1*3
      const double v = parts[0] + static_cast<double>(k) * parts[2];
      values.push_back(std::round(v * 1e12) / 1e12);
    }
  } else {
    values = parse_number_list(rest);
  }
  out["values"] = values;
  return out;
}

Json normalize_config(const std::string& command, const Json& input) {
  Json cfg = input.is_null() ? Json::object() : input;
  if (!cfg.is_object()) throw ValidationError("config must be a JSON object");
  cfg.erase("command");
  if (command == "sensitivity") {
    set_default(cfg, "structure", "J1");
    set_default(cfg, "mechanisms", names_json({"oa", "pts-partition-round", "ca-partition-round",
                                               "ma-partition-round", "ea-prior", "ea-uniform", "ea-optimal"}));
    set_default(cfg, "sweep", parse_sweep("n:10:100:10"));
    if (cfg.at("sweep").is_string()) cfg["sweep"] = parse_sweep(cfg.at("sweep").get<std::string>());
    set_default(cfg, "n", 100);
    set_default(cfg, "e", 1.0);
    set_default(cfg, "de", 0.2);
    set_default(cfg, "T", 20000);
    set_default(cfg, "seed", 7);
    set_default(cfg, "bootstrap", false);
    set_default(cfg, "force_monte_carlo", false);
  } else if (command == "verify-sd") {
    set_default(cfg, "structure", "J1");
    set_default(cfg, "mechanism", "ea");
    set_default(cfg, "n", 4);
    SearchConfig d;
    set_default(cfg, "resolution", d.resolution);
    set_default(cfg, "max_grid", d.max_grid);
    set_default(cfg, "manipulations", d.manipulations);
    set_default(cfg, "manipulations_only", d.manipulations_only);
    set_default(cfg, "reallocations_only", d.reallocations_only);
    set_default(cfg, "max_states", d.exact.max_states);
  } else if (command == "optimal-enforcement") {
    set_default(cfg, "structure", "J1");
    set_default(cfg, "n", 100);
    set_default(cfg, "scan", false);
    set_default(cfg, "e", 1.0);
  } else if (command == "budget") {
    set_default(cfg, "structure", "J1");
    set_default(cfg, "scheme", "threshold");
    const bool linear = cfg.at("scheme") == "linear";
    set_default(cfg, "mechanisms",
                names_json(linear ? truthful_budget_mechanisms() : sd_truthful_budget_mechanisms()));
    set_default(cfg, "efforts", std::vector<double>{0.6, 0.7, 0.8, 0.9});
    set_default(cfg, "percentile", 75.0);
    set_default(cfg, "T", 10000);
    set_default(cfg, "de", 0.1);
    set_default(cfg, "seed", 11);
    set_default(cfg, "crowd", crowd_to_json(CrowdConfig{}));
  } else if (command == "counterexample") {
    set_default(cfg, "targets", names_json(counterexample_targets()));
  } else if (command == "presets") {
    set_default(cfg, "list", false);
    set_default(cfg, "name", "");
  } else {
    throw ValidationError("unknown command '" + command + "'");
  }
  return cfg;
}

Output execute(const std::string& command, const Json& cfg) {
  if (command == "sensitivity") return run_sensitivity(cfg);
  if (command == "verify-sd") return run_verify(cfg);
  if (command == "optimal-enforcement") return run_optimal(cfg);
  if (command == "budget") return run_budget(cfg);
  if (command == "counterexample") return run_counterexample(cfg);
  if (command == "presets") return run_presets(cfg);
  throw ValidationError("unknown command '" + command + "'");
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << text;
  if (!f) throw ValidationError("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct Common {
  std::string config_path;
  std::string out_path;
  int threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config; its fields override flags");
  sub->add_option("--out", c.out_path, "output file (default: stdout)");
  sub->add_option("--threads", c.threads, "thread count (same as PEERSCORE_THREADS)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"peerscore: peer prediction mechanisms, SD-truthfulness checks and sensitivity experiments"};
  app.require_subcommand(1);
  Common common;
  Json flags = Json::object();

  std::string structure, mechanism, sweep, scheme, target, preset_name, replay_path;
  std::vector<std::string> mechanisms;
  std::string efforts;
  int n = 0, T = 0, resolution = 0;
  double e = 0, de = 0, pct = 0;
  std::uint64_t seed = 0;
  bool bootstrap = false, force_mc = false, realloc = false, manip_only = false, no_manip = false, scan = false,
       list = false, all = false;

  auto* sens = app.add_subcommand("sensitivity", "sensitivity sweeps (CSV)");
  sens->add_option("--structure", structure);
  sens->add_option("--mechanisms", mechanisms)->delimiter(',');
  sens->add_option("--sweep", sweep, "n:10:100:10 or prior:0.1:0.9:0.1");
  sens->add_option("--n", n, "questions for prior sweeps");
  sens->add_option("--e", e);
  sens->add_option("--de", de);
  sens->add_option("--T,-T", T, "Monte Carlo replicates");
  sens->add_option("--seed", seed);
  sens->add_flag("--bootstrap", bootstrap);
  sens->add_flag("--monte-carlo", force_mc, "skip closed forms");
  add_common(sens, common);

  auto* ver = app.add_subcommand("verify-sd", "certify or refute SD-truthfulness (JSON)");
  ver->add_option("--mechanism", mechanism);
  ver->add_option("--structure", structure);
  ver->add_option("--n", n);
  ver->add_option("--resolution", resolution);
  ver->add_flag("--reallocations-only", realloc);
  ver->add_flag("--manipulations-only", manip_only);
  ver->add_flag("--no-manipulations", no_manip);
  add_common(ver, common);

  auto* opt = app.add_subcommand("optimal-enforcement", "optimal EA target for binary structures (JSON)");
  opt->add_option("--structure", structure);
  opt->add_option("--n", n);
  opt->add_option("--e", e);
  opt->add_flag("--scan", scan, "also brute-force every n0");
  add_common(opt, common);

  auto* bud = app.add_subcommand("budget", "payment fitting on the crowd simulation (CSV)");
  bud->add_option("--structure", structure);
  bud->add_option("--mechanisms", mechanisms)->delimiter(',');
  bud->add_option("--efforts", efforts, "comma-separated effort targets");
  bud->add_option("--scheme", scheme, "threshold or linear");
  bud->add_option("--percentile", pct);
  bud->add_option("--T,-T", T, "rounds");
  bud->add_option("--de", de);
  bud->add_option("--seed", seed);
  add_common(bud, common);

  auto* cex = app.add_subcommand("counterexample", "rerun the documented counterexamples (JSON)");
  cex->add_option("--target", target);
  cex->add_flag("--all", all);
  add_common(cex, common);

  auto* pre = app.add_subcommand("presets", "bundled information structures");
  pre->add_flag("--list", list, "plain-text listing");
  pre->add_option("--name", preset_name);
  add_common(pre, common);

  auto* rep = app.add_subcommand("replay", "rerun a report from its provenance and compare bytes");
  rep->add_option("file", replay_path)->required();
  rep->add_option("--threads", common.threads);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e2) {
    err << "error: " << e2.what() << "\n" << app.help();
    return kExitValidation;
  }

  auto given = [](CLI::App* s, const char* name) {
    const CLI::Option* o = s->get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };
  try {
    if (common.threads > 0) setenv("PEERSCORE_THREADS", std::to_string(common.threads).c_str(), 1);
    const auto t0 = std::chrono::steady_clock::now();

    std::string command;
    Json cfg;
    std::string expected;
    if (*rep) {
      expected = read_file(replay_path);
      const Json prov = extract_provenance(expected);
      command = prov.at("command").get<std::string>();
      cfg = prov.at("config");
    } else {
      CLI::App* sub = app.get_subcommands().front();
      command = sub->get_name();
      if (given(sub, "--structure")) flags["structure"] = structure;
      if (given(sub, "--mechanisms")) flags["mechanisms"] = names_json(mechanisms);
      if (given(sub, "--mechanism")) flags["mechanism"] = mechanism;
      if (given(sub, "--n")) flags["n"] = n;
      if (given(sub, "--e")) flags["e"] = e;
      if (given(sub, "--de")) flags["de"] = de;
      if (given(sub, "--T")) flags["T"] = T;
      if (given(sub, "--seed")) flags["seed"] = seed;
      if (sub == sens) {
        if (given(sub, "--sweep")) flags["sweep"] = parse_sweep(sweep);
        if (bootstrap) flags["bootstrap"] = true;
        if (force_mc) flags["force_monte_carlo"] = true;
      }
      if (sub == ver) {
        if (given(sub, "--resolution")) flags["resolution"] = resolution;
        if (realloc) flags["reallocations_only"] = true;
        if (manip_only) flags["manipulations_only"] = true;
        if (no_manip) flags["manipulations"] = false;
      }
      if (sub == opt && scan) flags["scan"] = true;
      if (sub == bud) {
        if (given(sub, "--efforts")) flags["efforts"] = parse_number_list(efforts);
        if (given(sub, "--scheme")) flags["scheme"] = scheme;
        if (given(sub, "--percentile")) flags["percentile"] = pct;
      }
      if (sub == cex && given(sub, "--target") && !all) flags["targets"] = names_json({target});
      if (sub == pre) {
        if (list) flags["list"] = true;
        if (given(sub, "--name")) flags["name"] = preset_name;
      }
      if (!common.config_path.empty()) {
        const Json file = load_json_file(common.config_path);
        if (!file.is_object()) throw ValidationError("config file must hold a JSON object");
        for (const auto& [k, v] : file.items()) flags[k] = v;
      }
      cfg = flags;
    }
    cfg = normalize_config(command, cfg);
    const Output result = execute(command, cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (*rep) {
      if (result.text == expected) {
        out << "replay identical: " << replay_path << " (" << command << ")\n";
        return kExitOk;
      }
      err << "replay differs: " << replay_path << " (" << command << ")\n";
      return kExitFailure;
    }
    if (common.out_path.empty()) {
      out << result.text;
      err << result.summary << " [" << fmt(secs) << " s]\n";
    } else {
      write_file(common.out_path, result.text);
      out << result.summary << " -> " << common.out_path << " [" << fmt(secs) << " s]\n";
    }
    return result.exit_code;
  } catch (const ValidationError& ex) {
    err << "validation error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const BudgetExceeded& ex) {
    err << "budget exceeded: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitFailure;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace peerscore::cli
