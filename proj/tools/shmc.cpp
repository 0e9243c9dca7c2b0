// shmc: command-line front end for the samplers and experiment drivers.
//
// Exit codes: 0 success, 1 golden mismatch, 2 invalid configuration,
// 3 divergence, 4 I/O failure.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "shmc/chain.hpp"
#include "shmc/config.hpp"
#include "shmc/csv_io.hpp"
#include "shmc/experiments.hpp"
#include "shmc/golden.hpp"
#include "shmc/repro.hpp"

namespace fs = std::filesystem;
using namespace shmc;

namespace {

constexpr int kExitMismatch = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

const std::map<std::string, std::string>& key_help() {
  static const std::map<std::string, std::string> help = {
      {"model", "toy | lingauss | logistic2d"},
      {"data", "CSV data file (default: synthetic data)"},
      {"data_seed", "seed of the synthetic data generator"},
      {"features", "lingauss: number of trig features D"},
      {"obs", "synthetic data: number of observations"},
      {"noise_var", "lingauss: likelihood noise variance"},
      {"prior_var", "prior variance"},
      {"scheme",
       "euler | leapfrog | spv | lie-trotter | symmetric | mt3 | sghmc | hmc | exact "
       "(sweep/geom: comma list)"},
      {"eta", "step size"},
      {"eta_grid", "comma list of step sizes"},
      {"c", "friction C (geom: comma list)"},
      {"k", "number of mini-batches (sweep/opcheck: comma list)"},
      {"mode", "full | perm | iid"},
      {"nl", "inner leapfrog steps N_l (lie-trotter, hmc)"},
      {"vhat", "SGHMC noise estimate"},
      {"mass", "comma list: diagonal mass matrix (default identity)"},
      {"n", "kept samples (sweep: per replicate)"},
      {"burn_in", "steps discarded before the first kept sample"},
      {"thin", "steps between kept samples"},
      {"thin_time", "sweep: simulated time between kept samples (overrides thin)"},
      {"replicates", "sweep: chains per cell"},
      {"self_reps", "sweep: self-distance repetitions"},
      {"coupled", "sweep: coupled control-variate estimates (true/false)"},
      {"stream", "sample: RNG stream id"},
      {"seed", "RNG seed"},
      {"jobs", "worker threads"},
      {"bins", "toy: histogram bins"},
      {"sigma_x2", "toy: likelihood variance"},
      {"sigma_theta2", "toy: prior variance"},
      {"x1", "toy: first observation"},
      {"x2", "toy: second observation"},
      {"trials", "opcheck: random generator sets"},
      {"dims", "opcheck: comma list of matrix sizes"},
      {"frobenius", "opcheck: use the Frobenius norm"},
      {"probes", "geom: random states per (scheme, C)"},
      {"fd_eps", "geom: finite-difference step"},
      {"target", "repro: fig1 | fig3 | theorems | all"},
      {"toy_n", "repro: toy samples per mode"},
      {"golden", "golden: frozen file to check against"},
      {"regen_golden", "golden: write freshly computed values"},
  };
  return help;
}

const std::vector<std::string> kCommonKeys = {"seed", "jobs"};
const std::vector<std::string> kModelKeys = {"model", "data", "data_seed", "features",
                                             "obs",   "noise_var", "prior_var", "k"};

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (char& ch : s) {
    if (ch == '_') ch = '-';
  }
  if (key == "c") return "--C";
  if (key == "k") return "--K";
  return "--" + s;
}

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

ModelKind parse_model(const std::string& s) {
  if (s == "toy") return ModelKind::kToy1d;
  if (s == "lingauss") return ModelKind::kLinearGaussian;
  if (s == "logistic2d") return ModelKind::kLogistic2d;
  throw ConfigError("unknown model '" + s + "' (toy, lingauss, logistic2d)");
}

std::size_t to_count(std::int64_t v, const std::string& what) {
  if (v < 0) throw ConfigError(what + " must be >= 0");
  return static_cast<std::size_t>(v);
}

std::size_t to_positive(std::int64_t v, const std::string& what) {
  if (v < 1) throw ConfigError(what + " must be >= 1");
  return static_cast<std::size_t>(v);
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

ModelConfig read_model(const RunConfig& cfg, std::size_t k) {
  ModelConfig m;
  m.kind = parse_model(cfg.get_string("model", "lingauss"));
  m.n_batches = k;
  m.data_path = cfg.get_string("data", "");
  m.data_seed = cfg.get_uint("data_seed", 1);
  if (m.kind == ModelKind::kLinearGaussian) {
    m.regression.n_features = static_cast<Index>(to_positive(cfg.get_int("features", 2), "features"));
    m.regression.n_obs = to_count(cfg.get_int("obs", 16), "obs");
    m.regression.noise_var = cfg.get_double("noise_var", 1.0);
    m.regression.prior_var = cfg.get_double("prior_var", 1.0);
  } else if (m.kind == ModelKind::kLogistic2d) {
    m.logistic_n = to_positive(cfg.get_int("obs", 64), "obs");
    m.logistic_prior_var = cfg.get_double("prior_var", 1.0);
  }
  return m;
}

double default_friction(const RunConfig& cfg) {
  return cfg.get_string("model", "lingauss") == "toy" ? 2.0 : 5.0;
}

struct Run {
  RunConfig cfg;
  fs::path dir;
  std::string command;
};

void write_meta(const Run& run, Metadata extra = {}) {
  Metadata meta{{"command", run.command}, {"version", "0.1.0"}};
  for (auto& [key, value] : run.cfg.echo()) meta.emplace_back("config." + key, value);
  for (auto& kv : extra) meta.push_back(std::move(kv));
  write_metadata(run.dir / "meta.txt", meta);
}

// --- commands ---------------------------------------------------------------

int cmd_sample(Run& run) {
  const RunConfig& c = run.cfg;
  SampleConfig s;
  const std::size_t k = to_positive(c.get_int("k", 1), "K");
  s.model = read_model(c, k);
  s.scheme = c.get_string("scheme", "leapfrog");
  s.eta = c.get_double("eta", 0.01);
  s.friction = c.get_double("c", default_friction(c));
  s.mass = to_vector(c.get_doubles("mass", {}));
  s.inner_steps = static_cast<int>(to_positive(c.get_int("nl", 1), "nl"));
  s.v_hat = c.get_double("vhat", 0.0);
  s.mode = parse_batch_mode(c.get_string("mode", k > 1 ? "perm" : "full"));
  s.chain.n_samples = to_positive(c.get_int("n", 1000), "n");
  s.chain.burn_in = to_count(c.get_int("burn_in", 2000), "burn_in");
  s.chain.thinning = to_positive(c.get_int("thin", 500), "thin");
  s.chain.seed = c.get_uint("seed", 1);
  s.chain.stream = c.get_uint("stream", 0);
  if (!(s.eta > 0.0)) throw ConfigError("eta must be > 0");
  s.chain.validate();
  fs::create_directories(run.dir);
  try {
    const Trace trace = run_sample(s);
    write_trace_csv(run.dir / "trace.csv", trace);
    write_meta(run, trace.meta);
  } catch (const ChainDivergence& e) {
    write_trace_csv(run.dir / "trace.csv", e.partial());
    std::ostringstream os;
    os << "scheme " << to_string(e.scheme()) << ", eta " << format_double(e.eta())
       << ": non-finite state at step " << e.step() << "\n";
    write_text_file(run.dir / "divergence.txt", os.str());
    write_meta(run, e.partial().meta);
    std::cerr << "divergence: " << os.str();
    return kExitDivergence;
  }
  std::cout << run.dir.string() << "\n";
  return 0;
}

std::vector<Scheme> parse_schemes(const std::vector<std::string>& names) {
  std::vector<Scheme> out;
  for (const auto& n : names) out.push_back(parse_scheme(n));
  if (out.empty()) throw ConfigError("scheme list is empty");
  return out;
}

int cmd_sweep(Run& run) {
  const RunConfig& c = run.cfg;
  SweepConfig s;
  const auto ks = c.get_doubles("k", {1});
  for (double k : ks) {
    if (k < 1 || k != std::floor(k)) throw ConfigError("K must be a positive integer");
    s.batch_counts.push_back(static_cast<std::size_t>(k));
  }
  s.model = read_model(c, 1);
  if (s.model.kind == ModelKind::kLogistic2d) {
    throw ConfigError("sweep needs an analytic posterior; logistic2d has none");
  }
  s.schemes = parse_schemes(c.get_strings("scheme", {"mt3"}));
  s.etas = c.get_doubles("eta_grid", s.etas);
  s.mode = parse_batch_mode(c.get_string("mode", "perm"));
  s.friction = c.get_double("c", 5.0);
  s.mass = to_vector(c.get_doubles("mass", {}));
  s.inner_steps = static_cast<int>(to_positive(c.get_int("nl", 1), "nl"));
  s.v_hat = c.get_double("vhat", 0.0);
  s.n = to_positive(c.get_int("n", 25000), "n");
  s.burn_in = to_count(c.get_int("burn_in", 20000), "burn_in");
  s.thinning = to_positive(c.get_int("thin", 400), "thin");
  s.thin_time = c.get_double("thin_time", 0.0);
  s.replicates = static_cast<int>(to_positive(c.get_int("replicates", 4), "replicates"));
  s.self_reps = to_positive(c.get_int("self_reps", 50), "self_reps");
  s.coupled = c.get_bool("coupled", true);
  s.seed = c.get_uint("seed", 1);
  s.jobs = static_cast<int>(to_positive(c.get_int("jobs", 1), "jobs"));
  if (s.self_reps < 20) throw ConfigError("self_reps must be >= 20");
  fs::create_directories(run.dir);
  const SweepResult r = run_sweep(s);
  write_text_file(run.dir / "summary.csv", sweep_summary_csv(r));
  write_text_file(run.dir / "slopes.csv", sweep_slopes_csv(r));
  write_meta(run);
  std::cout << run.dir.string() << "\n";
  return 0;
}

int cmd_toy(Run& run) {
  const RunConfig& c = run.cfg;
  ToyRunConfig t;
  t.params.sigma_x2 = c.get_double("sigma_x2", t.params.sigma_x2);
  t.params.sigma_theta2 = c.get_double("sigma_theta2", t.params.sigma_theta2);
  t.params.x1 = c.get_double("x1", t.params.x1);
  t.params.x2 = c.get_double("x2", t.params.x2);
  t.params.friction = c.get_double("c", t.params.friction);
  t.eta = c.get_double("eta", 0.4);
  t.n = to_positive(c.get_int("n", 100000), "n");
  t.burn_in = to_count(c.get_int("burn_in", 1000), "burn_in");
  t.thinning = to_count(c.get_int("thin", 0), "thin");
  t.bins = static_cast<int>(to_positive(c.get_int("bins", 128), "bins"));
  t.seed = c.get_uint("seed", 1);
  if (t.n < 10000) throw ConfigError("toy: n must be >= 10000");
  t.params.validate();
  if (!(t.eta > 0.0)) throw ConfigError("eta must be > 0");
  fs::create_directories(run.dir);
  const ToyRunResult r = run_toy(t);
  write_text_file(run.dir / "summary.csv", toy_summary_csv(t, r));
  write_text_file(run.dir / "hist_full.csv", histogram_csv(r.full.histogram));
  write_text_file(run.dir / "hist_minibatch.csv", histogram_csv(r.minibatch.histogram));
  write_meta(run, {{"thin_resolved", std::to_string(r.thinning)}});
  std::cout << run.dir.string() << "\n";
  return 0;
}

int cmd_opcheck(Run& run) {
  const RunConfig& c = run.cfg;
  OpcheckConfig o;
  o.trials = to_positive(c.get_int("trials", 100), "trials");
  o.ks.clear();
  for (double k : c.get_doubles("k", {2, 3})) {
    if (k < 1 || k != std::floor(k)) throw ConfigError("K must be a positive integer");
    o.ks.push_back(static_cast<std::size_t>(k));
  }
  o.ns.clear();
  for (double n : c.get_doubles("dims", {2, 3, 4})) {
    if (n < 1 || n != std::floor(n)) throw ConfigError("dims must be positive integers");
    o.ns.push_back(static_cast<Index>(n));
  }
  o.etas = c.get_doubles("eta_grid", o.etas);
  o.frobenius = c.get_bool("frobenius", false);
  o.seed = c.get_uint("seed", 1);
  // Validate before creating anything on disk.
  for (auto k : o.ks) {
    if (k > 6) throw ConfigError("opcheck: K > 6 is not supported (exact K! enumeration)");
  }
  fs::create_directories(run.dir);
  const OpcheckResult r = run_opcheck(o);
  write_text_file(run.dir / "summary.csv", opcheck_csv(r));
  write_text_file(run.dir / "slopes.csv", opcheck_slopes_csv(r));
  write_meta(run);
  std::cout << run.dir.string() << "\n";
  return 0;
}

int cmd_geom(Run& run) {
  const RunConfig& c = run.cfg;
  GeomConfig g;
  g.model = read_model(c, 1);
  g.schemes = parse_schemes(c.get_strings("scheme", {"euler", "leapfrog", "lie-trotter"}));
  g.eta = c.get_double("eta", 0.1);
  g.frictions = c.get_doubles("c", {0.0, 2.0});
  g.mass = to_vector(c.get_doubles("mass", {}));
  g.inner_steps = static_cast<int>(to_positive(c.get_int("nl", 1), "nl"));
  g.probes = to_positive(c.get_int("probes", 10), "probes");
  g.eps = c.get_double("fd_eps", 1e-5);
  g.seed = c.get_uint("seed", 1);
  fs::create_directories(run.dir);
  const auto rows = run_geom(g);
  write_text_file(run.dir / "summary.csv", geom_csv(rows));
  write_meta(run);
  std::cout << run.dir.string() << "\n";
  return 0;
}

int cmd_repro(Run& run) {
  const RunConfig& c = run.cfg;
  ReproOptions o;
  o.seed = c.get_uint("seed", 1);
  o.jobs = static_cast<int>(to_positive(c.get_int("jobs", 1), "jobs"));
  o.sweep_n = to_positive(c.get_int("n", 2000), "n");
  o.sweep_thin_time = c.get_double("thin_time", 25.0);
  o.replicates = static_cast<int>(to_positive(c.get_int("replicates", 4), "replicates"));
  o.toy_n = to_positive(c.get_int("toy_n", 100000), "toy_n");
  o.opcheck_trials = to_positive(c.get_int("trials", 100), "trials");
  const std::string target = c.get_string("target", "all");
  if (target != "fig1" && target != "fig3" && target != "theorems" && target != "all") {
    throw ConfigError("repro target must be fig1, fig3, theorems or all");
  }
  if (!(o.sweep_thin_time > 0.0)) throw ConfigError("thin_time must be > 0");
  fs::create_directories(run.dir);
  std::vector<ReproCheck> checks;
  auto add = [&](std::vector<ReproCheck> more) {
    checks.insert(checks.end(), more.begin(), more.end());
  };
  if (target == "fig3" || target == "all") add(repro_fig3(o));
  if (target == "theorems" || target == "all") add(repro_theorems(o));
  if (target == "fig1" || target == "all") add(repro_fig1(o));
  write_repro_report(run.dir, "Reproduction report (" + target + ")", checks);
  write_meta(run);
  for (const auto& ch : checks) {
    std::cout << to_string(ch.verdict) << "  " << ch.name << "  " << format_double(ch.value)
              << "  (" << ch.criterion << ")\n";
  }
  std::cout << run.dir.string() << "\n";
  return 0;
}

int cmd_golden(Run& run) {
  const RunConfig& c = run.cfg;
  const std::string frozen_path = c.get_string("golden", "");
  const bool regen = c.get_bool("regen_golden", false);
  if (frozen_path.empty() && !regen) {
    throw ConfigError("golden: pass --golden FILE to check, or --regen-golden");
  }
  const auto computed = compute_golden();
  fs::create_directories(run.dir);
  int code = 0;
  if (regen) {
    write_text_file(run.dir / "golden_values.csv", golden_csv(computed));
    std::cout << "wrote " << (run.dir / "golden_values.csv").string()
              << " (review the diff before replacing the frozen file)\n";
  }
  if (!frozen_path.empty()) {
    const auto checks = check_golden(read_golden(frozen_path), computed);
    std::ostringstream os;
    write_csv_row(os, {"key", "expected", "actual", "tolerance", "pass"});
    std::size_t failed = 0;
    for (const auto& ch : checks) {
      write_csv_row(os, {ch.key, format_double(ch.expected), format_double(ch.actual),
                         format_double(ch.tolerance), ch.pass ? "1" : "0"});
      if (!ch.pass) {
        ++failed;
        std::cerr << "mismatch: " << ch.key << " expected " << format_double(ch.expected)
                  << " got " << format_double(ch.actual) << "\n";
      }
    }
    write_text_file(run.dir / "summary.csv", os.str());
    std::cout << checks.size() - failed << "/" << checks.size() << " golden values match\n";
    if (failed) code = kExitMismatch;
  }
  write_meta(run);
  return code;
}

struct CommandDef {
  const char* name;
  const char* help;
  std::vector<std::string> keys;
  std::function<int(Run&)> run;
};

std::vector<CommandDef> commands() {
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  const auto chain_keys = std::vector<std::string>{"n", "burn_in", "thin"};
  return {
      {"sample", "run one chain and write trace.csv",
       with(with(with(kCommonKeys, kModelKeys), chain_keys),
            {"scheme", "eta", "c", "mode", "nl", "vhat", "mass", "stream"}),
       cmd_sample},
      {"sweep", "error sweep over schemes, step sizes and batch counts",
       with(with(with(kCommonKeys, kModelKeys), chain_keys),
            {"scheme", "eta_grid", "c", "mode", "nl", "vhat", "mass", "thin_time", "replicates",
             "self_reps", "coupled"}),
       cmd_sweep},
      {"toy", "exact-kernel toy chains, full vs mini-batch",
       with(with(kCommonKeys, chain_keys),
            {"eta", "c", "bins", "sigma_x2", "sigma_theta2", "x1", "x2"}),
       cmd_toy},
      {"opcheck", "operator-splitting error orders on random generators",
       with(kCommonKeys, {"trials", "k", "dims", "eta_grid", "frobenius"}), cmd_opcheck},
      {"geom", "Jacobian determinant and symplectic residual probes",
       with(with(kCommonKeys, kModelKeys), {"scheme", "eta", "c", "mass", "nl", "probes", "fd_eps"}),
       cmd_geom},
      {"repro", "reproduction checks with a pass/fail report",
       with(kCommonKeys, {"target", "n", "thin_time", "replicates", "toy_n", "trials"}), cmd_repro},
      {"golden", "recompute golden values; check or regenerate",
       with(kCommonKeys, {"golden", "regen_golden"}), cmd_golden},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shmc: stochastic-gradient Hamiltonian samplers and convergence experiments.\n"
               "Settings come from --config (key = value lines) and flags; flags win."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every command");

  const auto defs = commands();
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_file;
  std::map<std::string, std::string> out_dir;
  std::map<std::string, std::string> run_name;
  std::map<std::string, CLI::App*> subs;
  std::map<std::string, std::map<std::string, bool>> switches;
  const std::set<std::string> switch_keys = {"frobenius", "regen_golden", "coupled"};

  for (const auto& def : defs) {
    CLI::App* sub = app.add_subcommand(def.name, def.help);
    subs[def.name] = sub;
    sub->add_option("--config", config_file[def.name], "key = value settings file");
    sub->add_option("--out", out_dir[def.name], "output root (default: runs)");
    sub->add_option("--run-name", run_name[def.name],
                    "run directory name (default: <command>-<UTC time>-s<seed>)");
    auto& vals = values[def.name];
    for (const auto& key : def.keys) {
      const auto h = key_help().find(key);
      const std::string help = h == key_help().end() ? "" : h->second;
      if (switch_keys.count(key)) {
        sub->add_flag(flag_name(key), switches[def.name][key], help);
      } else {
        sub->add_option(flag_name(key), vals[key], help);
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (const auto& def : defs) {
    CLI::App* sub = subs[def.name];
    if (!sub->parsed()) continue;
    Run run;
    run.command = def.name;
    try {
      try {
        if (!config_file[def.name].empty()) run.cfg = RunConfig::from_file(config_file[def.name]);
        RunConfig flags;
        for (const auto& key : def.keys) {
          if (sub->get_option(flag_name(key))->count() == 0) continue;
          if (switch_keys.count(key)) {
            flags.set(key, switches[def.name][key] ? "true" : "false");
          } else {
            flags.set(key, values[def.name][key]);
          }
        }
        run.cfg.merge(flags);
        run.cfg.check_keys(std::set<std::string>(def.keys.begin(), def.keys.end()));
        const std::uint64_t seed = run.cfg.get_uint("seed", 1);
        const fs::path root = out_dir[def.name].empty() ? fs::path("runs") : fs::path(out_dir[def.name]);
        const std::string name = run_name[def.name].empty()
                                     ? std::string(def.name) + "-" + utc_stamp() + "-s" +
                                           std::to_string(seed)
                                     : run_name[def.name];
        run.dir = root / name;
        return def.run(run);
      } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      } catch (const ContractError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitConfig;
      } catch (const UnsupportedModelError& e) {
        std::cerr << "unsupported: " << e.what() << "\n";
        return kExitConfig;
      } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kExitDivergence;
      }
    } catch (const IoError& e) {
      std::cerr << "I/O error: " << e.what() << "\n";
      return kExitIo;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "I/O error: " << e.what() << "\n";
      return kExitIo;
    }
  }
  return kExitConfig;
}
