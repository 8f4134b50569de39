#include "hklab/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "hklab/cli/properties.hpp"
#include "hklab/counterexamples.hpp"
#include "hklab/inverse.hpp"

namespace hklab::cli {

namespace {

Json to_json(const RVector& x) {
  Json a = Json::array();
  for (int i = 0; i < x.size(); ++i) a.push_back(x(i));
  return a;
}

Json to_json(const RMatrix& m) {
  Json a = Json::array();
  for (int i = 0; i < m.rows(); ++i) a.push_back(to_json(RVector(m.row(i).transpose())));
  return a;
}

class Recorder {
 public:
  explicit Recorder(RunResult& r) : r_(r) {
    r_.record["scalars"] = Json::object();
    r_.record["arrays"] = Json::object();
  }

  void scalar(const std::string& key, const Json& value) { r_.record["scalars"][key] = value; }

  void site_array(const std::string& name, const RVector& values) {
    r_.record["arrays"][name] = to_json(values);
    CsvTable t{{"site", "value"}, {}};
    for (int i = 0; i < values.size(); ++i) t.rows.push_back({double(i), values(i)});
    r_.tables[name] = std::move(t);
  }

  void index_array(const std::string& name, const RVector& values) {
    r_.record["arrays"][name] = to_json(values);
    CsvTable t{{"index", "value"}, {}};
    for (int i = 0; i < values.size(); ++i) t.rows.push_back({double(i), values(i)});
    r_.tables[name] = std::move(t);
  }

  void matrix(const std::string& name, const RMatrix& m) {
    r_.record["arrays"][name] = to_json(m);
    CsvTable t{{"x", "y", "value"}, {}};
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) t.rows.push_back({double(i), double(j), m(i, j)});
    r_.tables[name] = std::move(t);
  }

  void magnetization(const std::string& name, const Magnetization& m) {
    Json a = Json::array();
    CsvTable t{{"site", "mx", "my", "mz"}, {}};
    for (std::size_t x = 0; x < m.values.size(); ++x) {
      a.push_back({m.values[x][0], m.values[x][1], m.values[x][2]});
      t.rows.push_back({double(x), m.values[x][0], m.values[x][1], m.values[x][2]});
    }
    r_.record["arrays"][name] = a;
    r_.tables[name] = std::move(t);
  }

  void verdict(bool ok) {
    r_.record["verdict"] = ok;
    r_.exit_code = ok ? kSuccess : kVerdictFalse;
  }

 private:
  RunResult& r_;
};

struct System {
  std::unique_ptr<OccupationBasis> basis;
  std::optional<ManyBodyOperator> h;
};

System build_system(const Config& c) {
  System s;
  if (c.ensemble == Ensemble::canonical) {
    auto b = std::make_unique<SectorBasis>(c.space, c.num_particles);
    s.h.emplace(assemble_hamiltonian(*b, c.one_body(), c.pair()));
    s.basis = std::move(b);
  } else {
    auto b = std::make_unique<FockBasis>(c.space, c.num_particles);
    s.h.emplace(assemble_fock_hamiltonian(*b, c.one_body(), c.pair()));
    s.basis = std::move(b);
  }
  return s;
}

GibbsState gibbs_of(const Config& c, const ManyBodyOperator& h) {
  if (!c.temperature) throw ConfigError("temperature", "required by this command");
  return c.ensemble == Ensemble::canonical ? gibbs_canonical(h, *c.temperature)
                                           : gibbs_grand_canonical(h, *c.temperature);
}

void require_canonical(const Config& c, const std::string& what) {
  if (c.ensemble != Ensemble::canonical)
    throw ConfigError("particles.ensemble", what + " needs the canonical ensemble");
}

SolverOptions solver_options(Params& p) {
  SolverOptions o;
  o.degeneracy_tol = p.number("degeneracy_tol", o.degeneracy_tol);
  const std::string kind = p.text("solver", "automatic");
  if (kind == "automatic") o.kind = SolverKind::automatic;
  else if (kind == "dense") o.kind = SolverKind::dense;
  else if (kind == "lanczos") o.kind = SolverKind::lanczos;
  else throw ConfigError(p.path("solver"), "expected automatic, dense or lanczos");
  return o;
}

void record_reduced(Recorder& rec, const OccupationBasis& basis, const QuantumState& st,
                    bool pair) {
  const DensityProfile rho = density(basis, st);
  rec.site_array("density", rho.values);
  rec.scalar("mass", rho.mass());
  if (pair) rec.matrix("pair_density", pair_density(basis, st).values);
  const OneRDM gamma = one_rdm(basis, st);
  rec.index_array("gamma_eigenvalues", gamma.occupations());
  if (basis.space().spin_dim() == 2)
    rec.magnetization("magnetization", magnetization_from_rdm(gamma, basis.space()));
}

void cmd_solve(Config& c, Recorder& rec) {
  Params p = c.params();
  p.allow({"degeneracy_tol", "solver"});
  require_canonical(c, "solve");
  const SolverOptions opt = solver_options(p);
  const SectorBasis basis(c.space, c.num_particles);
  const ManyBodyOperator h = assemble_hamiltonian(basis, c.one_body(), c.pair());
  const GroundSolution g = ground_state(h, opt);
  const QuantumState st = QuantumState::pure(g.vector());
  const ZeroReport zeros = check_nonvanishing(g.vector());
  rec.scalar("energy", g.energy);
  rec.scalar("gap", std::isfinite(g.gap) ? Json(g.gap) : Json(nullptr));
  rec.scalar("degeneracy", g.degeneracy);
  rec.scalar("dimension", basis.dim());
  rec.scalar("zero_amplitudes", zeros.zero_count);
  rec.scalar("min_abs_amplitude", zeros.min_abs);
  record_reduced(rec, basis, st, c.num_particles >= 2);
  rec.verdict(true);
}

void cmd_thermal(Config& c, Recorder& rec) {
  Params p = c.params();
  p.allow({});
  System s = build_system(c);
  const GibbsState g = gibbs_of(c, *s.h);
  const double s_val = entropy(g.state);
  rec.scalar("temperature", g.temperature);
  rec.scalar("log_partition", g.log_partition);
  rec.scalar("partition_function",
             std::isfinite(g.partition_function) ? Json(g.partition_function) : Json(nullptr));
  rec.scalar("free_energy", g.free_energy);
  rec.scalar("entropy", s_val);
  rec.scalar("energy", g.state.expectation(*s.h));
  rec.scalar("dimension", s.basis->dim());
  int max_n = 0;
  for (Mask m : s.basis->masks()) max_n = std::max(max_n, popcount(m));
  record_reduced(rec, *s.basis, g.state, max_n >= 2);
  rec.verdict(true);
}

void cmd_metric(Config& c, Recorder& rec) {
  Params p = c.params();
  p.allow({"kind"});
  const std::string kind = p.text("kind", "ground");
  Config c2 = second_system(c);
  if (kind == "ground") {
    require_canonical(c, "metric ground");
    if (c.field || c2.field || c.extra.size() || c2.extra.size())
      throw ConfigError("B", "ground metric compares local potentials only");
    if (c.w.size() != c2.w.size() || (c.w.size() && (c.w - c2.w).cwiseAbs().maxCoeff() != 0.0))
      throw ConfigError("system2.w", "both systems must share w");
    const GroundSystem a = solve_system(c.space, c.num_particles, c.v, c.pair());
    const GroundSystem b = solve_system(c.space, c.num_particles, c2.v, c.pair());
    const double d = hk_semimetric(a, b);
    const auto [s1, s2] = variational_slacks(a, b);
    rec.scalar("semimetric", d);
    rec.scalar("semimetric_worst", hk_semimetric_worst(a, b));
    rec.scalar("slack1", s1);
    rec.scalar("slack2", s2);
    rec.scalar("energy1", a.energy);
    rec.scalar("energy2", b.energy);
    rec.site_array("density1", a.density.values);
    rec.site_array("density2", b.density.values);
    rec.verdict(d >= -1e-9 && s1 >= -1e-9 && s2 >= -1e-9);
  } else if (kind == "thermal" || kind == "nonlocal") {
    System s1 = build_system(c);
    System s2 = build_system(c2);
    const GibbsState g1 = gibbs_of(c, *s1.h);
    const GibbsState g2 = gibbs_of(c2, *s2.h);
    double value = 0.0;
    if (kind == "thermal") {
      if (c.field || c2.field || c.extra.size() || c2.extra.size())
        throw ConfigError("B", "thermal metric compares local potentials; use kind nonlocal");
      const ThermalSystem a = thermal_system(*s1.basis, g1, c.v);
      const ThermalSystem b = thermal_system(*s2.basis, g2, c2.v);
      value = thermal_semimetric(a, b);
      rec.scalar("thermal_semimetric", value);
      rec.scalar("entropy1", a.entropy);
      rec.scalar("entropy2", b.entropy);
      rec.site_array("density1", a.density.values);
      rec.site_array("density2", b.density.values);
    } else {
      const NonlocalThermalSystem a = nonlocal_thermal_system(*s1.basis, g1, c.external());
      const NonlocalThermalSystem b = nonlocal_thermal_system(*s2.basis, g2, c2.external());
      value = nonlocal_thermal_pairing(a, b);
      rec.scalar("nonlocal_pairing", value);
      rec.scalar("entropy1", a.entropy);
      rec.scalar("entropy2", b.entropy);
    }
    rec.scalar("log_partition1", g1.log_partition);
    rec.scalar("log_partition2", g2.log_partition);
    rec.scalar("trace_distance", trace_distance(g1.state, g2.state));
    rec.verdict(value >= -1e-9);
  } else {
    throw ConfigError(p.path("kind"), "expected ground, thermal or nonlocal");
  }
}

RVector gauge_mean_zero(RVector v) {
  v.array() -= v.mean();
  return v;
}

void cmd_invert(Config& c, Recorder& rec) {
  Params p = c.params();
  p.allow({"target", "tol", "max_iter", "v_init", "w_init", "t_bracket", "density_csv"});
  const std::string target = p.text("target", "density");
  InversionOptions opt;
  opt.tol = p.number("tol", opt.tol);
  opt.max_iter = p.integer("max_iter", opt.max_iter);
  const int L = c.space.num_sites();
  const RVector v_init = p.has("v_init") ? c.potential(p.raw("v_init"), p.path("v_init"), L)
                                         : RVector::Zero(L);
  InversionFamily family{c.space, c.num_particles, c.ensemble, c.pair(), c.temperature};
  if (c.field || c.extra.size()) throw ConfigError("B", "inversion families have no B or G");
  const bool gauge = c.ensemble == Ensemble::canonical;
  const RVector v_true = gauge ? gauge_mean_zero(c.v) : c.v;

  struct Forward {
    DensityProfile rho;
    double entropy = 0.0;
    double log_partition = 0.0;
    std::optional<PairDensity> rho2;
  };
  const auto forward = [&](bool want_pair) {
    System s = build_system(c);
    Forward f;
    if (family.temperature) {
      const GibbsState g = gibbs_of(c, *s.h);
      f = {density(*s.basis, g.state), entropy(g.state), g.log_partition, std::nullopt};
      if (want_pair) f.rho2 = pair_density(*s.basis, g.state);
      return f;
    }
    const GroundSolution g = ground_state(*s.h);
    if (g.degeneracy > 1) throw InvalidArgument("invert: target ground state is degenerate");
    const QuantumState st = QuantumState::pure(g.vector());
    f.rho = density(*s.basis, st);
    if (want_pair) f.rho2 = pair_density(*s.basis, st);
    return f;
  };

  InversionResult r;
  if (target == "density") {
    DensityProfile rho;
    if (p.has("density_csv")) {
      rho = {c.potential(Json{{"csv", p.raw("density_csv")}}, p.path("density_csv"), L),
             c.space.spacing()};
    } else {
      rho = forward(false).rho;
    }
    r = invert_density(rho, family, v_init, opt);
    if (!p.has("density_csv")) rec.scalar("v_error", (r.v - v_true).cwiseAbs().maxCoeff());
    rec.site_array("target_density", rho.values);
  } else if (target == "pair-density") {
    if (c.num_particles < 2) throw ConfigError("particles.N", "pair-density needs N >= 2");
    const int nd = c.space.num_distances();
    const RVector w_init = p.has("w_init") ? c.potential(p.raw("w_init"), p.path("w_init"), nd)
                                           : RVector::Zero(nd);
    const PairDensity rho2 = *forward(true).rho2;
    InversionFamily fam = family;
    fam.pair.reset();
    r = invert_pair_density(rho2, fam, v_init, w_init, opt);
    RVector w_true = c.w.size() ? c.w : RVector::Zero(nd);
    const int first = c.space.spin_dim() >= 2 ? 0 : 1;
    if (gauge) w_true.tail(nd - first).array() -= w_true.tail(nd - first).mean();
    if (first) w_true(0) = 0.0;
    rec.scalar("v_error", (r.v - v_true).cwiseAbs().maxCoeff());
    rec.scalar("w_error", (r.w - w_true).cwiseAbs().maxCoeff());
    rec.index_array("recovered_w", r.w);
  } else if (target == "v-and-T") {
    if (!c.temperature) throw ConfigError("temperature", "v-and-T needs the true temperature");
    const auto bracket = p.range("t_bracket", {0.1, 10.0});
    const Forward f = forward(false);
    r = invert_v_and_T({f.rho, f.entropy, f.log_partition}, family, bracket, opt);
    rec.scalar("true_temperature", *c.temperature);
    rec.scalar("temperature", r.temperature ? Json(*r.temperature) : Json(nullptr));
    rec.scalar("entropy_residual", r.entropy_residual);
    rec.scalar("v_error", (r.v - v_true).cwiseAbs().maxCoeff());
    if (r.constant_shift) rec.scalar("constant_shift", *r.constant_shift);
  } else {
    throw ConfigError(p.path("target"), "expected density, pair-density or v-and-T");
  }
  rec.scalar("residual", r.residual);
  rec.scalar("iterations", r.iterations);
  rec.scalar("converged", r.converged);
  rec.scalar("gauge", r.gauge);
  rec.scalar("message", r.message);
  rec.site_array("recovered_v", r.v);
  rec.verdict(r.converged);
}

void cmd_counterexample(Config& c, Recorder& rec) {
  Params p = c.params();
  p.allow({"kind", "epsilon", "b", "perturb_occupied", "heat_check"});
  const std::string kind = p.text("kind", "gilbert");
  require_canonical(c, "counterexample");
  const bool heat = p.boolean("heat_check", true);
  const SectorBasis basis(c.space, c.num_particles);
  const auto heat_pairing = [&](const OneBodyOperator& g1, const OneBodyOperator& g2,
                                double t, const std::optional<PairPotential>& pair) {
    const OneBodyOperator kin = kinetic_operator(c.space);
    const GibbsState a = gibbs_canonical(assemble_hamiltonian(basis, g1, pair), t);
    const GibbsState b = gibbs_canonical(assemble_hamiltonian(basis, g2, pair), t);
    return nonlocal_thermal_pairing(nonlocal_thermal_system(basis, a, g1 - kin),
                                    nonlocal_thermal_system(basis, b, g2 - kin));
  };
  const auto certificate = [&](const CounterexampleCertificate& cert) {
    rec.scalar("operator_distance", cert.operator_distance);
    rec.scalar("reduced_data_distance", cert.reduced_data_distance);
    rec.scalar("energy1", cert.energies.first);
    rec.scalar("energy2", cert.energies.second);
    rec.verdict(cert.verdict);
  };
  if (kind == "gilbert") {
    if (c.w.size() && c.w.cwiseAbs().maxCoeff() != 0.0)
      throw ConfigError("w", "the non-local construction needs w = 0");
    GilbertOptions opt;
    opt.epsilon = p.optional_number("epsilon");
    opt.perturb_occupied = p.boolean("perturb_occupied", false);
    const GilbertResult r = gilbert_counterexample(c.num_particles, c.one_body(), opt);
    rec.scalar("kind", "gilbert_nonlocal");
    rec.scalar("epsilon", r.epsilon);
    rec.scalar("gap", r.gap);
    rec.scalar("overlap", r.overlap);
    rec.scalar("energy_shift", r.energy_shift);
    rec.scalar("gamma_distance", r.gamma_distance);
    if (heat) {
      const double t = 0.1 * r.gap;
      rec.scalar("heat_temperature", t);
      rec.scalar("heat_pairing", heat_pairing(r.g1, r.g2, t, std::nullopt));
    }
    certificate(r.certificate);
  } else if (kind == "capelle-vignale") {
    if (c.field) throw ConfigError("B", "the spin construction starts from B = 0");
    try {
      const CapelleVignaleResult r =
          capelle_vignale_pair(c.space, c.num_particles, c.v, c.pair(), p.optional_number("b"));
      rec.scalar("kind", "capelle_vignale_spin");
      rec.scalar("b", r.b);
      rec.scalar("s", r.s);
      rec.scalar("gap", r.gap);
      rec.scalar("crossing_threshold",
                 std::isfinite(r.crossing_threshold) ? Json(r.crossing_threshold) : Json(nullptr));
      rec.scalar("density_distance", r.density_distance);
      rec.scalar("magnetization_distance", r.magnetization_distance);
      rec.scalar("constraint_residual", r.constraint_residual);
      rec.scalar("max_snap_error", r.chi.max_snap_error);
      rec.site_array("chi", r.chi.snapped);
      if (heat && std::isfinite(r.gap)) {
        const double t = 0.1 * r.gap;
        const OneBodyOperator g1 = c.one_body();
        const OneBodyOperator g2 =
            g1 + zeeman_operator(c.space, MagneticField::uniform(c.space.num_sites(),
                                                                 {0.0, 0.0, r.b}));
        rec.scalar("heat_temperature", t);
        rec.scalar("heat_pairing", heat_pairing(g1, g2, t, c.pair()));
      }
      certificate(r.certificate);
    } catch (const LevelCrossingError& e) {
      rec.scalar("kind", "capelle_vignale_spin");
      rec.scalar("rejected", e.what());
      rec.scalar("crossing_threshold", e.threshold());
      rec.verdict(false);
    }
  } else {
    throw ConfigError(p.path("kind"), "expected gilbert or capelle-vignale");
  }
}

void cmd_verify(Config& c, Recorder& rec) {
  Params p = c.params();
  const std::string suite = p.text("suite", "");
  if (suite.empty()) throw ConfigError(p.path("suite"), "missing suite name");
  const SuiteOutcome out = run_suite(suite, c);
  for (auto it = out.scalars.begin(); it != out.scalars.end(); ++it)
    rec.scalar(it.key(), it.value());
  rec.scalar("suite", suite);
  rec.verdict(out.passed);
}

void write_csv(const CsvTable& t, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw InvalidArgument("cannot write " + file.string());
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << "\n";
  out.precision(17);
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

void set_dotted(Json& node, const std::string& path, const Json& value) {
  Json* cur = &node;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

void print_summary(const RunResult& r) {
  std::cout << r.record.value("command", "") << " [" << r.record.value("digest", "") << "]";
  if (r.record.contains("verdict")) std::cout << " verdict=" << r.record["verdict"].dump();
  std::cout << "\n";
  if (r.record.contains("scalars"))
    for (auto it = r.record["scalars"].begin(); it != r.record["scalars"].end(); ++it)
      std::cout << "  " << it.key() << " = " << it.value().dump() << "\n";
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"solve", "thermal", "metric", "invert",
                                                 "counterexample", "verify", "sweep"};
  return names;
}

RunResult run_command(const std::string& command, Config config) {
  Json& res = config.resolved;
  if (res.contains("command") && res["command"] != command)
    throw ConfigError("command", "config is for '" + res["command"].get<std::string>() +
                                     "', not '" + command + "'");
  res["command"] = command;
  if (res.contains("runs") || res.contains("base") || res.contains("vary"))
    throw ConfigError("runs", "sweep keys are only valid for the sweep command");
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  Recorder rec(result);
  if (command == "solve") cmd_solve(config, rec);
  else if (command == "thermal") cmd_thermal(config, rec);
  else if (command == "metric") cmd_metric(config, rec);
  else if (command == "invert") cmd_invert(config, rec);
  else if (command == "counterexample") cmd_counterexample(config, rec);
  else if (command == "verify") cmd_verify(config, rec);
  else throw ConfigError("command", "unknown command '" + command + "'");
  // Defaults filled during the run are part of the resolved config.
  result.record["command"] = command;
  result.record["config"] = config.resolved;
  result.record["digest"] = digest(config.resolved);
  result.record["seed"] = config.seed;
  result.record["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

RunResult run_sweep(const Json& document, std::optional<std::uint64_t> seed_override,
                    const std::filesystem::path& base_dir, int workers,
                    const std::optional<std::filesystem::path>& out_dir) {
  if (!document.is_object()) throw ConfigError("<root>", "expected an object");
  for (auto it = document.begin(); it != document.end(); ++it)
    if (it.key() != "base" && it.key() != "runs" && it.key() != "vary" &&
        it.key() != "command" && it.key() != "seed" && it.key() != "description")
      throw ConfigError(it.key(), "unknown sweep key");
  if (!document.contains("base") || !document["base"].is_object())
    throw ConfigError("base", "sweep needs a base config object");
  const std::string default_command = document.value("command", "solve");
  std::vector<std::pair<std::string, Json>> jobs;
  const auto add = [&](const Json& patch, const std::string& key) {
    Json cfg = document["base"];
    std::string command = default_command;
    Json p = patch;
    if (p.contains("command")) {
      if (!p["command"].is_string()) throw ConfigError(key + ".command", "expected a string");
      command = p["command"].get<std::string>();
      p.erase("command");
    }
    if (command == "sweep") throw ConfigError(key + ".command", "sweeps do not nest");
    cfg.merge_patch(p);
    cfg.erase("command");
    if (document.contains("seed") && !cfg.contains("seed")) cfg["seed"] = document["seed"];
    jobs.emplace_back(command, cfg);
  };
  if (document.contains("runs")) {
    if (!document["runs"].is_array()) throw ConfigError("runs", "expected an array");
    for (std::size_t i = 0; i < document["runs"].size(); ++i)
      add(document["runs"][i], "runs[" + std::to_string(i) + "]");
  }
  if (document.contains("vary")) {
    const Json& vary = document["vary"];
    if (!vary.is_object()) throw ConfigError("vary", "expected an object");
    std::vector<Json> patches = {Json::object()};
    for (auto it = vary.begin(); it != vary.end(); ++it) {
      if (!it.value().is_array() || it.value().empty())
        throw ConfigError("vary." + it.key(), "expected a non-empty array");
      std::vector<Json> next;
      for (const Json& pch : patches)
        for (const Json& val : it.value()) {
          Json q = pch;
          set_dotted(q, it.key(), val);
          next.push_back(q);
        }
      patches = std::move(next);
    }
    for (std::size_t i = 0; i < patches.size(); ++i) add(patches[i], "vary");
  }
  if (jobs.empty()) throw ConfigError("runs", "sweep lists no runs");

  // Configs are parsed up front so malformed runs fail before any work starts.
  std::vector<Config> configs;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      configs.push_back(parse_config(jobs[i].second, seed_override, base_dir));
    } catch (const ConfigError& e) {
      throw ConfigError("runs[" + std::to_string(i) + "]." + e.key(), e.message());
    }
  }
  struct Done {
    RunResult result;
    std::string error;
  };
  std::vector<Done> done(jobs.size());
  const int pool = std::max(1, workers);
  for (std::size_t begin = 0; begin < jobs.size(); begin += static_cast<std::size_t>(pool)) {
    std::vector<std::future<Done>> running;
    const std::size_t end = std::min(jobs.size(), begin + static_cast<std::size_t>(pool));
    for (std::size_t i = begin; i < end; ++i)
      running.push_back(std::async(std::launch::async, [&, i] {
        Done d;
        try {
          d.result = run_command(jobs[i].first, configs[i]);
        } catch (const std::exception& e) {
          d.error = e.what();
          d.result.exit_code = kError;
          d.result.record = {{"command", jobs[i].first},
                             {"config", configs[i].resolved},
                             {"digest", digest(configs[i].resolved)},
                             {"error", d.error}};
        }
        return d;
      }));
    for (std::size_t i = begin; i < end; ++i) done[i] = running[i - begin].get();
  }
  std::sort(done.begin(), done.end(), [](const Done& a, const Done& b) {
    return a.result.record["digest"].get<std::string>() <
           b.result.record["digest"].get<std::string>();
  });
  RunResult merged;
  merged.record["command"] = "sweep";
  merged.record["runs"] = Json::array();
  int code = kSuccess;
  for (const Done& d : done) {
    Json entry = {{"command", d.result.record["command"]},
                  {"digest", d.result.record["digest"]},
                  {"exit_code", d.result.exit_code}};
    if (d.result.record.contains("scalars")) entry["scalars"] = d.result.record["scalars"];
    if (!d.error.empty()) entry["error"] = d.error;
    merged.record["runs"].push_back(entry);
    if (d.result.exit_code == kError) code = kError;
    else if (d.result.exit_code == kVerdictFalse && code == kSuccess) code = kVerdictFalse;
    if (out_dir) write_outputs(d.result, *out_dir / d.result.record["digest"].get<std::string>());
  }
  merged.record["digest"] = digest(merged.record["runs"]);
  merged.exit_code = code;
  return merged;
}

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "result.json");
  if (!out) throw InvalidArgument("cannot write " + (dir / "result.json").string());
  out << result.record.dump(2) << "\n";
  for (const auto& [name, table] : result.tables) write_csv(table, dir / (name + ".csv"));
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Exact-diagonalization experiments on density-potential maps of lattice fermions"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<CLI::App*> subs;
  for (const std::string& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "directory for result.json and CSV files");
    sub->add_flag("--quiet", quiet, "suppress the summary on stdout");
    if (name == "sweep") sub->add_option("--workers", workers, "parallel runs");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kError;
  }
  std::string command;
  for (CLI::App* sub : subs)
    if (sub->parsed()) command = sub->get_name();
  try {
    RunResult result;
    if (command == "sweep") {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("--config", "cannot open " + config_path);
      Json doc;
      try {
        doc = Json::parse(in, nullptr, true, true);
      } catch (const Json::parse_error& e) {
        throw ConfigError("--config", std::string("JSON syntax error: ") + e.what());
      }
      const std::filesystem::path base = std::filesystem::path(config_path).parent_path();
      result = run_sweep(doc, seed, base.empty() ? "." : base, workers,
                         out_dir.empty() ? std::nullopt
                                         : std::optional<std::filesystem::path>(out_dir));
    } else {
      result = run_command(command, load_config(config_path, seed));
    }
    if (!out_dir.empty()) write_outputs(result, out_dir);
    if (!quiet) print_summary(result);
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
}

}  // namespace hklab::cli
