#include "hklab/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace hklab::cli {

namespace {

const std::set<std::string> kTopKeys = {"command", "description", "lattice", "particles", "v",
                                        "w", "B", "G", "temperature", "seed", "params",
                                        "system2", "runs", "base", "vary"};

void check_keys(const Json& node, const std::string& path, const std::set<std::string>& allowed) {
  if (!node.is_object()) throw ConfigError(path, "expected an object");
  for (auto it = node.begin(); it != node.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(path + "." + it.key(), "unknown key");
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double get_number(const Json& node, const std::string& key, const std::string& path) {
  if (!node.is_number()) throw ConfigError(join(path, key), "expected a number");
  const double x = node.get<double>();
  if (!std::isfinite(x)) throw ConfigError(join(path, key), "must be finite");
  return x;
}

int get_int(const Json& node, const std::string& key, const std::string& path) {
  if (!node.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  return node.get<int>();
}

// Gives every random generator without an explicit seed one derived from its path.
void fill_seeds(Json& node, const std::string& path, std::uint64_t seed) {
  if (node.is_object()) {
    if (node.contains("generator") && node["generator"].is_string() &&
        node["generator"].get<std::string>().rfind("random", 0) == 0 && !node.contains("seed"))
      node["seed"] = derive_seed(seed, path);
    for (auto it = node.begin(); it != node.end(); ++it)
      if (it.key() != "runs" && it.key() != "base") fill_seeds(it.value(), join(path, it.key()), seed);
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i)
      fill_seeds(node[i], path + "[" + std::to_string(i) + "]", seed);
  }
}

std::vector<double> read_csv_column(const std::filesystem::path& file, const std::string& key) {
  std::ifstream in(file);
  if (!in) throw ConfigError(key, "cannot open CSV file " + file.string());
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find_last_of(',');
    const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
    try {
      std::size_t used = 0;
      const double x = std::stod(cell, &used);
      values.push_back(x);
    } catch (const std::exception&) {
      if (values.empty()) continue;  // header
      throw ConfigError(key, "non-numeric CSV cell '" + cell + "' in " + file.string());
    }
  }
  return values;
}

MagneticField parse_field(const Json& spec, const std::string& key, int L) {
  MagneticField f = MagneticField::zero(L);
  const auto vec3 = [&](const Json& a, const std::string& k) {
    if (!a.is_array() || a.size() != 3) throw ConfigError(k, "expected [bx, by, bz]");
    return Vec3{get_number(a[0], "", k), get_number(a[1], "", k), get_number(a[2], "", k)};
  };
  if (spec.is_array()) {
    if (static_cast<int>(spec.size()) != L)
      throw ConfigError(key, "expected " + std::to_string(L) + " site vectors");
    for (int x = 0; x < L; ++x) f.values[x] = vec3(spec[x], key + "[" + std::to_string(x) + "]");
    return f;
  }
  if (!spec.is_object()) throw ConfigError(key, "expected an array or an object");
  if (spec.contains("uniform")) {
    check_keys(spec, key, {"uniform"});
    return MagneticField::uniform(L, vec3(spec["uniform"], key + ".uniform"));
  }
  check_keys(spec, key, {"generator", "amplitude", "seed"});
  if (!spec.contains("generator") || spec["generator"] != "random-uniform")
    throw ConfigError(key + ".generator", "field generator must be random-uniform");
  const double amp = spec.contains("amplitude") ? get_number(spec["amplitude"], "amplitude", key)
                                                : 1.0;
  std::mt19937_64 rng(spec["seed"].get<std::uint64_t>());
  std::uniform_real_distribution<double> u(-amp, amp);
  for (auto& b : f.values)
    for (double& c : b) c = u(rng);
  return f;
}

CMatrix parse_extra(const Json& spec, const std::string& key, int D) {
  if (spec.is_array()) {
    if (static_cast<int>(spec.size()) != D) throw ConfigError(key, "expected a D x D matrix");
    CMatrix m(D, D);
    for (int i = 0; i < D; ++i) {
      if (!spec[i].is_array() || static_cast<int>(spec[i].size()) != D)
        throw ConfigError(key + "[" + std::to_string(i) + "]", "expected D entries");
      for (int j = 0; j < D; ++j) m(i, j) = get_number(spec[i][j], "", key);
    }
    return m;
  }
  check_keys(spec, key, {"generator", "amplitude", "seed"});
  if (!spec.contains("generator") || spec["generator"] != "random-hermitian")
    throw ConfigError(key + ".generator", "operator generator must be random-hermitian");
  const double amp = spec.contains("amplitude") ? get_number(spec["amplitude"], "amplitude", key)
                                                : 1.0;
  std::mt19937_64 rng(spec["seed"].get<std::uint64_t>());
  std::normal_distribution<double> n;
  CMatrix a(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) a(i, j) = Complex(n(rng), n(rng));
  return amp * 0.5 * (a + a.adjoint()) / std::sqrt(static_cast<double>(D));
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, const std::string& key) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ull;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  return (h ^ (h >> 31)) & 0x7fffffffffffffffull;
}

std::string digest(const Json& resolved) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : resolved.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

void Params::allow(std::initializer_list<const char*> allowed) const {
  if (node_->is_null()) return;
  if (!node_->is_object()) throw ConfigError(path_, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (auto it = node_->begin(); it != node_->end(); ++it)
    if (!keys.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
}

bool Params::has(const std::string& key) const {
  return node_->is_object() && node_->contains(key) && !(*node_)[key].is_null();
}

const Json& Params::raw(const std::string& key) const {
  if (!has(key)) throw ConfigError(path(key), "missing");
  return (*node_)[key];
}

double Params::number(const std::string& key, double fallback) {
  if (!has(key)) (*node_)[key] = fallback;
  return get_number((*node_)[key], key, path_);
}

std::optional<double> Params::optional_number(const std::string& key) {
  if (!has(key)) return std::nullopt;
  return get_number((*node_)[key], key, path_);
}

int Params::integer(const std::string& key, int fallback) {
  if (!has(key)) (*node_)[key] = fallback;
  return get_int((*node_)[key], key, path_);
}

bool Params::boolean(const std::string& key, bool fallback) {
  if (!has(key)) (*node_)[key] = fallback;
  if (!(*node_)[key].is_boolean()) throw ConfigError(path(key), "expected true or false");
  return (*node_)[key].get<bool>();
}

std::string Params::text(const std::string& key, const std::string& fallback) {
  if (!has(key)) (*node_)[key] = fallback;
  if (!(*node_)[key].is_string()) throw ConfigError(path(key), "expected a string");
  return (*node_)[key].get<std::string>();
}

std::pair<double, double> Params::range(const std::string& key,
                                        std::pair<double, double> fallback) {
  if (!has(key)) (*node_)[key] = {fallback.first, fallback.second};
  const Json& r = (*node_)[key];
  if (!r.is_array() || r.size() != 2) throw ConfigError(path(key), "expected [lo, hi]");
  return {get_number(r[0], key, path_), get_number(r[1], key, path_)};
}

std::optional<PairPotential> Config::pair() const {
  if (w.size() == 0) return std::nullopt;
  return PairPotential::from_displacement(space, w);
}

OneBodyOperator Config::external() const {
  OneBodyOperator op = local_potential_operator(space, v);
  if (field) op = op + zeeman_operator(space, *field);
  if (extra.size()) op = op + OneBodyOperator(space, extra, OperatorKind::nonlocal);
  return op;
}

OneBodyOperator Config::one_body() const { return kinetic_operator(space) + external(); }

RVector Config::potential(const Json& spec, const std::string& key, int n) {
  const double h = space.spacing();
  RVector out(n);
  if (spec.is_array()) {
    if (static_cast<int>(spec.size()) != n)
      throw ConfigError(key, "expected " + std::to_string(n) + " values, got " +
                                 std::to_string(spec.size()));
    for (int i = 0; i < n; ++i) out(i) = get_number(spec[i], "", key + "[" + std::to_string(i) + "]");
    return out;
  }
  if (!spec.is_object()) throw ConfigError(key, "expected an array or an object");
  double shift = 0.0;
  if (spec.contains("shift")) shift = get_number(spec["shift"], "shift", key);
  if (spec.contains("csv")) {
    check_keys(spec, key, {"csv", "shift"});
    if (!spec["csv"].is_string()) throw ConfigError(key + ".csv", "expected a file path");
    std::filesystem::path file = spec["csv"].get<std::string>();
    if (file.is_relative()) file = base_dir / file;
    const std::vector<double> values = read_csv_column(file, key + ".csv");
    if (static_cast<int>(values.size()) != n)
      throw ConfigError(key + ".csv", "expected " + std::to_string(n) + " rows, got " +
                                          std::to_string(values.size()));
    for (int i = 0; i < n; ++i) out(i) = values[i] + shift;
    return out;
  }
  if (!spec.contains("generator") || !spec["generator"].is_string())
    throw ConfigError(key + ".generator", "missing generator name");
  const std::string gen = spec["generator"].get<std::string>();
  const auto num = [&](const char* k, double fallback) {
    return spec.contains(k) ? get_number(spec[k], k, key) : fallback;
  };
  const auto pos = [&](int i) { return i * h; };
  if (gen == "constant") {
    check_keys(spec, key, {"generator", "value", "shift"});
    out.setConstant(num("value", 0.0));
  } else if (gen == "well") {
    check_keys(spec, key, {"generator", "depth", "center", "width", "shift"});
    const double depth = num("depth", 1.0);
    const double c = num("center", 0.5 * (n - 1) * h);
    const double width = num("width", 0.25 * n * h);
    if (!(width > 0.0)) throw ConfigError(key + ".width", "must be positive");
    for (int i = 0; i < n; ++i)
      out(i) = -depth * std::exp(-0.5 * std::pow((pos(i) - c) / width, 2));
  } else if (gen == "double-well") {
    check_keys(spec, key, {"generator", "depth", "centers", "width", "shift"});
    const double depth = num("depth", 1.0);
    const double width = num("width", 0.125 * n * h);
    if (!(width > 0.0)) throw ConfigError(key + ".width", "must be positive");
    double c1 = 0.25 * (n - 1) * h, c2 = 0.75 * (n - 1) * h;
    if (spec.contains("centers")) {
      const Json& c = spec["centers"];
      if (!c.is_array() || c.size() != 2) throw ConfigError(key + ".centers", "expected [c1, c2]");
      c1 = get_number(c[0], "centers", key);
      c2 = get_number(c[1], "centers", key);
    }
    for (int i = 0; i < n; ++i)
      out(i) = -depth * (std::exp(-0.5 * std::pow((pos(i) - c1) / width, 2)) +
                         std::exp(-0.5 * std::pow((pos(i) - c2) / width, 2)));
  } else if (gen == "random-uniform") {
    check_keys(spec, key, {"generator", "amplitude", "seed", "mean_zero", "shift"});
    const double amp = num("amplitude", 1.0);
    if (!spec["seed"].is_number_unsigned() && !spec["seed"].is_number_integer())
      throw ConfigError(key + ".seed", "expected an unsigned integer");
    std::mt19937_64 rng(spec["seed"].get<std::uint64_t>());
    std::uniform_real_distribution<double> u(-amp, amp);
    for (int i = 0; i < n; ++i) out(i) = u(rng);
    if (spec.contains("mean_zero")) {
      if (!spec["mean_zero"].is_boolean()) throw ConfigError(key + ".mean_zero", "expected a bool");
      if (spec["mean_zero"].get<bool>()) out.array() -= out.mean();
    }
  } else if (gen == "soft-coulomb") {
    check_keys(spec, key, {"generator", "strength", "softening", "shift"});
    const double g = num("strength", 1.0);
    const double a = num("softening", 1.0);
    if (!(a > 0.0)) throw ConfigError(key + ".softening", "must be positive");
    for (int i = 0; i < n; ++i) out(i) = g / std::sqrt(pos(i) * pos(i) + a * a);
  } else {
    throw ConfigError(key + ".generator", "unknown generator '" + gen + "'");
  }
  out.array() += shift;
  return out;
}

Config parse_config(const Json& input, std::optional<std::uint64_t> seed_override,
                    const std::filesystem::path& base_dir) {
  if (!input.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  check_keys(input, "<root>", kTopKeys);
  Config c;
  c.base_dir = base_dir;
  c.resolved = input;
  Json& r = c.resolved;
  if (seed_override) r["seed"] = *seed_override;
  if (!r.contains("seed")) r["seed"] = 0;
  if (!r["seed"].is_number_integer() || r["seed"].get<std::int64_t>() < 0)
    throw ConfigError("seed", "expected a nonnegative integer");
  c.seed = r["seed"].get<std::uint64_t>();
  fill_seeds(r, "", c.seed);

  // lattice
  if (!r.contains("lattice")) throw ConfigError("lattice", "missing");
  Json& lat = r["lattice"];
  check_keys(lat, "lattice", {"L", "q", "boundary", "h"});
  if (!lat.contains("L")) throw ConfigError("lattice.L", "missing");
  const int L = get_int(lat["L"], "L", "lattice");
  if (!lat.contains("q")) lat["q"] = 2;
  if (!lat.contains("boundary")) lat["boundary"] = "dirichlet";
  if (!lat.contains("h")) lat["h"] = 1.0;
  const int q = get_int(lat["q"], "q", "lattice");
  const double h = get_number(lat["h"], "h", "lattice");
  if (!lat["boundary"].is_string()) throw ConfigError("lattice.boundary", "expected a string");
  const std::string bc = lat["boundary"].get<std::string>();
  if (bc != "dirichlet" && bc != "periodic")
    throw ConfigError("lattice.boundary", "expected dirichlet or periodic");
  try {
    c.space = LatticeSpace(L, q, bc == "periodic" ? Boundary::periodic : Boundary::dirichlet, h);
  } catch (const InvalidArgument& e) {
    throw ConfigError("lattice", e.what());
  }

  // particles
  if (!r.contains("particles")) throw ConfigError("particles", "missing");
  Json& part = r["particles"];
  check_keys(part, "particles", {"N", "N_max", "ensemble"});
  if (!part.contains("ensemble")) part["ensemble"] = "canonical";
  if (!part["ensemble"].is_string()) throw ConfigError("particles.ensemble", "expected a string");
  const std::string ens = part["ensemble"].get<std::string>();
  if (ens == "canonical") {
    if (!part.contains("N")) throw ConfigError("particles.N", "missing");
    if (part.contains("N_max")) throw ConfigError("particles.N_max", "only for grand_canonical");
    c.ensemble = Ensemble::canonical;
    c.num_particles = get_int(part["N"], "N", "particles");
    if (c.num_particles < 1 || c.num_particles > c.space.dim())
      throw ConfigError("particles.N", "must lie in [1, L q]");
  } else if (ens == "grand_canonical") {
    if (!part.contains("N_max")) throw ConfigError("particles.N_max", "missing");
    if (part.contains("N")) throw ConfigError("particles.N", "use N_max for grand_canonical");
    c.ensemble = Ensemble::grand_canonical;
    c.num_particles = get_int(part["N_max"], "N_max", "particles");
    if (c.num_particles < 0 || c.num_particles > c.space.dim())
      throw ConfigError("particles.N_max", "must lie in [0, L q]");
  } else {
    throw ConfigError("particles.ensemble", "expected canonical or grand_canonical");
  }

  if (r.contains("temperature") && !r["temperature"].is_null()) {
    const double t = get_number(r["temperature"], "temperature", "");
    if (!(t > 0.0)) throw ConfigError("temperature", "must be positive");
    c.temperature = t;
  }

  if (!r.contains("v")) r["v"] = {{"generator", "constant"}, {"value", 0.0}};
  c.v = c.potential(r["v"], "v", L);
  if (r.contains("w") && !r["w"].is_null())
    c.w = c.potential(r["w"], "w", c.space.num_distances());
  if (r.contains("B") && !r["B"].is_null()) {
    if (q != 2) throw ConfigError("B", "magnetic fields need q = 2");
    c.field = parse_field(r["B"], "B", L);
  }
  if (r.contains("G") && !r["G"].is_null()) {
    c.extra = parse_extra(r["G"], "G", c.space.dim());
    if (hermiticity_defect(c.extra) > kHermitianTol) throw ConfigError("G", "not Hermitian");
  }
  if (!r.contains("params")) r["params"] = Json::object();
  if (!r["params"].is_object()) throw ConfigError("params", "expected an object");
  if (r.contains("system2") && !r["system2"].is_object())
    throw ConfigError("system2", "expected an object");
  return c;
}

Config load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("--config", std::string("JSON syntax error: ") + e.what());
  }
  return parse_config(j, seed_override, path.parent_path().empty() ? "." : path.parent_path());
}

Config second_system(const Config& c) {
  Json merged = c.resolved;
  const Json patch = merged.contains("system2") ? merged["system2"] : Json::object();
  merged.erase("system2");
  for (const char* k : {"lattice", "particles", "command", "seed"})
    if (patch.contains(k)) throw ConfigError(std::string("system2.") + k,
                                             "the second system shares this with the first");
  merged.merge_patch(patch);
  try {
    return parse_config(merged, std::nullopt, c.base_dir);
  } catch (const ConfigError& e) {
    throw ConfigError("system2." + e.key(), e.message());
  }
}

}  // namespace hklab::cli
