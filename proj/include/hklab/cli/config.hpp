#pragma once

// Experiment configuration: a JSON document describing the lattice, particles,
// external potentials and command parameters. Parsing fills every default and
// every generator seed into `resolved`, so the resolved document replays the run.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>

#include <json.hpp>

#include "hklab/thermal.hpp"

namespace hklab::cli {

using Json = nlohmann::json;

/// Malformed configuration; `key` is the dotted path of the offending entry.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : InvalidArgument(key + ": " + message), key_(key), message_(message) {}
  const std::string& key() const { return key_; }
  const std::string& message() const { return message_; }

 private:
  std::string key_;
  std::string message_;
};

/// Command parameters with defaults written back into the resolved config.
class Params {
 public:
  Params(Json* node, std::string path) : node_(node), path_(std::move(path)) {}

  /// Rejects keys outside `allowed`.
  void allow(std::initializer_list<const char*> allowed) const;
  double number(const std::string& key, double fallback);
  std::optional<double> optional_number(const std::string& key);
  int integer(const std::string& key, int fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string text(const std::string& key, const std::string& fallback);
  std::pair<double, double> range(const std::string& key, std::pair<double, double> fallback);
  bool has(const std::string& key) const;
  const Json& raw(const std::string& key) const;
  std::string path(const std::string& key) const { return path_ + "." + key; }

 private:
  Json* node_;
  std::string path_;
};

struct Config {
  Json resolved;
  std::uint64_t seed = 0;
  std::filesystem::path base_dir;

  LatticeSpace space{2};
  int num_particles = 1;  ///< N, or N_max in the grand-canonical ensemble
  Ensemble ensemble = Ensemble::canonical;
  std::optional<double> temperature;
  RVector v;
  RVector w;  ///< displacement form; empty when absent
  std::optional<MagneticField> field;
  /// Extra Hermitian one-body term (non-local), empty when absent.
  CMatrix extra;

  Params params() { return Params(&resolved["params"], "params"); }
  std::optional<PairPotential> pair() const;
  /// K + v (+ B.sigma) (+ extra).
  OneBodyOperator one_body() const;
  /// Same without the kinetic part.
  OneBodyOperator external() const;

  /// Evaluates a potential spec (array, generator object or CSV reference)
  /// with `n` entries, on site positions or on lattice distances.
  RVector potential(const Json& spec, const std::string& key, int n);
};

/// Parses a configuration document. `seed_override` replaces the seed key.
Config parse_config(const Json& input, std::optional<std::uint64_t> seed_override,
                    const std::filesystem::path& base_dir = ".");

Config load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override);

/// Second system for two-system commands: the resolved config with the
/// `system2` object merged on top.
Config second_system(const Config& c);

/// 64-bit FNV-1a of the resolved config, as 16 hex digits.
std::string digest(const Json& resolved);

std::uint64_t derive_seed(std::uint64_t seed, const std::string& key);

}  // namespace hklab::cli
