#pragma once

#include "deconvrf/asymptotics.hpp"
#include "deconvrf/deconv.hpp"
#include "deconvrf/field_models.hpp"
#include "deconvrf/mc_harness.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace deconvrf {

inline constexpr int kConfigSchema = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// Malformed or invalid configuration text.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Data file inconsistent with the configuration.
class DataError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Everything one config file describes. Parsing resolves the JSON into
/// library types; semantic checks (A3, A5, summability) are raised by those
/// types or by validate_experiment.
struct RunConfig
{
  std::string canonical;  // key-sorted JSON dump
  std::uint64_t seed = 1;
  FieldSpec field;
  NoiseModel noise = NoiseModel::laplace(1.0);
  DeconvKernel kernel = DeconvKernel::polynomial(3);
  std::vector<RegionPtr> regions;
  BandwidthSchedule schedule;
  std::optional<double> fixed_bandwidth;
  /// Region used by simulate/estimate (default: last).
  std::size_t data_region = 0;
  ExperimentConfig experiment;
  /// n values for the blocking-sequence report.
  std::vector<double> lemma_n;
  double lemma_threshold = 0.2;

  double bandwidth_for(double n_sites) const;
  const LatticeRegion& region() const { return *regions.at(data_region); }
  RegionPtr region_ptr() const { return regions.at(data_region); }
};

/// Throws ConfigError on syntax or schema problems; ConditionViolation for
/// A3 (noise law) is passed through unchanged.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the key-sorted JSON dump, as 16 hex digits; invariant
/// under key reordering and whitespace.
std::string config_digest(const std::string& text);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Field CSV: s1..sd,y[,x,theta]
void write_field_csv(std::ostream& os, const FieldSample& y, const FieldSample* x = nullptr,
                     const Eigen::VectorXd* theta = nullptr);

/// Reads the y column, reordered to the region's site enumeration. Throws
/// DataError when the sites differ from the region's.
Eigen::VectorXd read_field_csv(std::istream& is, const LatticeRegion& region);

/// x,fhat,form,b,n_sites
void write_estimate_csv(std::ostream& os, const DensityEstimate& est);

struct GridSpec
{
  double min = 0.0;
  double max = 0.0;
  int count = 0;

  Eigen::VectorXd points() const;
};

/// "min:max:count" with count >= 1 (count 1 needs min == max). Throws
/// ConfigError.
GridSpec parse_grid(const std::string& text);

struct RunManifest
{
  std::string command;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;
};

std::string utc_timestamp();
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

} // namespace deconvrf
