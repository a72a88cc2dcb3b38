#include "deconvrf/config.hpp"

#include "deconvrf/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace deconvrf {

using json = nlohmann::json;

namespace {

void
check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
  if (!obj.is_object())
    throw ConfigError(where + ": expected an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known)
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

const json&
require(const json& obj, const std::string& where, const char* key)
{
  if (!obj.contains(key))
    throw ConfigError(where + ": missing key '" + key + "'");
  return obj.at(key);
}

template <class T>
T
get_as(const json& value, const std::string& where)
{
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": wrong value type");
  }
}

template <class T>
T
get_or(const json& obj, const std::string& where, const char* key, T fallback)
{
  if (!obj.contains(key))
    return fallback;
  return get_as<T>(obj.at(key), where + "." + key);
}

Site
parse_site(const json& value, int dimension, const std::string& where)
{
  const auto coords = get_as<std::vector<std::int64_t>>(value, where);
  if (static_cast<int>(coords.size()) != dimension)
    throw ConfigError(where + ": expected " + std::to_string(dimension) + " coordinates");
  Site s(dimension);
  for (int k = 0; k < dimension; ++k)
    s[k] = coords[static_cast<std::size_t>(k)];
  return s;
}

RegionPtr
parse_region(const json& spec, int dimension, const std::string& where)
{
  const auto shape = get_as<std::string>(require(spec, where, "shape"), where + ".shape");
  try {
    if (shape == "rect") {
      check_keys(spec, where, {"shape", "sides", "origin"});
      const auto sides = get_as<std::vector<std::int64_t>>(require(spec, where, "sides"), where + ".sides");
      if (static_cast<int>(sides.size()) != dimension)
        throw ConfigError(where + ".sides: expected " + std::to_string(dimension) + " entries");
      const Site origin =
        spec.contains("origin") ? parse_site(spec.at("origin"), dimension, where + ".origin") : Site::Zero(dimension);
      return std::make_shared<const LatticeRegion>(make_rect_region(sides, origin));
    }
    if (shape == "lshape") {
      check_keys(spec, where, {"shape", "arms", "thickness"});
      const auto arms = get_as<std::vector<std::int64_t>>(require(spec, where, "arms"), where + ".arms");
      if (static_cast<int>(arms.size()) != dimension)
        throw ConfigError(where + ".arms: expected " + std::to_string(dimension) + " entries");
      const auto thickness = get_as<std::int64_t>(require(spec, where, "thickness"), where + ".thickness");
      return std::make_shared<const LatticeRegion>(make_l_shaped_region(arms, thickness));
    }
    if (shape == "explicit") {
      check_keys(spec, where, {"shape", "sites"});
      const json& list = require(spec, where, "sites");
      if (!list.is_array() || list.empty())
        throw ConfigError(where + ".sites: expected a non-empty array");
      SiteMatrix sites(dimension, static_cast<Index>(list.size()));
      for (std::size_t k = 0; k < list.size(); ++k)
        sites.col(static_cast<Index>(k)) = parse_site(list[k], dimension, where + ".sites");
      return std::make_shared<const LatticeRegion>(LatticeRegion::from_sites(std::move(sites)));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ".shape: unknown region shape '" + shape + "'");
}

InnovationSpec
parse_innovations(const json& obj, const std::string& where)
{
  if (!obj.contains("innovations"))
    return {};
  const json& spec = obj.at("innovations");
  const std::string w = where + ".innovations";
  check_keys(spec, w, {"law", "scale"});
  try {
    return InnovationSpec::from_tag(get_as<std::string>(require(spec, w, "law"), w + ".law"),
                                    get_or<double>(spec, w, "scale", 1.0));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(w + ": " + e.what());
  }
}

FieldSpec
parse_field(const json& spec, int dimension)
{
  const std::string where = "field";
  const auto model = get_as<std::string>(require(spec, where, "model"), "field.model");
  FieldSpec field;
  try {
    if (model == "iid") {
      check_keys(spec, where, {"model", "innovations"});
      field.model = FieldSpec::Model::iid;
      field.linear = LinearFieldSpec::iid(dimension, parse_innovations(spec, where));
    } else if (model == "linear") {
      check_keys(spec, where, {"model", "innovations", "coefficients", "power_decay"});
      field.model = FieldSpec::Model::linear;
      const InnovationSpec innov = parse_innovations(spec, where);
      if (spec.contains("power_decay")) {
        if (spec.contains("coefficients"))
          throw ConfigError("field: give either coefficients or power_decay");
        const json& pd = spec.at("power_decay");
        check_keys(pd, "field.power_decay", {"scale", "rate", "radius"});
        field.linear =
          truncate_power_decay(dimension, get_as<double>(require(pd, "field.power_decay", "scale"), "scale"),
                               get_as<double>(require(pd, "field.power_decay", "rate"), "rate"),
                               get_as<std::int64_t>(require(pd, "field.power_decay", "radius"), "radius"), innov)
            .spec;
      } else {
        const json& list = require(spec, where, "coefficients");
        if (!list.is_array() || list.empty())
          throw ConfigError("field.coefficients: expected a non-empty array");
        field.linear.dimension = dimension;
        field.linear.innovations = innov;
        for (const auto& c : list) {
          check_keys(c, "field.coefficients", {"offset", "value"});
          field.linear.coefficients.push_back(
            {parse_site(require(c, "field.coefficients", "offset"), dimension, "field.coefficients.offset"),
             get_as<double>(require(c, "field.coefficients", "value"), "field.coefficients.value")});
        }
      }
      field.linear.validate();
    } else if (model == "volterra") {
      check_keys(spec, where, {"model", "innovations", "coefficients"});
      field.model = FieldSpec::Model::volterra;
      field.volterra.dimension = dimension;
      field.volterra.innovations = parse_innovations(spec, where);
      const json& list = require(spec, where, "coefficients");
      if (!list.is_array() || list.empty())
        throw ConfigError("field.coefficients: expected a non-empty array");
      for (const auto& c : list) {
        check_keys(c, "field.coefficients", {"first", "second", "value"});
        field.volterra.coefficients.push_back(
          {parse_site(require(c, "field.coefficients", "first"), dimension, "field.coefficients.first"),
           parse_site(require(c, "field.coefficients", "second"), dimension, "field.coefficients.second"),
           get_as<double>(require(c, "field.coefficients", "value"), "field.coefficients.value")});
      }
      field.volterra.validate();
    } else {
      throw ConfigError("field.model: unknown model '" + model + "'");
    }
  } catch (const ConditionViolation&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("field: ") + e.what());
  }
  return field;
}

NoiseModel
parse_noise(const json& spec)
{
  check_keys(spec, "noise", {"law", "sigma", "shape"});
  const auto law = get_as<std::string>(require(spec, "noise", "law"), "noise.law");
  try {
    return NoiseModel::from_tag(law, get_or<double>(spec, "noise", "sigma", 1.0),
                                get_or<double>(spec, "noise", "shape", 1.0));
  } catch (const ConditionViolation&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("noise: ") + e.what());
  }
}

DeconvKernel
parse_kernel(const json& spec)
{
  check_keys(spec, "kernel", {"type", "order"});
  try {
    return DeconvKernel::from_tag(get_as<std::string>(require(spec, "kernel", "type"), "kernel.type"),
                                  get_or<int>(spec, "kernel", "order", 3));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
}

MixingProfile::Tau
parse_tau(const json& spec, const std::string& where)
{
  const auto tau = get_or<std::string>(spec, where, "tau", "infinity");
  if (tau == "infinity")
    return MixingProfile::Tau::infinity;
  if (tau == "one")
    return MixingProfile::Tau::one;
  throw ConfigError(where + ".tau: expected 'one' or 'infinity'");
}

MixingProfile
parse_mixing(const json& spec)
{
  const std::string w = "experiment.mixing";
  const auto type = get_as<std::string>(require(spec, w, "type"), w + ".type");
  if (type == "m_dependent") {
    check_keys(spec, w, {"type", "cutoff", "tau"});
    return MixingProfile::m_dependent(get_as<std::int64_t>(require(spec, w, "cutoff"), w + ".cutoff"),
                                      parse_tau(spec, w));
  }
  if (type == "polynomial") {
    check_keys(spec, w, {"type", "scale", "rate", "tau"});
    return MixingProfile::polynomial(get_as<double>(require(spec, w, "scale"), w + ".scale"),
                                     get_as<double>(require(spec, w, "rate"), w + ".rate"), parse_tau(spec, w));
  }
  throw ConfigError(w + ".type: unknown mixing profile '" + type + "'");
}

DependenceProfile
parse_dependence(const json& spec, int dimension, int p)
{
  const std::string w = "experiment.dependence";
  const auto type = get_as<std::string>(require(spec, w, "type"), w + ".type");
  if (type == "power_decay") {
    check_keys(spec, w, {"type", "scale", "rate"});
    return DependenceProfile::power_decay(dimension, p, get_as<double>(require(spec, w, "scale"), w + ".scale"),
                                          get_as<double>(require(spec, w, "rate"), w + ".rate"));
  }
  if (type == "finite") {
    check_keys(spec, w, {"type", "entries"});
    std::vector<DependenceProfile::Entry> entries;
    for (const auto& e : require(spec, w, "entries")) {
      check_keys(e, w + ".entries", {"site", "delta"});
      entries.push_back({parse_site(require(e, w, "site"), dimension, w + ".entries.site"),
                         get_as<double>(require(e, w, "delta"), w + ".entries.delta")});
    }
    return DependenceProfile::finite(dimension, p, std::move(entries), false);
  }
  throw ConfigError(w + ".type: unknown dependence profile '" + type + "'");
}

void
parse_experiment(const json& spec, RunConfig& cfg, int dimension)
{
  const std::string w = "experiment";
  check_keys(spec, w,
             {"theorem", "points", "replicates", "dependence_order", "mixing", "dependence", "verdicts",
              "fy_sample_sites", "lemma_n", "lemma_threshold", "threads"});
  ExperimentConfig& e = cfg.experiment;
  const auto theorem = get_or<std::string>(spec, w, "theorem", "mixing");
  if (theorem == "mixing")
    e.theorem = TheoremTag::mixing;
  else if (theorem == "dependence")
    e.theorem = TheoremTag::dependence;
  else
    throw ConfigError("experiment.theorem: expected 'mixing' or 'dependence'");
  if (spec.contains("points"))
    e.points = get_as<std::vector<double>>(spec.at("points"), "experiment.points");
  e.replicates = get_or<int>(spec, w, "replicates", 500);
  e.dependence_order = get_or<int>(spec, w, "dependence_order", 2);
  e.threads = get_or<int>(spec, w, "threads", 0);
  e.fy_sample_sites = static_cast<Index>(get_or<double>(spec, w, "fy_sample_sites", 1e7));
  if (spec.contains("mixing"))
    e.mixing_override = parse_mixing(spec.at("mixing"));
  if (spec.contains("dependence"))
    e.dependence_override = parse_dependence(spec.at("dependence"), dimension, e.dependence_order);
  if (spec.contains("verdicts")) {
    const json& v = spec.at("verdicts");
    const std::string wv = "experiment.verdicts";
    check_keys(v, wv,
               {"ks_alpha", "check_ks", "diagonality_threshold", "check_diagonality", "variance_band",
                "bias_max_gap"});
    e.verdicts.ks_alpha = get_or<double>(v, wv, "ks_alpha", 0.01);
    e.verdicts.check_ks = get_or<bool>(v, wv, "check_ks", true);
    e.verdicts.check_diagonality = get_or<bool>(v, wv, "check_diagonality", true);
    if (v.contains("diagonality_threshold"))
      e.verdicts.diagonality_threshold = get_as<double>(v.at("diagonality_threshold"), wv + ".diagonality_threshold");
    if (v.contains("variance_band")) {
      const auto band = get_as<std::vector<double>>(v.at("variance_band"), wv + ".variance_band");
      if (band.size() != 2 || !(band[0] < band[1]))
        throw ConfigError(wv + ".variance_band: expected [lo, hi] with lo < hi");
      e.verdicts.variance_ratio_band = std::make_pair(band[0], band[1]);
    }
    if (v.contains("bias_max_gap"))
      e.verdicts.bias_max_gap = get_as<double>(v.at("bias_max_gap"), wv + ".bias_max_gap");
  }
  if (spec.contains("lemma_n"))
    cfg.lemma_n = get_as<std::vector<double>>(spec.at("lemma_n"), "experiment.lemma_n");
  cfg.lemma_threshold = get_or<double>(spec, w, "lemma_threshold", 0.2);
}

} // namespace

double
RunConfig::bandwidth_for(double n_sites) const
{
  return fixed_bandwidth ? *fixed_bandwidth : schedule(n_sites);
}

RunConfig
parse_config(const std::string& text)
{
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"schema", "seed", "dimension", "field", "noise", "kernel", "regions", "data_region", "bandwidth",
              "experiment"});
  const int schema = get_as<int>(require(root, "config", "schema"), "schema");
  if (schema != kConfigSchema)
    throw ConfigError("schema: unsupported version " + std::to_string(schema));

  RunConfig cfg;
  cfg.canonical = root.dump();
  cfg.seed = get_or<std::uint64_t>(root, "config", "seed", 1);
  const int d = get_as<int>(require(root, "config", "dimension"), "dimension");
  if (d < 1 || d > 3)
    throw ConfigError("dimension: expected 1, 2 or 3");

  cfg.field = parse_field(require(root, "config", "field"), d);
  cfg.noise = root.contains("noise") ? parse_noise(root.at("noise")) : NoiseModel::laplace(1.0);
  cfg.kernel = root.contains("kernel") ? parse_kernel(root.at("kernel")) : DeconvKernel::polynomial(3);

  const json& regions = require(root, "config", "regions");
  if (!regions.is_array() || regions.empty())
    throw ConfigError("regions: expected a non-empty array");
  for (std::size_t k = 0; k < regions.size(); ++k)
    cfg.regions.push_back(parse_region(regions[k], d, "regions[" + std::to_string(k) + "]"));
  cfg.data_region = get_or<std::size_t>(root, "config", "data_region", regions.size() - 1);
  if (cfg.data_region >= cfg.regions.size())
    throw ConfigError("data_region: index out of range");

  if (root.contains("bandwidth")) {
    const json& bw = root.at("bandwidth");
    check_keys(bw, "bandwidth", {"scale", "rate", "fixed"});
    if (bw.contains("fixed")) {
      if (bw.contains("rate") || bw.contains("scale"))
        throw ConfigError("bandwidth: give either fixed or scale/rate");
      cfg.fixed_bandwidth = get_as<double>(bw.at("fixed"), "bandwidth.fixed");
      if (!(*cfg.fixed_bandwidth > 0.0))
        throw ConfigError("bandwidth.fixed: must be positive");
    } else {
      cfg.schedule.scale = get_or<double>(bw, "bandwidth", "scale", 1.0);
      cfg.schedule.rate = get_or<double>(bw, "bandwidth", "rate", 0.125);
    }
  }

  if (root.contains("experiment"))
    parse_experiment(root.at("experiment"), cfg, d);
  if (cfg.lemma_n.empty())
    cfg.lemma_n = {1e2, 1e6, 1e10, 1e16};

  ExperimentConfig& e = cfg.experiment;
  e.field = cfg.field;
  e.noise = cfg.noise;
  e.kernel = cfg.kernel;
  e.regions = cfg.regions;
  e.schedule = cfg.schedule;
  e.fixed_bandwidth = cfg.fixed_bandwidth;
  e.seed = cfg.seed;
  return cfg;
}

RunConfig
load_config(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string
config_digest(const std::string& text)
{
  std::string canonical;
  try {
    canonical = json::parse(text).dump();
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string
format_double(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void
write_field_csv(std::ostream& os, const FieldSample& y, const FieldSample* x, const Eigen::VectorXd* theta)
{
  const LatticeRegion& region = *y.region;
  const int d = region.dimension();
  for (int k = 0; k < d; ++k)
    os << 's' << (k + 1) << ',';
  os << 'y';
  if (x)
    os << ",x";
  if (theta)
    os << ",theta";
  os << '\n';
  for (Index i = 0; i < region.size(); ++i) {
    for (int k = 0; k < d; ++k)
      os << region.sites()(k, i) << ',';
    os << format_double(y.values[i]);
    if (x)
      os << ',' << format_double(x->values[i]);
    if (theta)
      os << ',' << format_double((*theta)[i]);
    os << '\n';
  }
}

namespace {

std::vector<std::string>
split_csv(const std::string& line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ','))
    out.push_back(cell);
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

template <class T>
T
parse_cell(const std::string& cell, std::size_t line_no)
{
  T v{};
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + cell + "'");
  return v;
}

} // namespace

Eigen::VectorXd
read_field_csv(std::istream& is, const LatticeRegion& region)
{
  const int d = region.dimension();
  std::string line;
  if (!std::getline(is, line))
    throw DataError("data file is empty");
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  const auto header = split_csv(line);
  std::vector<int> site_col(static_cast<std::size_t>(d), -1);
  int y_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "y")
      y_col = static_cast<int>(c);
    for (int k = 0; k < d; ++k)
      if (header[c] == "s" + std::to_string(k + 1))
        site_col[static_cast<std::size_t>(k)] = static_cast<int>(c);
  }
  if (y_col < 0 || std::find(site_col.begin(), site_col.end(), -1) != site_col.end())
    throw DataError("data header must contain s1..s" + std::to_string(d) + " and y");

  Eigen::VectorXd values(region.size());
  std::vector<char> seen(static_cast<std::size_t>(region.size()), 0);
  Index rows = 0;
  std::size_t line_no = 1;
  Site s(d);
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " columns");
    for (int k = 0; k < d; ++k)
      s[k] = parse_cell<std::int64_t>(cells[static_cast<std::size_t>(site_col[static_cast<std::size_t>(k)])],
                                      line_no);
    const Index idx = region.index_of(s);
    if (idx < 0)
      throw DataError("line " + std::to_string(line_no) + ": site not in the configured region");
    if (seen[static_cast<std::size_t>(idx)])
      throw DataError("line " + std::to_string(line_no) + ": duplicate site");
    seen[static_cast<std::size_t>(idx)] = 1;
    values[idx] = parse_cell<double>(cells[static_cast<std::size_t>(y_col)], line_no);
    ++rows;
  }
  if (rows != region.size())
    throw DataError("site count mismatch: data has " + std::to_string(rows) + " sites, region has " +
                    std::to_string(region.size()));
  return values;
}

void
write_estimate_csv(std::ostream& os, const DensityEstimate& est)
{
  os << "x,fhat,form,b,n_sites\n";
  const std::string form = form_name(est.form);
  const std::string b = format_double(est.bandwidth);
  for (Index j = 0; j < est.grid.size(); ++j)
    os << format_double(est.grid[j]) << ',' << format_double(est.values[j]) << ',' << form << ',' << b << ','
       << est.n_sites << '\n';
}

Eigen::VectorXd
GridSpec::points() const
{
  if (count == 1)
    return Eigen::VectorXd::Constant(1, min);
  return Eigen::VectorXd::LinSpaced(count, min, max);
}

GridSpec
parse_grid(const std::string& text)
{
  const auto first = text.find(':');
  const auto second = first == std::string::npos ? first : text.find(':', first + 1);
  if (text.empty() || second == std::string::npos || text.find(':', second + 1) != std::string::npos)
    throw ConfigError("grid must be min:max:count");
  GridSpec g;
  try {
    g.min = parse_cell<double>(text.substr(0, first), 0);
    g.max = parse_cell<double>(text.substr(first + 1, second - first - 1), 0);
    g.count = parse_cell<int>(text.substr(second + 1), 0);
  } catch (const DataError&) {
    throw ConfigError("grid must be min:max:count with numeric fields");
  }
  if (!std::isfinite(g.min) || !std::isfinite(g.max) || g.count < 1)
    throw ConfigError("grid needs finite bounds and count >= 1");
  if (g.count == 1 ? g.min != g.max : !(g.min < g.max))
    throw ConfigError("grid needs min < max (or min == max with count 1)");
  return g;
}

std::string
utc_timestamp()
{
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void
write_manifest(const std::filesystem::path& path, const RunManifest& manifest)
{
  nlohmann::ordered_json j;
  j["tool"] = "deconvrf";
  j["version"] = kToolVersion;
  j["command"] = manifest.command;
  j["config_digest"] = manifest.config_digest;
  j["seed"] = manifest.seed;
  j["started"] = manifest.started;
  j["finished"] = manifest.finished;
  j["outputs"] = manifest.outputs;
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

} // namespace deconvrf
