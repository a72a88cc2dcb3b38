#include "deconvrf/commands.hpp"

#include "deconvrf/config.hpp"
#include "deconvrf/errors.hpp"
#include "deconvrf/mc_harness.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

namespace deconvrf {

using ojson = nlohmann::ordered_json;

namespace {

template <class F>
int
guarded(std::ostream& err, F&& body)
{
  try {
    return body();
  } catch (const ConditionViolation& e) {
    err << "deconvrf: " << e.condition() << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "deconvrf: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "deconvrf: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const Unsupported& e) {
    err << "deconvrf: unsupported: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "deconvrf: invalid configuration: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "deconvrf: " << e.what() << '\n';
    return kExitFailure;
  }
}

RunConfig
load(const CommandOptions& opts)
{
  if (opts.config.empty())
    throw ConfigError("--config is required");
  RunConfig cfg = load_config(opts.config);
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.experiment.seed = *opts.seed;
  }
  if (opts.threads) {
    if (*opts.threads < 0)
      throw ConfigError("--threads must be non-negative");
    cfg.experiment.threads = *opts.threads;
  }
  return cfg;
}

std::ofstream
open_output(const std::filesystem::path& path)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::filesystem::path
manifest_path_for(const std::filesystem::path& out)
{
  return std::filesystem::path(out.string() + ".manifest.json");
}

RunManifest
begin_manifest(const std::string& command, const RunConfig& cfg)
{
  RunManifest m;
  m.command = command;
  m.config_digest = cfg.canonical.empty() ? std::string() : config_digest(cfg.canonical);
  m.seed = cfg.seed;
  m.started = utc_timestamp();
  return m;
}

ojson
number_or_null(double v)
{
  return std::isfinite(v) ? ojson(v) : ojson(nullptr);
}

ojson
lemma_json(const LemmaReport& r)
{
  ojson j;
  j["kind"] = r.kind;
  j["threshold"] = r.threshold;
  j["rows"] = ojson::array();
  for (const auto& row : r.rows) {
    ojson jr;
    jr["n"] = row.n;
    jr["bandwidth"] = row.bandwidth;
    jr["m"] = row.m;
    jr["block_volume"] = row.block_volume;
    jr["scaled_tail"] = row.scaled_tail;
    jr["truncated"] = row.truncated;
    j["rows"].push_back(jr);
  }
  j["m_grows"] = r.m_grows;
  j["volume_decreasing"] = r.volume_decreasing;
  j["volume_below_threshold"] = r.volume_below_threshold;
  j["tail_decreasing"] = r.tail_decreasing;
  j["tail_below_threshold"] = r.tail_below_threshold;
  j["tail_identically_zero"] = r.tail_identically_zero;
  j["converges"] = r.converges();
  return j;
}

LemmaReport
lemma_report(const RunConfig& cfg)
{
  const ExperimentConfig& e = cfg.experiment;
  const int d = cfg.field.dimension();
  BlockingProfile profile = e.theorem == TheoremTag::mixing
                              ? BlockingProfile(e.mixing_override ? *e.mixing_override : mixing_profile_of(cfg.field))
                              : BlockingProfile(e.dependence_override
                                                  ? *e.dependence_override
                                                  : dependence_profile_of(cfg.field, e.dependence_order));
  return check_lemma_limits(cfg.schedule, profile, d, cfg.lemma_n, cfg.lemma_threshold);
}

ojson
region_sequence_json(const RegionSequenceReport& r)
{
  ojson j;
  j["entries"] = ojson::array();
  for (const auto& e : r.entries)
    j["entries"].push_back({{"size", e.size}, {"boundary_size", e.boundary_size}, {"ratio", e.ratio}});
  j["sizes_strictly_increasing"] = r.sizes_strictly_increasing;
  j["ratio_nonincreasing_tail"] = r.ratio_nonincreasing_tail;
  j["consistent"] = r.consistent;
  return j;
}

ojson
summary_json(const CltReport& report, const RunConfig& cfg)
{
  ojson j;
  j["theorem"] = theorem_name(report.theorem);
  j["admissibility"] = report.admissibility;
  j["field"] = cfg.field.model_name();
  j["noise"] = cfg.noise.tag_name();
  j["kernel"] = cfg.kernel.tag_name();
  j["beta"] = report.beta;
  j["limit_constant"] = report.limit_constant;
  j["replicates"] = report.replicates;
  j["seed"] = cfg.seed;
  j["points"] = report.points;
  j["density_method"] = report.density_method;
  j["centering"] = "replicate mean";
  j["region_sequence"] = region_sequence_json(report.region_sequence);
  j["regions"] = ojson::array();
  for (const auto& r : report.regions) {
    ojson jr;
    jr["n_sites"] = r.n_sites;
    jr["bandwidth"] = r.bandwidth;
    jr["tabulated"] = r.tabulated;
    jr["table_check_error"] = r.table_check_error;
    jr["points"] = ojson::array();
    for (Index p = 0; p < static_cast<Index>(report.points.size()); ++p) {
      ojson jp;
      jp["x"] = report.points[static_cast<std::size_t>(p)];
      jp["fy"] = r.fy[p];
      jp["sigma2"] = r.sigma2[p];
      jp["mean"] = r.mean[p];
      jp["variance"] = r.variance[p];
      jp["variance_ratio"] = r.variance_ratio[p];
      jp["fx"] = number_or_null(r.fx[p]);
      jp["bias_gap"] = number_or_null(r.bias_gap[p]);
      jp["ks_statistic"] = r.ks[static_cast<std::size_t>(p)].statistic;
      jp["ks_p_value"] = r.ks[static_cast<std::size_t>(p)].p_value;
      jp["ks_studentized_statistic"] = r.ks_studentized[static_cast<std::size_t>(p)].statistic;
      jp["ks_studentized_p_value"] = r.ks_studentized[static_cast<std::size_t>(p)].p_value;
      jp["expected_quadrature"] = number_or_null(r.expected_quadrature[p]);
      jp["centering_z"] = number_or_null(r.centering_z[p]);
      jp["finite_bandwidth_sigma2"] = number_or_null(r.finite_bandwidth_sigma2[p]);
      jp["finite_bandwidth_ratio"] = number_or_null(r.finite_bandwidth_ratio[p]);
      jr["points"].push_back(jp);
    }
    ojson corr = ojson::array();
    for (Index a = 0; a < r.correlation.rows(); ++a) {
      ojson row = ojson::array();
      for (Index b = 0; b < r.correlation.cols(); ++b)
        row.push_back(r.correlation(a, b));
      corr.push_back(row);
    }
    jr["correlation"] = corr;
    j["regions"].push_back(jr);
  }
  ojson v;
  v["ks_pass"] = report.ks_pass;
  if (report.diagonality) {
    v["diagonality_pass"] = report.diagonality->pass;
    v["diagonality_threshold"] = report.diagonality->threshold;
    v["diagonality_max_abs_offdiag"] = report.diagonality->max_abs_offdiag;
  }
  if (report.variance_pass)
    v["variance_pass"] = *report.variance_pass;
  if (report.bias_pass)
    v["bias_pass"] = *report.bias_pass;
  v["all_pass"] = report.all_pass();
  j["verdicts"] = v;
  return j;
}

} // namespace

int
cmd_simulate(const CommandOptions& opts, std::ostream& err)
{
  return guarded(err, [&] {
    const RunConfig cfg = load(opts);
    if (opts.out.empty())
      throw ConfigError("--out is required");
    RunManifest manifest = begin_manifest("simulate", cfg);
    const RegionPtr region = cfg.region_ptr();
    const FieldSample x = cfg.field.simulate(region, cfg.seed);
    const FieldSample y = add_noise(x, cfg.noise, cfg.seed);
    {
      std::ofstream out = open_output(opts.out);
      if (opts.components) {
        const Eigen::VectorXd theta = y.values - x.values;
        write_field_csv(out, y, &x, &theta);
      } else {
        write_field_csv(out, y);
      }
    }
    manifest.outputs.push_back(opts.out.filename().string());
    manifest.finished = utc_timestamp();
    write_manifest(manifest_path_for(opts.out), manifest);
    return static_cast<int>(kExitOk);
  });
}

int
cmd_estimate(const CommandOptions& opts, std::ostream& err)
{
  return guarded(err, [&] {
    const RunConfig cfg = load(opts);
    if (opts.out.empty())
      throw ConfigError("--out is required");
    if (opts.data.empty())
      throw ConfigError("--data is required");
    const GridSpec grid = parse_grid(opts.grid);
    EstimatorForm form;
    if (opts.form == "direct")
      form = EstimatorForm::direct;
    else if (opts.form == "cf")
      form = EstimatorForm::cf;
    else
      throw ConfigError("--form must be direct or cf");

    RunManifest manifest = begin_manifest("estimate", cfg);
    std::ifstream in(opts.data, std::ios::binary);
    if (!in)
      throw DataError("cannot read data file " + opts.data.string());
    const Eigen::VectorXd y = read_field_csv(in, cfg.region());
    const double b = cfg.bandwidth_for(static_cast<double>(y.size()));
    const Eigen::VectorXd points = grid.points();
    const DensityEstimate est = form == EstimatorForm::direct
                                  ? estimate_direct(y, cfg.kernel, cfg.noise, b, points)
                                  : estimate_cf_form(y, cfg.kernel, cfg.noise, b, points);
    {
      std::ofstream out = open_output(opts.out);
      write_estimate_csv(out, est);
    }
    manifest.outputs.push_back(opts.out.filename().string());
    manifest.finished = utc_timestamp();
    write_manifest(manifest_path_for(opts.out), manifest);
    return static_cast<int>(kExitOk);
  });
}

int
cmd_clt(const CommandOptions& opts, std::ostream& err)
{
  return guarded(err, [&] {
    const RunConfig cfg = load(opts);
    if (opts.out.empty())
      throw ConfigError("--out is required");
    RunManifest manifest = begin_manifest("clt", cfg);
    const CltReport report = run_experiment(cfg.experiment);
    const LemmaReport lemma = lemma_report(cfg);

    std::filesystem::create_directories(opts.out);
    {
      std::ofstream out = open_output(opts.out / "replicates.csv");
      out << "region,replicate,x,fhat,standardized\n";
      for (std::size_t ri = 0; ri < report.regions.size(); ++ri) {
        const RegionResult& r = report.regions[ri];
        for (Index rep = 0; rep < r.fhat.rows(); ++rep)
          for (Index p = 0; p < r.fhat.cols(); ++p)
            out << ri << ',' << rep << ',' << format_double(report.points[static_cast<std::size_t>(p)]) << ','
                << format_double(r.fhat(rep, p)) << ',' << format_double(r.standardized(rep, p)) << '\n';
      }
    }
    {
      std::ofstream out = open_output(opts.out / "summary.json");
      out << summary_json(report, cfg).dump(2) << '\n';
    }
    {
      std::ofstream out = open_output(opts.out / "lemma.json");
      out << lemma_json(lemma).dump(2) << '\n';
    }
    manifest.outputs = {"replicates.csv", "summary.json", "lemma.json"};
    manifest.finished = utc_timestamp();
    write_manifest(opts.out / "manifest.json", manifest);
    if (!report.all_pass()) {
      err << "deconvrf: verdict failure (see summary.json)\n";
      return static_cast<int>(kExitVerdict);
    }
    return static_cast<int>(kExitOk);
  });
}

int
cmd_check(const CommandOptions& opts, std::ostream& out, std::ostream& err)
{
  return guarded(err, [&] {
    const RunConfig cfg = load(opts);
    validate_experiment(cfg.experiment);
    const LemmaReport lemma = lemma_report(cfg);
    std::vector<LatticeRegion> regions;
    for (const auto& r : cfg.regions)
      regions.push_back(*r);

    ojson j;
    j["noise"] = cfg.noise.tag_name() + " (A3 holds, beta = " + format_double(cfg.noise.beta()) + ")";
    j["schedule"] = "b_n = " + format_double(cfg.schedule.scale) + " |L|^-" + format_double(cfg.schedule.rate) +
                    " (A5 holds)";
    j["theorem"] = theorem_name(cfg.experiment.theorem);
    {
      const ExperimentConfig& e = cfg.experiment;
      const int d = cfg.field.dimension();
      if (e.theorem == TheoremTag::mixing) {
        const auto v =
          check_mixing_summability(e.mixing_override ? *e.mixing_override : mixing_profile_of(cfg.field), d);
        j["summability"] = {{"condition", "(7)"}, {"finite", v.finite}, {"partial_sum", v.partial_sum},
                            {"reason", v.reason}};
      } else {
        const auto v = check_dependence_summability(
          e.dependence_override ? *e.dependence_override : dependence_profile_of(cfg.field, e.dependence_order), d,
          10'000);
        j["summability"] = {{"condition", "(8)"}, {"finite", v.finite}, {"partial_sum", v.partial_sum},
                            {"reason", v.reason}};
      }
    }
    j["region_sequence"] = region_sequence_json(check_region_sequence(regions));
    j["lemma"] = lemma_json(lemma);
    if (opts.out.empty()) {
      out << j.dump(2) << '\n';
    } else {
      std::ofstream f = open_output(opts.out);
      f << j.dump(2) << '\n';
    }
    if (!lemma.converges()) {
      err << "deconvrf: blocking sequences do not converge\n";
      return static_cast<int>(kExitVerdict);
    }
    return static_cast<int>(kExitOk);
  });
}

} // namespace deconvrf
