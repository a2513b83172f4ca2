#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "domainrank/errors.hpp"
#include "domainrank/pipeline.hpp"

// domainrank <subcommand> --config <file> [--workdir <dir>] [--seed <int>]
// Exit codes: 0 success, 1 domain/config error, 2 I/O error.
int main(int argc, char** argv) {
  CLI::App app{"Rank unlabelled compounds by the probability their activity "
               "exceeds a threshold, correcting a structure-activity model for "
               "reporting bias and distance-dependent degradation."};
  app.require_subcommand(1);

  std::string config_path;
  std::string workdir_override;
  std::int64_t seed_override = -1;

  const auto add_stage = [&](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "pipeline config JSON")->required();
    sub->add_option("--workdir", workdir_override, "artifact directory override");
    sub->add_option("--seed", seed_override, "root seed override");
    return sub;
  };

  add_stage("ingest", "load and deduplicate the labelled and unlabelled inputs");
  add_stage("sample", "draw the active and background setwise-distance samples");
  add_stage("prior", "calibrate the bandwidth and fit the activity prior curve");
  add_stage("degrade", "fit the model plus distance-degradation curves");
  add_stage("covariance", "estimate the distance-dependent activity covariance");
  add_stage("mixture", "fit the normal + Student-t activity distribution");
  add_stage("score", "rank the unlabelled pool with the fitted stages");
  add_stage("evaluate", "run the quantile-split recall benchmark");
  add_stage("synth", "generate a synthetic ground-truth landscape");

  CLI11_PARSE(app, argc, argv);
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    domainrank::PipelineConfig config = domainrank::load_config(config_path);
    if (!workdir_override.empty()) config.workdir = workdir_override;
    if (seed_override >= 0) {
      config.seed = static_cast<std::uint64_t>(seed_override);
      config.synth.seed = config.seed;
    }

    const domainrank::StageStatus status = domainrank::run_stage(stage, config);
    if (status == domainrank::StageStatus::kCached)
      std::cerr << "domainrank " << stage << ": inputs unchanged, artifacts reused\n";
    else
      std::cerr << "domainrank " << stage << ": done\n";
    return 0;
  } catch (const domainrank::IoError& e) {
    std::cerr << "domainrank " << stage << ": I/O error: " << e.what() << '\n';
    return 2;
  } catch (const domainrank::ConfigError& e) {
    std::cerr << "domainrank " << stage << ": config error: " << e.what() << '\n';
    return 1;
  } catch (const domainrank::IngestError& e) {
    std::cerr << "domainrank " << stage << ": ingest error: " << e.what() << '\n';
    return 1;
  } catch (const domainrank::DomainError& e) {
    std::cerr << "domainrank " << stage << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "domainrank " << stage << ": " << e.what() << '\n';
    return 1;
  }
}
