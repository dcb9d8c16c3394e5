#include <iostream>

#include <CLI11.hpp>

#include "cli_commands.hpp"

int main(int argc, char** argv) {
  using namespace selreg::cli;
  CLI::App app{"Kernel regression with a reject option"};
  app.set_version_flag("--version", std::string(SELREG_VERSION));
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  DecideArgs d;
  std::string x_text;
  bool h_loocv = false;
  auto* decide = app.add_subcommand("decide", "Fit on a training CSV and accept or reject one query point");
  decide->add_option("--train", d.train, "Training CSV")->required()->check(CLI::ExistingFile);
  decide->add_option("--target-col", d.target_col, "0-based response column (default: last)");
  decide->add_flag("--header", d.header, "First row is a header");
  decide->add_option("--x", x_text, "Query point, comma-separated")->required();
  decide->add_option("--lambda", d.lambda, "Abstention cost")->required();
  auto* beta = decide->add_option("--beta", d.beta, "Significance level in (0, 0.5]");
  auto* z = decide->add_option("--z", d.z, "Critical value used directly");
  beta->excludes(z);
  auto* h = decide->add_option("--h", d.h, "Fixed bandwidth");
  auto* hl = decide->add_flag("--h-loocv", h_loocv, "Select the bandwidth by leave-one-out CV (default)");
  h->excludes(hl);
  decide->add_option("--kernel", d.kernel, "gaussian | epanechnikov")->capture_default_str();
  std::uint64_t unused_seed = 0;
  decide->add_option("--seed", unused_seed, "Accepted for uniformity; decide is deterministic");

  ExperimentArgs e;
  auto* experiment = app.add_subcommand("experiment", "Run a scenario from a JSON config");
  experiment->add_option("--config", e.config, "Config file")->required()->check(CLI::ExistingFile);
  experiment->add_option("--out-dir", e.out_dir, "Output directory")->capture_default_str();
  experiment->add_option("--seed", e.seed, "Override the config seed");

  ValidateArgs v;
  auto* validate = app.add_subcommand("validate", "Check that a CSV parses as a dataset");
  validate->add_option("csv,--csv", v.csv, "CSV file")->required();
  validate->add_flag("--header", v.header, "First row is a header");
  validate->add_option("--target-col", v.target_col, "0-based response column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : kFailure;
  }

  if (*decide) {
    try {
      d.x = parse_point(x_text);
    } catch (const std::exception& ex) {
      std::cerr << "selreg decide: " << ex.what() << '\n';
      return kFailure;
    }
    return cmd_decide(d, std::cout, std::cerr);
  }
  if (*experiment) return cmd_experiment(e, std::cout, std::cerr);
  return cmd_validate(v, std::cout, std::cerr);
}
