// Command-line driver. One subcommand per pipeline stage plus `run`, which
// executes the whole chain. Exit codes: 1 for usage problems, 2 for bad or
// missing data, 3 for stale artifacts that need an upstream stage rerun.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "earlyrisk/config.hpp"
#include "earlyrisk/io.hpp"
#include "earlyrisk/pipeline.hpp"

namespace {

void print_report(const std::filesystem::path& path) {
  const std::string text = earlyrisk::read_text_file(path);
  std::fwrite(text.data(), 1, text.size(), stdout);
}

int dispatch(const std::string& stage, earlyrisk::pipeline::Context& ctx) {
  using namespace earlyrisk::pipeline;
  const Paths paths = make_paths(ctx.config);
  if (stage == "generate") {
    cmd_generate(ctx);
  } else if (stage == "preprocess") {
    cmd_preprocess(ctx);
  } else if (stage == "fit-lsi") {
    cmd_fit_lsi(ctx);
  } else if (stage == "train") {
    cmd_train(ctx);
  } else if (stage == "simulate") {
    cmd_simulate(ctx);
  } else if (stage == "evaluate") {
    cmd_evaluate(ctx);
    print_report(paths.report);
  } else if (stage == "ablate") {
    cmd_ablate(ctx);
    print_report(paths.ablation_report);
  } else if (stage == "run") {
    cmd_generate(ctx);
    cmd_preprocess(ctx);
    cmd_fit_lsi(ctx);
    cmd_train(ctx);
    cmd_simulate(ctx);
    cmd_evaluate(ctx);
    print_report(paths.report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"early depression detection over chunked text corpora"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seed_text;
  std::vector<std::string> overrides;
  earlyrisk::pipeline::Context ctx;

  app.add_option("--config", config_path,
                 "configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed_text, "master seed (shorthand for --set)");
  app.add_option("--set", overrides, "override one configuration key, key=value")
      ->allow_extra_args(false);
  app.add_flag("--force", ctx.force, "rerun the stage even if it is up to date");
  app.add_flag("--emit-trace", ctx.emit_trace,
               "simulate also writes a per-week trace.txt");
  app.add_flag("--quiet", ctx.quiet, "suppress progress output");

  const char* stage_names[] = {"generate", "preprocess", "fit-lsi", "train",
                               "simulate", "evaluate", "ablate", "run"};
  const char* stage_help[] = {
      "write synthetic train and test corpora",
      "downsample controls, mine collocations, build the vocabulary",
      "fit the latent topic model",
      "train the confidence classifier",
      "run week-by-week decisions on the test corpus",
      "score the decisions and write the report",
      "train and score the baseline gate and a lambda sweep",
      "run every stage in order"};
  for (std::size_t i = 0; i < 8; ++i) {
    app.add_subcommand(stage_names[i], stage_help[i])->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!config_path.empty()) {
      earlyrisk::config::load_config_file(ctx.config, config_path);
    }
    if (const char* env = std::getenv("EARLYRISK_ARTIFACTS")) {
      ctx.config.artifacts_dir = env;
    }
    if (!seed_text.empty()) {
      earlyrisk::config::set_value(ctx.config, "seed", seed_text);
    }
    for (const auto& spec : overrides) {
      earlyrisk::config::apply_override(ctx.config, spec);
    }
    return dispatch(app.get_subcommands().front()->get_name(), ctx);
  } catch (const earlyrisk::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const earlyrisk::StaleArtifactError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const earlyrisk::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
