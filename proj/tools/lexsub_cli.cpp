// lexsub command-line driver. Every stage reads and writes files under the
// configured output directory (LEXSUB_OUTPUT_DIR overrides it).
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lexsub/candidates.hpp"
#include "lexsub/error.hpp"
#include "lexsub/pipeline.hpp"

namespace {

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const char* describe(const std::string& command) {
  if (command == "synth") return "generate a synthetic corpus with planted effects";
  if (command == "ingest") return "vocabulary, representative words and bigrams";
  if (command == "candidates") return "generate substitution tuples";
  if (command == "estimate") return "run the estimators on every tuple";
  if (command == "rank") return "rank tuples by each estimator";
  if (command == "rct-sample") return "pick RCT items and write annotation batches";
  if (command == "rct-aggregate") return "filter ratings and compute RCT effects";
  if (command == "eval") return "metrics against truth or RCT labels";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lexical substitution effect estimation"};
  app.require_subcommand(1);

  std::string config_path;
  int jobs = 1;
  std::string estimators_flag;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "JSON config file")->required();
  app.add_option("-j,--jobs", jobs, "worker threads for pairs and trees")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "no progress log on stderr");

  for (const auto& command : lexsub::pipeline_commands()) {
    auto* sub = app.add_subcommand(command, describe(command));
    if (command == "estimate" || command == "rct-sample") {
      sub->add_option("--estimators", estimators_flag, "comma-separated subset of knn,vt_rf,cf_rf,csf,perception_clf");
    }
  }
  // Options may also follow the subcommand.
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : static_cast<int>(lexsub::ErrorKind::kInvalidArgument);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    auto config = lexsub::PipelineConfig::load(config_path);
    if (const char* dir = std::getenv("LEXSUB_OUTPUT_DIR"); dir != nullptr && *dir != '\0') config.output_dir = dir;

    lexsub::RunOptions options;
    options.jobs = jobs;
    options.log = quiet ? nullptr : &std::cerr;
    if (!estimators_flag.empty()) {
      auto names = split_names(estimators_flag);
      for (const auto& n : names) {
        if (!lexsub::is_estimator_name(n)) {
          throw lexsub::Error(lexsub::ErrorKind::kInvalidArgument, "--estimators: unknown estimator '" + n + "'");
        }
      }
      options.estimators = std::move(names);
    }
    lexsub::run_command(command, config, options);
  } catch (const lexsub::Error& e) {
    std::cerr << lexsub::error_record(e, command).dump() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    const lexsub::Error wrapped(lexsub::ErrorKind::kNumerical, std::string("internal error: ") + e.what());
    std::cerr << lexsub::error_record(wrapped, command).dump() << '\n';
    return 1;
  }
  return 0;
}
