#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cfmpp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cfmpp: function-marked point process simulation and inference"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int replicates = 1;
  for (const char* name : {"simulate", "summarize", "estimate", "geometry", "check"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "base seed (overrides the config)");
    sub->add_option("--replicates", replicates, "replicate count (overrides the config)")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cfmpp::kExitValidation;
  }

  const auto* sub = app.get_subcommands().front();
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> replicates_override;
  if (sub->count("--out")) out_dir = out;
  if (sub->count("--seed")) seed_override = seed;
  if (sub->count("--replicates")) replicates_override = replicates;

  try {
    const auto cfg = cfmpp::load_run_config(config, sub->get_name(), out_dir, seed_override, replicates_override);
    const auto outcome = cfmpp::run(cfg);
    std::cerr << outcome.message << '\n';
    return outcome.exit_code;
  } catch (const cfmpp::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cfmpp::kExitValidation;
  } catch (const cfmpp::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cfmpp::kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cfmpp::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cfmpp::kExitRuntime;
  }
}
