#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "noncanon/run_config.hpp"
#include "noncanon/types.hpp"

int main(int argc, char** argv) {
  CLI::App app{"noncanon: numerical laboratory for non-canonical field quantization"};
  app.set_version_flag("--version", noncanon::tool_version());
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;

  const char* commands[] = {"combinatorics", "excitations", "amplitude", "thermo-limit",
                            "propagator",    "radiation",   "renorm-sweep"};
  for (const char* name : commands) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "override the config output directory");
  }
  CLI::App* validate =
      app.add_subcommand("validate", "schema-check a config and report derived sizes");
  validate->add_option("--config", config_path, "JSON run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    nlohmann::json config = noncanon::load_config(config_path);
    if (sub == validate) {
      std::cout << noncanon::validate_config(config);
      return 0;
    }
    std::string declared = config.is_object() && config.contains("command") &&
                                   config["command"].is_string()
                               ? config["command"].get<std::string>()
                               : "";
    if (declared != sub->get_name())
      throw noncanon::ConfigError("config.command \"" + declared +
                                  "\" does not match the invoked command \"" + sub->get_name() +
                                  "\"");
    noncanon::RunOverrides overrides;
    if (sub->count("--seed")) overrides.seed = seed;
    if (sub->count("--out")) overrides.out_dir = out_dir;
    nlohmann::json manifest = noncanon::run(config, overrides);
    std::cout << "wrote " << manifest["outputs"].size() << " artifacts to "
              << (overrides.out_dir ? *overrides.out_dir
                                    : manifest["config"].value("output_dir", std::string("out")))
              << "\n";
    return 0;
  } catch (const noncanon::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const noncanon::CapError& e) {
    std::cerr << "resource cap: " << e.what() << "\n";
    return 3;
  } catch (const noncanon::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
