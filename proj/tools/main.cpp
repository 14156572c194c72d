// Copyright 2026 The mtforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <iostream>

#include "cli_common.hpp"
#include "mtforge/kernels.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

void write_resolved_config(const CLI::App& app, const CLI::App* sub, const mtforge::cli::Globals& g,
                           const std::filesystem::path& primary) {
  if (primary.empty()) return;
  nlohmann::json j;
  j["seed"] = g.seed;
  j[sub->get_name()] = mtforge::cli::resolved_options(sub);
  (void)app;
  std::ofstream out(primary.string() + ".config.json", std::ios::binary);
  if (!out) throw mtforge::Error("cannot write resolved config next to " + primary.string());
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mtforge::cli;
  CLI::App app{"mtforge: corpus engineering and system combination for machine translation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(false);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config: global keys plus one object per subcommand");

  Globals globals;
  app.add_option("--seed", globals.seed, "random seed")->capture_default_str();
  app.add_option("--workers", globals.workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  Registry registry;
  register_data_commands(app, globals, registry);
  register_model_commands(app, globals, registry);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  log(LogLevel::Info, "simd kernels: " + std::string(mtforge::kernels::name(mtforge::kernels::active().isa)));
  try {
    mtforge::Stopwatch watch;
    Outcome outcome = registry.at(sub->get_name())();
    outcome.report.wall_time_s = watch.seconds();
    write_resolved_config(app, sub, globals, outcome.primary_output);
    std::cout << outcome.report.to_json().dump() << std::endl;
    if (!outcome.report.balanced()) log(LogLevel::Warn, "report counts do not balance");
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << sub->help() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
