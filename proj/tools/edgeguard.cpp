// edgeguard command line front end. Links only the C interface.
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "edgeguard/edgeguard.h"

namespace {

struct Option {
  std::string key;
  std::string value;
  bool is_flag = false;
  bool flag_value = false;
};

std::string dashed(std::string key) {
  for (char& ch : key) {
    if (ch == '_') ch = '-';
  }
  return key;
}

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-consistency detector for perturbed inputs of a joint depth and segmentation network"};
  app.require_subcommand(1);
  app.footer(
      "Config files hold one 'key = value' per line; '#' starts a comment. Keys match the long\n"
      "flags with '-' written as '_'. Flags override the file. EDGEGUARD_SEED supplies the seed\n"
      "when neither sets one.\n"
      "Exit codes: 0 success, 1 invalid usage or input, 2 runtime failure.");

  std::map<std::string, std::vector<Option>> options;
  std::map<std::string, CLI::App*> subs;
  for (std::size_t i = 0; i < eg_command_count(); ++i) {
    const std::string cmd = eg_command_name(i);
    CLI::App* sub = app.add_subcommand(cmd, "");
    subs[cmd] = sub;
    std::size_t count = 0;
    eg_command_key_count(cmd.c_str(), &count);
    auto& opts = options[cmd];
    opts.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      const char *name, *def, *help;
      int required = 0;
      eg_command_key(cmd.c_str(), k, &name, &def, &help, &required);
      opts.push_back({name, "", std::string(name) == "force", false});
    }
    for (auto& o : opts) {
      std::size_t k = &o - opts.data();
      const char *name, *def, *help;
      int required = 0;
      eg_command_key(cmd.c_str(), k, &name, &def, &help, &required);
      std::string text = help;
      if (required) text += " (required)";
      else if (*def != '\0' && !o.is_flag) text += " [" + std::string(def) + "]";
      if (o.is_flag) {
        sub->add_flag("--" + dashed(o.key), o.flag_value, text);
      } else {
        sub->add_option("--" + dashed(o.key), o.value, text);
      }
    }
  }
  subs["generate"]->description("render synthetic scenes with depth and labels");
  subs["train"]->description("train the toy depth and segmentation network");
  subs["calibrate"]->description("fit detector thresholds on clean samples");
  subs["attack"]->description("perturb a split and write the perturbed samples");
  subs["detect"]->description("score samples and write per-sample decisions");
  subs["sweep"]->description("evaluate detection over perturbation kinds and strengths");
  subs["selftest"]->description("run gradient checks and metric oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n\n%s", e.what(), app.help().c_str());
    return 1;
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }

  eg_config* config = nullptr;
  if (eg_config_new(&config) != EG_OK) {
    std::fprintf(stderr, "error: %s\n", eg_last_error());
    return 2;
  }
  eg_status status = EG_OK;
  for (const auto& o : options[command]) {
    const CLI::Option* opt = subs[command]->get_option("--" + dashed(o.key));
    if (opt->count() == 0) continue;
    status = eg_config_set(config, o.key.c_str(), o.is_flag ? (o.flag_value ? "true" : "false") : o.value.c_str());
    if (status != EG_OK) break;
  }
  if (status == EG_OK) status = eg_run(command.c_str(), config, print_line, nullptr);
  eg_config_free(config);
  if (status == EG_OK) return 0;
  std::fprintf(stderr, "error: %s\n", eg_last_error());
  return status == EG_ERR_INVALID_ARGUMENT ? 1 : 2;
}
