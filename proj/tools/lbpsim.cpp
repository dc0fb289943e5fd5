#include <CLI11.hpp>
#include <iostream>
#include <thread>

#include "lbp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Logistic branching process simulator and Lambda-coalescent duality checks"};
  app.set_version_flag("--version", LBP_VERSION);
  app.require_subcommand(1);

  lbp::cli::Options opt;
  opt.threads = std::max(1u, std::thread::hardware_concurrency());
  std::string out;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config, "Experiment config (INI) or a metadata.json from a previous run");
    if (needs_config) c->required();
    sub->add_option("--out", out, "Output directory (overrides task.out)");
    sub->add_option("--seed", seed, "Master seed (overrides run.seed)");
    sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));
  };

  for (const char* name : {"simulate", "coalescent", "fv", "duality", "occupation"}) {
    auto* sub = app.add_subcommand(name);
    add_common(sub, true);
    if (std::string(name) == "simulate") {
      sub->add_flag("--long", opt.long_format, "Single long-format CSV with a replicate column");
    }
  }
  auto* selftest = app.add_subcommand("selftest", "Fast exact checks and golden-file comparison");
  selftest->add_option("--golden", opt.golden_dir, "Directory holding the golden CSV files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lbp::cli::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommand(command);
  if (command != "selftest") {
    if (sub->count("--out")) opt.out = out;
    if (sub->count("--seed")) opt.seed = seed;
  }
  return lbp::cli::run(command, opt, std::cerr);
}
