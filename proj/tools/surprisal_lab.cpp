// Command-line front end: train, gen-stimuli, analyze, classify, demo.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "surp/error.hpp"
#include "surp/pipeline.hpp"

namespace {

struct Overrides {
  std::map<std::string, std::string> values;
  std::string config_file;
};

void add_settings(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_file, "settings file with `key = value` lines");
  for (const auto& key : surp::config_keys())
    cmd->add_option("--" + key, o.values[key], "overrides `" + key + "` in the settings");
}

surp::PipelineConfig resolve(CLI::App* cmd, const Overrides& o, surp::PipelineConfig base) {
  surp::PipelineConfig c = o.config_file.empty() ? base : surp::read_config(o.config_file);
  for (const auto& key : surp::config_keys())
    if (cmd->count("--" + key)) c.set(key, o.values.at(key));
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Word surprisal laboratory: n-gram, POS, lexical and syntactic surprisal of "
               "homophonous-phrase stimuli, with rank tests and SVM classification"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* cmd;
    Overrides overrides;
  };
  std::map<std::string, Sub> subs;
  const std::map<std::string, std::string> help{
      {"train", "estimate the word/POS n-gram models and the plain and lexicalized PCFGs"},
      {"gen-stimuli", "sample a stimulus set from the design grammar"},
      {"analyze", "score the stimuli and run the rank tests"},
      {"classify", "run the four SVM classification tasks on the surprisal table"},
      {"demo", "run the whole pipeline on the bundled toy design"},
      {"sample", "sample a treebank and tagged corpus from the design grammar"}};
  for (const auto& [name, text] : help) {
    auto& s = subs[name];
    s.cmd = app.add_subcommand(name, text);
    add_settings(s.cmd, s.overrides);
  }
  std::size_t sample_count = 4000;
  subs["sample"].cmd->add_option("--count", sample_count, "number of sentences");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (auto& [name, s] : subs) {
      if (!s.cmd->parsed()) continue;
      const surp::PipelineConfig base =
          name == "demo" ? surp::toy_config("surprisal_demo") : surp::PipelineConfig{};
      const surp::PipelineConfig config = resolve(s.cmd, s.overrides, base);
      if (name == "train") surp::cmd_train(config, std::cout);
      else if (name == "gen-stimuli") surp::cmd_gen_stimuli(config, std::cout);
      else if (name == "analyze") surp::cmd_analyze(config, std::cout);
      else if (name == "classify") surp::cmd_classify(config, std::cout);
      else if (name == "demo") surp::cmd_demo(config, std::cout);
      else if (name == "sample") surp::cmd_sample(config, sample_count, std::cout);
    }
  } catch (const surp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
