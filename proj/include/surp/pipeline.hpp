#pragma once

// Experiment orchestration behind the command-line subcommands.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace surp {

struct PipelineConfig {
  std::filesystem::path corpus;          // tagged corpus; empty: treebank yields
  std::filesystem::path treebank;
  std::filesystem::path head_table;
  std::filesystem::path design_grammar;
  std::filesystem::path stimuli;         // empty: <out-dir>/stimuli.csv
  std::filesystem::path out_dir = "surprisal_out";
  std::size_t order = 3;
  std::size_t pos_order = 3;
  double log_base = 2.0;
  std::size_t unk_threshold = 2;
  double smoothing = 0.1;                // additive constant of the n-gram models
  double alpha = 0.05;                   // significance level
  std::uint64_t seed = 42;
  std::size_t folds = 10;
  std::size_t per_class = 30;
  std::string parser = "pcfg";           // "pcfg" or "lexicalized"
  std::vector<double> c_grid{0.001, 0.01, 0.1, 1.0, 10.0};
  std::vector<double> gamma_grid{0.001, 0.01, 0.1, 1.0};

  // Keys are the flag names without the leading dashes, e.g. "pos-order".
  void set(std::string_view key, std::string_view value);
  std::string serialize() const;
  bool operator==(const PipelineConfig&) const = default;
};

// `key = value` lines, `#` comments. Relative paths are taken relative to
// the config file's directory when `base` is given.
PipelineConfig parse_config(std::string_view text, const std::string& source = "<string>",
                            const std::filesystem::path& base = {});
PipelineConfig read_config(const std::filesystem::path& path);

// Keys accepted by PipelineConfig::set, in serialization order.
const std::vector<std::string>& config_keys();

// Directory holding the bundled toy design.
std::filesystem::path bundled_data_dir();
// Config pointing at the bundled toy fixtures.
PipelineConfig toy_config(const std::filesystem::path& out_dir);

namespace files {
inline constexpr std::string_view word_model = "word.ngram";
inline constexpr std::string_view pos_model = "pos.ngram";
inline constexpr std::string_view grammar = "grammar.pcfg";
inline constexpr std::string_view lexicalized = "lexicalized.pcfg";
inline constexpr std::string_view stimuli = "stimuli.csv";
inline constexpr std::string_view table = "surprisal_table.csv";
inline constexpr std::string_view long_table = "surprisal_long.csv";
inline constexpr std::string_view stats = "stats.json";
inline constexpr std::string_view results = "results.csv";
inline constexpr std::string_view classification = "classification_summary.txt";
inline constexpr std::string_view summary = "summary.txt";
}  // namespace files

// Each command writes its artifacts into config.out_dir and progress to `log`.
void cmd_train(const PipelineConfig& config, std::ostream& log);
void cmd_gen_stimuli(const PipelineConfig& config, std::ostream& log);
void cmd_analyze(const PipelineConfig& config, std::ostream& log);
void cmd_classify(const PipelineConfig& config, std::ostream& log);
// Samples `count` trees from the design grammar into <out-dir>/treebank.txt
// and their tagged yields into <out-dir>/corpus.tsv.
void cmd_sample(const PipelineConfig& config, std::size_t count, std::ostream& log);
// train -> gen-stimuli -> analyze -> classify, then a plain-text summary.
void cmd_demo(const PipelineConfig& config, std::ostream& log);

}  // namespace surp
