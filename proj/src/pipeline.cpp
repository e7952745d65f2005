#include "surp/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "surp/analysis.hpp"
#include "surp/corpus.hpp"
#include "surp/error.hpp"
#include "surp/ngram.hpp"
#include "surp/pcfg.hpp"
#include "surp/prefix_parser.hpp"
#include "surp/stimuli.hpp"
#include "surp/tasks.hpp"

namespace surp {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size())
    throw Error(fmt::format("{}: '{}' is not a non-negative integer", key, value));
  return static_cast<T>(x);
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size() || !std::isfinite(x))
    throw Error(fmt::format("{}: '{}' is not a number", key, value));
  return x;
}

std::vector<double> parse_list(std::string_view key, std::string_view value) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss{std::string(value)};
  while (std::getline(ss, item, ',')) {
    const double x = parse_double(key, item);
    if (!(x > 0.0)) throw Error(fmt::format("{}: grid values must be positive", key));
    out.push_back(x);
  }
  if (out.empty()) throw Error(fmt::format("{}: empty list", key));
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt::format("{}", v[i]);
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("failed while writing {}", path.string()));
}

template <typename F>
void write_with(const fs::path& path, F&& fill) {
  std::ostringstream buf;
  fill(buf);
  write_text(path, buf.str());
}

void require_file(const fs::path& path, std::string_view what, std::string_view hint) {
  if (path.empty()) throw Error(fmt::format("no {} given; {}", what, hint));
  if (!fs::is_regular_file(path))
    throw Error(fmt::format("{} '{}' does not exist; {}", what, path.string(), hint));
}

fs::path model_path(const PipelineConfig& c, std::string_view name) { return c.out_dir / name; }

NGramModel load_ngram(const fs::path& path) {
  require_file(path, "n-gram model", "run the train subcommand first");
  std::ifstream in(path);
  return NGramModel::load(in, path.string());
}

fs::path stimuli_path(const PipelineConfig& c) {
  return c.stimuli.empty() ? c.out_dir / files::stimuli : c.stimuli;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "corpus",    "treebank",      "head-table", "design-grammar", "stimuli", "out-dir",
      "order",     "pos-order",     "log-base",   "unk-threshold",  "smoothing", "alpha",
      "seed",      "folds",         "per-class",  "parser",         "c-grid",  "gamma-grid"};
  return keys;
}

void PipelineConfig::set(std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  if (key == "corpus") corpus = value;
  else if (key == "treebank") treebank = value;
  else if (key == "head-table") head_table = value;
  else if (key == "design-grammar") design_grammar = value;
  else if (key == "stimuli") stimuli = value;
  else if (key == "out-dir") {
    if (value.empty()) throw Error("out-dir must not be empty");
    out_dir = value;
  } else if (key == "order" || key == "pos-order") {
    const auto n = parse_unsigned<std::size_t>(key, value);
    if (n < 1 || n > 5) throw Error(fmt::format("{} must be between 1 and 5", key));
    (key == "order" ? order : pos_order) = n;
  } else if (key == "log-base") {
    log_base = LogBase(parse_double(key, value)).base();
  } else if (key == "unk-threshold") {
    unk_threshold = parse_unsigned<std::size_t>(key, value);
    if (unk_threshold < 1) throw Error("unk-threshold must be at least 1");
  } else if (key == "smoothing") {
    smoothing = parse_double(key, value);
    if (smoothing < 0.0) throw Error("smoothing must be >= 0");
  } else if (key == "alpha") {
    alpha = parse_double(key, value);
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  } else if (key == "seed") {
    seed = parse_unsigned<std::uint64_t>(key, value);
  } else if (key == "folds") {
    folds = parse_unsigned<std::size_t>(key, value);
    if (folds < 2) throw Error("folds must be at least 2");
  } else if (key == "per-class") {
    per_class = parse_unsigned<std::size_t>(key, value);
    if (per_class < 1) throw Error("per-class must be at least 1");
  } else if (key == "parser") {
    if (value != "pcfg" && value != "lexicalized")
      throw Error(fmt::format("parser must be pcfg or lexicalized, got '{}'", value));
    parser = value;
  } else if (key == "c-grid") {
    c_grid = parse_list(key, value);
  } else if (key == "gamma-grid") {
    gamma_grid = parse_list(key, value);
  } else {
    throw Error(fmt::format("unknown setting '{}'", key));
  }
}

std::string PipelineConfig::serialize() const {
  std::string s;
  auto line = [&](std::string_view k, const std::string& v) { s += fmt::format("{} = {}\n", k, v); };
  line("corpus", corpus.string());
  line("treebank", treebank.string());
  line("head-table", head_table.string());
  line("design-grammar", design_grammar.string());
  line("stimuli", stimuli.string());
  line("out-dir", out_dir.string());
  line("order", std::to_string(order));
  line("pos-order", std::to_string(pos_order));
  line("log-base", fmt::format("{}", log_base));
  line("unk-threshold", std::to_string(unk_threshold));
  line("smoothing", fmt::format("{}", smoothing));
  line("alpha", fmt::format("{}", alpha));
  line("seed", std::to_string(seed));
  line("folds", std::to_string(folds));
  line("per-class", std::to_string(per_class));
  line("parser", parser);
  line("c-grid", format_list(c_grid));
  line("gamma-grid", format_list(gamma_grid));
  return s;
}

PipelineConfig parse_config(std::string_view text, const std::string& source,
                            const fs::path& base) {
  PipelineConfig c;
  std::stringstream ss{std::string(text)};
  std::string line;
  std::size_t ln = 0;
  while (std::getline(ss, line)) {
    ++ln;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, ln, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    try {
      c.set(key, value);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, ln, e.what());
    }
    const bool is_path = key == "corpus" || key == "treebank" || key == "head-table" ||
                         key == "design-grammar" || key == "stimuli" || key == "out-dir";
    if (is_path && !base.empty() && !value.empty() && fs::path(value).is_relative())
      c.set(key, (base / value).lexically_normal().string());
  }
  return c;
}

PipelineConfig read_config(const fs::path& path) {
  return parse_config(read_file(path), path.string(), path.parent_path());
}

fs::path bundled_data_dir() {
#ifdef SURP_DATA_DIR
  return fs::path(SURP_DATA_DIR);
#else
  return fs::path("data");
#endif
}

PipelineConfig toy_config(const fs::path& out_dir) {
  const fs::path toy = bundled_data_dir() / "toy";
  PipelineConfig c;
  c.corpus = toy / "corpus.tsv";
  c.treebank = toy / "treebank.txt";
  c.head_table = toy / "heads.txt";
  c.design_grammar = toy / "design.pcfg";
  c.out_dir = out_dir;
  return c;
}

void cmd_train(const PipelineConfig& config, std::ostream& log) {
  require_file(config.treebank, "treebank", "set --treebank to a file of bracketed trees");
  require_file(config.head_table, "head table",
               "set --head-table to a file of `CATEGORY left|right CHILD...` lines");
  const Treebank treebank = read_treebank(config.treebank);
  std::vector<TaggedSentence> corpus;
  if (config.corpus.empty()) {
    for (const auto& t : treebank) corpus.push_back(t.tagged());
  } else {
    require_file(config.corpus, "tagged corpus", "set --corpus to a `form<TAB>tag` file");
    corpus = read_tagged_corpus(config.corpus);
  }
  fs::create_directories(config.out_dir);

  const Vocabulary vocab = build_vocab(corpus, config.unk_threshold);
  const NGramModel word =
      train_ngram(corpus, {config.order, UnitMode::word, config.smoothing, {}}, vocab);
  const NGramModel pos =
      train_ngram(corpus, {config.pos_order, UnitMode::pos, config.smoothing, {}}, vocab);
  write_with(model_path(config, files::word_model), [&](std::ostream& o) { word.save(o); });
  write_with(model_path(config, files::pos_model), [&](std::ostream& o) { pos.save(o); });
  log << fmt::format("word {}-gram: {} sentences, {} units\n", word.order(), corpus.size(),
                     word.vocab_size());
  log << fmt::format("POS {}-gram: {} units\n", pos.order(), pos.vocab_size());

  const Pcfg pcfg = estimate_pcfg(treebank);
  const GrammarDiagnostics diag = validate(pcfg);
  log << fmt::format("PCFG: {} trees, {} rules, {}\n", treebank.size(), pcfg.rules().size(),
                     diag.clean() ? "validation clean" : "validation issues:");
  for (const auto& m : diag.messages()) log << "  " << m << '\n';
  write_text(model_path(config, files::grammar), serialize(pcfg, 10));

  const LexicalizedPcfg lex = lexicalize(treebank, read_head_table(config.head_table));
  const GrammarDiagnostics ldiag = validate(lex.grammar);
  log << fmt::format("lexicalized PCFG: {} rules, {}\n", lex.grammar.rules().size(),
                     ldiag.clean() ? "validation clean" : "validation issues:");
  for (const auto& m : ldiag.messages()) log << "  " << m << '\n';
  std::map<std::string, std::size_t> notes;
  for (const auto& d : lex.diagnostics) ++notes[d];
  for (const auto& [d, n] : notes) log << fmt::format("  head rule fallback ({}x): {}\n", n, d);
  write_text(model_path(config, files::lexicalized), serialize(lex, 10));
}

void cmd_gen_stimuli(const PipelineConfig& config, std::ostream& log) {
  require_file(config.design_grammar, "design grammar", "set --design-grammar");
  const Pcfg design = read_grammar(config.design_grammar, GrammarMode::strict);
  const auto trials = generate_toy_stimuli(design, config.per_class, config.seed);
  fs::create_directories(config.out_dir);
  const fs::path out = config.out_dir / files::stimuli;
  write_with(out, [&](std::ostream& o) { write_stimuli(o, trials); });
  log << "generated " << class_count_report(trials) << '\n';
}

void cmd_analyze(const PipelineConfig& config, std::ostream& log) {
  const NGramModel word = load_ngram(model_path(config, files::word_model));
  const NGramModel pos = load_ngram(model_path(config, files::pos_model));
  std::optional<PrefixParser> parser;
  if (config.parser == "lexicalized") {
    const auto path = model_path(config, files::lexicalized);
    require_file(path, "lexicalized grammar", "run the train subcommand first");
    parser.emplace(read_lexicalized(path));
  } else {
    const auto path = model_path(config, files::grammar);
    require_file(path, "grammar", "run the train subcommand first");
    parser.emplace(read_grammar(path));
  }
  const fs::path spath = stimuli_path(config);
  require_file(spath, "stimulus file", "run gen-stimuli or set --stimuli");
  const auto trials = load_stimuli(spath);
  log << "loaded " << class_count_report(trials) << '\n';

  const SurprisalTable table =
      score_stimuli(trials, {word, pos, *parser, LogBase(config.log_base)});
  fs::create_directories(config.out_dir);
  write_with(config.out_dir / files::table, [&](std::ostream& o) { write_surprisal_table(o, table); });
  write_with(config.out_dir / files::long_table, [&](std::ostream& o) { write_long_format(o, table); });

  const auto comparisons = compare_groups(table, config.alpha);
  write_text(config.out_dir / files::stats, stats_json(comparisons, config.alpha).dump(2) + "\n");
  for (const auto& c : comparisons) {
    if (c.grouping != Grouping::condition) continue;
    log << fmt::format("{:<9} w{}: H = {:8.3f}, p = {:.3g}\n", to_string(c.notion), c.position + 1,
                       c.omnibus.statistic, c.omnibus.p_value);
  }
}

void cmd_classify(const PipelineConfig& config, std::ostream& log) {
  const fs::path path = config.out_dir / files::table;
  require_file(path, "surprisal table", "run the analyze subcommand first");
  const SurprisalTable table = read_surprisal_table(path);
  ClassificationOptions opt;
  opt.grid = {config.c_grid, config.gamma_grid};
  opt.folds = config.folds;
  opt.seed = config.seed;
  const auto reports = run_tasks(table, opt);
  write_with(config.out_dir / files::results, [&](std::ostream& o) { write_results(o, reports); });
  const auto comparisons = compare_feature_sets(reports, config.alpha);
  const std::string summary = classification_summary(reports, comparisons);
  write_text(config.out_dir / files::classification, summary);
  log << summary;
}

void cmd_sample(const PipelineConfig& config, std::size_t count, std::ostream& log) {
  require_file(config.design_grammar, "design grammar", "set --design-grammar");
  const Pcfg design = read_grammar(config.design_grammar, GrammarMode::strict);
  std::mt19937_64 rng(config.seed);
  std::string trees;
  std::vector<TaggedSentence> corpus;
  for (std::size_t i = 0; i < count; ++i) {
    const Tree t = sample_tree(design, rng);
    trees += to_bracketed(t) + "\n";
    corpus.push_back(t.tagged());
  }
  fs::create_directories(config.out_dir);
  write_text(config.out_dir / "treebank.txt", trees);
  write_with(config.out_dir / "corpus.tsv",
             [&](std::ostream& o) { write_tagged_corpus(o, corpus); });
  log << fmt::format("sampled {} sentences into {}\n", count, config.out_dir.string());
}

namespace {

std::string separation_summary(const SurprisalTable& table, double alpha) {
  const auto comparisons = compare_groups(table, alpha);
  std::string s;
  s += fmt::format("Pairwise separation of the predictability conditions (Holm-adjusted p < {}):\n",
                   alpha);
  for (std::size_t pos = 0; pos < 2; ++pos) {
    for (Notion n : kNotions) {
      const auto& c = find_comparison(comparisons, n, pos, Grouping::condition);
      std::vector<std::string> sep;
      for (const auto& p : c.pairs)
        if (p.reject)
          sep.push_back(fmt::format("{}/{} {}", c.groups[p.a], c.groups[p.b],
                                    significance_stars(p.adjusted_p)));
      s += fmt::format("  HP word {} {:<9} {}/{} pairs", pos + 1, to_string(n), sep.size(),
                       c.pairs.size());
      for (const auto& x : sep) s += "; " + x;
      s += '\n';
    }
  }
  const auto& syn = find_comparison(comparisons, Notion::syntactic, 0, Grouping::condition);
  bool all = syn.groups.size() == 3;
  for (const auto& p : syn.pairs) all = all && p.reject;
  s += fmt::format("Syntactic surprisal {} all three predictability classes at HP word 1.\n",
                   all ? "separates" : "does not separate");

  // UNPRED NP/VP trials come in pairs sharing the words up to the HP end.
  std::map<std::string, const SurprisalRow*> np;
  std::size_t pairs = 0;
  std::size_t identical = 0;
  for (const auto& r : table)
    if (r.condition == Condition::unpred && r.phrase_type == PhraseType::np) {
      const auto dash = r.trial_id.rfind('-');
      np[dash == std::string::npos ? r.trial_id : r.trial_id.substr(dash)] = &r;
    }
  for (const auto& r : table) {
    if (r.condition != Condition::unpred || r.phrase_type != PhraseType::vp) continue;
    const auto dash = r.trial_id.rfind('-');
    auto it = np.find(dash == std::string::npos ? r.trial_id : r.trial_id.substr(dash));
    if (it == np.end()) continue;
    ++pairs;
    if (it->second->value(Notion::ngram, 0) == r.value(Notion::ngram, 0) &&
        it->second->value(Notion::ngram, 1) == r.value(Notion::ngram, 1))
      ++identical;
  }
  const auto& w1 = find_comparison(comparisons, Notion::ngram, 0, Grouping::stimulus_class);
  const auto& w2 = find_comparison(comparisons, Notion::ngram, 1, Grouping::stimulus_class);
  auto unpred_p = [&](const GroupComparison& c) {
    for (const auto& p : c.pairs)
      if (c.groups[p.a] == "UNPRED-NP" && c.groups[p.b] == "UNPRED-VP") return p.adjusted_p;
    return std::nan("");
  };
  s += fmt::format(
      "Word n-gram surprisal {} UNPRED NP from UNPRED VP at the HP: {}/{} matched pairs have "
      "identical values at both HP words (adjusted p = {:.3g} at word 1, {:.3g} at word 2).\n",
      identical == pairs && unpred_p(w1) >= alpha && unpred_p(w2) >= alpha ? "does not separate"
                                                                          : "separates",
      identical, pairs, unpred_p(w1), unpred_p(w2));
  return s;
}

}  // namespace

void cmd_demo(const PipelineConfig& config, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  log << "== train\n";
  cmd_train(config, log);
  log << "== gen-stimuli\n";
  cmd_gen_stimuli(config, log);
  log << "== analyze\n";
  cmd_analyze(config, log);
  log << "== classify\n";
  cmd_classify(config, log);

  const SurprisalTable table = read_surprisal_table(config.out_dir / files::table);
  std::string summary = separation_summary(table, config.alpha);
  summary += "\nClassification (mean accuracy over outer folds):\n";
  summary += read_file(config.out_dir / files::classification);
  write_text(config.out_dir / files::summary, summary);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log << "== summary\n" << summary;
  log << fmt::format("demo finished in {:.1f} s; outputs in {}\n", secs, config.out_dir.string());
}

}  // namespace surp
