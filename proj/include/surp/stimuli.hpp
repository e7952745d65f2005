#pragma once

// Homophonous-phrase stimuli: trial files, a grammar-driven generator for
// toy designs, and the per-trial surprisal feature table.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "surp/corpus.hpp"
#include "surp/ngram.hpp"
#include "surp/pcfg.hpp"
#include "surp/prefix_parser.hpp"
#include "surp/surprisal.hpp"

namespace surp {

enum class Condition { unpred, strong_pred, weak_pred };
enum class PhraseType { np, vp };

std::string to_string(Condition c);  // "UNPRED", "Strong_PRED", "Weak_PRED"
std::string to_string(PhraseType p);  // "NP", "VP"
Condition condition_from_string(std::string_view text);
PhraseType phrase_type_from_string(std::string_view text);
// "UNPRED-NP" etc.
std::string class_name(Condition c, PhraseType p);

// The five instantiable classes, in report order.
inline constexpr std::array<std::pair<Condition, PhraseType>, 5> kStimulusClasses{{
    {Condition::unpred, PhraseType::np},
    {Condition::unpred, PhraseType::vp},
    {Condition::strong_pred, PhraseType::np},
    {Condition::strong_pred, PhraseType::vp},
    {Condition::weak_pred, PhraseType::np},
}};

struct StimulusTrial {
  std::string id;
  Condition condition = Condition::unpred;
  PhraseType phrase_type = PhraseType::np;
  // Tags are optional in trial files; empty when absent.
  TaggedSentence sentence;
  // Index of the first word of the homophonous phrase.
  std::size_t hp_start = 0;

  std::vector<std::string> forms() const { return sentence.forms(); }
  bool has_tags() const;
  std::string class_name() const { return surp::class_name(condition, phrase_type); }
  bool operator==(const StimulusTrial&) const = default;
};

// CSV with header `id,condition,phrase_type,tokens,hp_start`. The tokens
// field is space-separated; a token may carry its tag as `form/TAG`.
std::vector<StimulusTrial> parse_stimuli(std::string_view text,
                                         const std::string& source = "<string>");
std::vector<StimulusTrial> load_stimuli(const std::filesystem::path& path);
void write_stimuli(std::ostream& out, const std::vector<StimulusTrial>& trials);

// Trial count per class name; all five classes are present, possibly with 0.
std::map<std::string, std::size_t> class_counts(const std::vector<StimulusTrial>& trials);
std::string class_count_report(const std::vector<StimulusTrial>& trials);

struct GenerationOptions {
  std::size_t max_samples = 400'000;
  std::size_t max_depth = 60;
};

// Samples sentences from the design grammar and keeps those containing a
// homophonous phrase: a function-word homograph followed by a content-word
// homograph, both under one noun or verb phrase (a category whose name
// starts with NP or VP). The phrase type comes from that category, and the
// sentence must have a single parse. The condition follows from the
// prefix: Strong_PRED when only one reading of the first HP word is
// possible given the words before it, Weak_PRED when both are possible but
// only one reading of the second word survives, UNPRED otherwise. UNPRED
// trials come in NP/VP pairs whose words agree up to the end of the HP.
std::vector<StimulusTrial> generate_toy_stimuli(const Pcfg& design, std::size_t per_class,
                                                std::uint64_t seed,
                                                const GenerationOptions& options = {});

// ---------------------------------------------------------------------------
// Surprisal table

enum class Notion { ngram, lexical, pos, syntactic };

inline constexpr std::array<Notion, 4> kNotions{Notion::ngram, Notion::lexical, Notion::pos,
                                                Notion::syntactic};

std::string to_string(Notion n);       // "ngram", "lexical", "pos", "syntactic"
std::string column_prefix(Notion n);   // "ngram", "lex", "pos", "syn"

struct SurprisalRow {
  std::string trial_id;
  Condition condition = Condition::unpred;
  PhraseType phrase_type = PhraseType::np;
  // ngram_w1, ngram_w2, lex_w1, lex_w2, pos_w1, pos_w2, syn_w1, syn_w2
  std::array<double, 8> values{};

  double value(Notion n, std::size_t position) const {
    return values[2 * static_cast<std::size_t>(n) + position];
  }
  std::string class_name() const { return surp::class_name(condition, phrase_type); }
  bool operator==(const SurprisalRow&) const = default;
};

using SurprisalTable = std::vector<SurprisalRow>;

struct ScoringModels {
  const NGramModel& word;
  const NGramModel& pos;
  const PrefixParser& parser;
  LogBase base;
};

// Errors carry the trial id. Trials need tags for POS surprisal.
SurprisalTable score_stimuli(const std::vector<StimulusTrial>& trials,
                             const ScoringModels& models);

void write_surprisal_table(std::ostream& out, const SurprisalTable& table);
SurprisalTable parse_surprisal_table(std::string_view text,
                                     const std::string& source = "<string>");
SurprisalTable read_surprisal_table(const std::filesystem::path& path);
// One row per trial, notion and position:
// `trial_id,class,condition,phrase_type,notion,position,surprisal`.
void write_long_format(std::ostream& out, const SurprisalTable& table);

}  // namespace surp
