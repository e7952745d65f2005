#include "surp/stimuli.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "surp/error.hpp"

namespace surp {

std::string to_string(Condition c) {
  switch (c) {
    case Condition::unpred: return "UNPRED";
    case Condition::strong_pred: return "Strong_PRED";
    case Condition::weak_pred: return "Weak_PRED";
  }
  return "?";
}

std::string to_string(PhraseType p) { return p == PhraseType::np ? "NP" : "VP"; }

Condition condition_from_string(std::string_view text) {
  if (text == "UNPRED") return Condition::unpred;
  if (text == "Strong_PRED") return Condition::strong_pred;
  if (text == "Weak_PRED") return Condition::weak_pred;
  throw Error(fmt::format("unknown condition '{}' (expected UNPRED, Strong_PRED or Weak_PRED)", text));
}

PhraseType phrase_type_from_string(std::string_view text) {
  if (text == "NP") return PhraseType::np;
  if (text == "VP") return PhraseType::vp;
  throw Error(fmt::format("unknown phrase type '{}' (expected NP or VP)", text));
}

std::string class_name(Condition c, PhraseType p) { return to_string(c) + "-" + to_string(p); }

bool StimulusTrial::has_tags() const {
  return !sentence.tokens.empty() &&
         std::all_of(sentence.tokens.begin(), sentence.tokens.end(),
                     [](const TaggedToken& t) { return !t.tag.empty(); });
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = end + 1;
  }
  return out;
}

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t") == std::string_view::npos;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

TaggedToken parse_token(const std::string& raw) {
  const auto slash = raw.rfind('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == raw.size()) return {raw, ""};
  return {raw.substr(0, slash), raw.substr(slash + 1)};
}

std::string format_value(double v) { return fmt::format("{}", v); }

}  // namespace

std::vector<StimulusTrial> parse_stimuli(std::string_view text, const std::string& source) {
  const auto lines = lines_of(text);
  std::size_t ln = 0;
  while (ln < lines.size() && blank(lines[ln])) ++ln;
  if (ln == lines.size()) throw ParseError(source, 0, "stimulus file is empty");
  {
    auto header = split_csv_line(lines[ln]);
    for (auto& h : header) h = trim(h);
    const std::vector<std::string> expected{"id", "condition", "phrase_type", "tokens", "hp_start"};
    if (header != expected)
      throw ParseError(source, ln + 1, "expected header id,condition,phrase_type,tokens,hp_start");
  }
  std::vector<StimulusTrial> trials;
  std::set<std::string> ids;
  for (++ln; ln < lines.size(); ++ln) {
    if (blank(lines[ln])) continue;
    const auto fields = split_csv_line(lines[ln]);
    if (fields.size() != 5)
      throw ParseError(source, ln + 1, fmt::format("expected 5 fields, found {}", fields.size()));
    StimulusTrial t;
    t.id = trim(fields[0]);
    if (t.id.empty()) throw ParseError(source, ln + 1, "empty trial id");
    if (!ids.insert(t.id).second)
      throw ParseError(source, ln + 1, fmt::format("duplicate trial id '{}'", t.id));
    try {
      t.condition = condition_from_string(trim(fields[1]));
      t.phrase_type = phrase_type_from_string(trim(fields[2]));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, ln + 1, e.what());
    }
    if (t.condition == Condition::weak_pred && t.phrase_type == PhraseType::vp)
      throw ParseError(source, ln + 1,
                       fmt::format("trial '{}': Weak_PRED-VP is not a possible class; a context "
                                   "that is resolved only at the second word can only resolve to "
                                   "a noun phrase",
                                   t.id));
    for (const auto& tok : split_ws(fields[3])) t.sentence.tokens.push_back(parse_token(tok));
    const std::string hp = trim(fields[4]);
    std::size_t consumed = 0;
    long long value = -1;
    try {
      value = std::stoll(hp, &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (hp.empty() || consumed != hp.size() || value < 0)
      throw ParseError(source, ln + 1, fmt::format("hp_start '{}' is not a non-negative integer", hp));
    t.hp_start = static_cast<std::size_t>(value);
    if (t.hp_start + 1 >= t.sentence.size())
      throw ParseError(source, ln + 1,
                       fmt::format("trial '{}': hp_start {} leaves no second HP word in a {}-token "
                                   "sentence",
                                   t.id, t.hp_start, t.sentence.size()));
    trials.push_back(std::move(t));
  }
  return trials;
}

std::vector<StimulusTrial> load_stimuli(const std::filesystem::path& path) {
  return parse_stimuli(read_file(path), path.string());
}

void write_stimuli(std::ostream& out, const std::vector<StimulusTrial>& trials) {
  out << "id,condition,phrase_type,tokens,hp_start\n";
  for (const auto& t : trials) {
    std::string tokens;
    for (const auto& tok : t.sentence.tokens) {
      if (!tokens.empty()) tokens += ' ';
      tokens += tok.form;
      if (!tok.tag.empty()) tokens += "/" + tok.tag;
    }
    out << t.id << ',' << to_string(t.condition) << ',' << to_string(t.phrase_type) << ','
        << tokens << ',' << t.hp_start << '\n';
  }
}

std::map<std::string, std::size_t> class_counts(const std::vector<StimulusTrial>& trials) {
  std::map<std::string, std::size_t> counts;
  for (const auto& [c, p] : kStimulusClasses) counts[class_name(c, p)] = 0;
  for (const auto& t : trials) ++counts[t.class_name()];
  return counts;
}

std::string class_count_report(const std::vector<StimulusTrial>& trials) {
  const auto counts = class_counts(trials);
  std::string out = fmt::format("{} trials:", trials.size());
  for (const auto& [c, p] : kStimulusClasses)
    out += fmt::format(" {}={}", class_name(c, p), counts.at(class_name(c, p)));
  return out;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

bool phrase_category(std::string_view label, PhraseType& type) {
  const std::string base = base_category(label);
  if (base.rfind("NP", 0) == 0) {
    type = PhraseType::np;
    return true;
  }
  if (base.rfind("VP", 0) == 0) {
    type = PhraseType::vp;
    return true;
  }
  return false;
}

struct HomographInventory {
  std::map<std::string, std::set<std::string>> emitters;  // terminal -> preterminals
  std::set<std::string> function_words;
  std::set<std::string> content_words;
};

HomographInventory find_homographs(const Pcfg& g) {
  HomographInventory inv;
  std::set<Symbol> preterminals;
  for (const auto& r : g.rules()) {
    if (r.rhs.size() == 1 && !g.is_nonterminal(r.rhs[0]) && r.prob > 0.0) {
      inv.emitters[g.name(r.rhs[0])].insert(g.name(r.lhs));
      preterminals.insert(r.lhs);
    }
  }
  // First and second members of adjacent preterminal pairs inside NP*/VP* rules.
  std::set<std::string> left[2];
  std::set<std::string> right[2];
  for (const auto& r : g.rules()) {
    PhraseType type;
    if (!phrase_category(g.name(r.lhs), type)) continue;
    for (std::size_t j = 0; j + 1 < r.rhs.size(); ++j) {
      if (preterminals.count(r.rhs[j]) && preterminals.count(r.rhs[j + 1])) {
        left[static_cast<int>(type)].insert(g.name(r.rhs[j]));
        right[static_cast<int>(type)].insert(g.name(r.rhs[j + 1]));
      }
    }
  }
  auto meets = [](const std::set<std::string>& emit, const std::set<std::string>& cats) {
    return std::any_of(emit.begin(), emit.end(), [&](const auto& c) { return cats.count(c) > 0; });
  };
  for (const auto& [word, emit] : inv.emitters) {
    if (emit.size() < 2) continue;
    if (meets(emit, left[0]) && meets(emit, left[1])) inv.function_words.insert(word);
    if (meets(emit, right[0]) && meets(emit, right[1])) inv.content_words.insert(word);
  }
  return inv;
}

// Root-to-leaf node paths for every leaf, left to right.
void leaf_paths(const Tree& t, std::vector<const Tree*>& stack,
                std::vector<std::vector<const Tree*>>& out) {
  stack.push_back(&t);
  if (t.is_leaf()) {
    out.push_back(stack);
  } else {
    for (const auto& c : t.children) leaf_paths(c, stack, out);
  }
  stack.pop_back();
}

const Tree* lowest_common_ancestor(const std::vector<const Tree*>& a,
                                   const std::vector<const Tree*>& b) {
  const Tree* lca = nullptr;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()) && a[i] == b[i]; ++i) lca = a[i];
  return lca;
}

std::vector<std::string> readings(const std::set<std::string>& emitters,
                                  const std::map<std::string, double>& mass) {
  std::vector<std::string> out;
  for (const auto& c : emitters) {
    auto it = mass.find(c);
    if (it != mass.end() && it->second > 1e-15) out.push_back(c);
  }
  return out;
}

std::string join(const std::vector<std::string>& v, std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < count && i < v.size(); ++i) {
    if (i) out += ' ';
    out += v[i];
  }
  return out;
}

}  // namespace

std::vector<StimulusTrial> generate_toy_stimuli(const Pcfg& design, std::size_t per_class,
                                                std::uint64_t seed,
                                                const GenerationOptions& options) {
  const HomographInventory inv = find_homographs(design);
  if (inv.function_words.empty())
    throw Error(
        "the design grammar has no function-word homograph: no word is emitted both by the first "
        "preterminal of a noun phrase and by the first preterminal of a verb phrase (an "
        "article/clitic pair like la/la)");
  if (inv.content_words.empty())
    throw Error(
        "the design grammar has no content-word homograph: no word is emitted both by a noun "
        "after the function word of a noun phrase and by a verb after the function word of a "
        "verb phrase (a noun/verb pair like porta/porta)");

  const PrefixParser parser(design);
  std::mt19937_64 rng(seed);
  std::map<std::string, std::vector<StimulusTrial>> done;
  for (const auto& [c, p] : kStimulusClasses) done[class_name(c, p)];
  // UNPRED trials waiting for a partner with the same words up to the HP end.
  std::map<std::string, std::pair<std::deque<StimulusTrial>, std::deque<StimulusTrial>>> pending;
  std::set<std::string> seen;

  auto full = [&](const std::string& cls) { return done[cls].size() >= per_class; };
  auto complete = [&] {
    return std::all_of(done.begin(), done.end(),
                       [&](const auto& kv) { return kv.second.size() >= per_class; });
  };

  std::size_t samples = 0;
  while (!complete()) {
    if (samples++ >= options.max_samples) {
      std::string status;
      for (const auto& [cls, v] : done) status += fmt::format(" {}={}", cls, v.size());
      throw Error(fmt::format(
          "could not fill every stimulus class after {} sampled sentences (have:{}); the "
          "design grammar rarely produces some condition",
          options.max_samples, status));
    }
    const Tree tree = sample_tree(design, rng, options.max_depth);
    const TaggedSentence sentence = tree.tagged();
    const auto forms = sentence.forms();

    std::vector<std::vector<const Tree*>> paths;
    std::vector<const Tree*> stack;
    leaf_paths(tree, stack, paths);
    std::size_t k = forms.size();
    PhraseType type = PhraseType::np;
    for (std::size_t i = 0; i + 1 < forms.size(); ++i) {
      if (!inv.function_words.count(forms[i]) || !inv.content_words.count(forms[i + 1])) continue;
      const Tree* lca = lowest_common_ancestor(paths[i], paths[i + 1]);
      if (lca && phrase_category(lca->label, type)) {
        k = i;
        break;
      }
    }
    if (k == forms.size()) continue;
    const std::string text = join(forms, forms.size());
    if (seen.count(text)) continue;

    const auto prefix = parser.parse(std::span(forms).first(k));
    const auto first = readings(inv.emitters.at(forms[k]), prefix.next_category_mass);
    Condition cond = Condition::unpred;
    if (first.size() == 1) {
      cond = Condition::strong_pred;
    } else {
      const auto through = parser.parse(std::span(forms).first(k + 1));
      const auto second = readings(inv.emitters.at(forms[k + 1]), through.next_category_mass);
      if (second.size() == 1) cond = Condition::weak_pred;
    }
    if (cond == Condition::weak_pred && type == PhraseType::vp) continue;
    const std::string cls = class_name(cond, type);
    if (full(cls)) continue;

    // Keep only sentences with a single analysis.
    const auto whole = parser.parse(forms);
    const double tree_p = design.tree_probability(tree);
    if (!(tree_p > 0.0) || std::abs(std::log(tree_p) - whole.log_sentence) > 1e-9) continue;

    seen.insert(text);
    StimulusTrial trial;
    trial.condition = cond;
    trial.phrase_type = type;
    trial.sentence = sentence;
    trial.hp_start = k;
    if (cond != Condition::unpred) {
      done[cls].push_back(std::move(trial));
      continue;
    }
    auto& [nps, vps] = pending[join(forms, k + 2)];
    (type == PhraseType::np ? nps : vps).push_back(std::move(trial));
    if (!nps.empty() && !vps.empty()) {
      done[class_name(Condition::unpred, PhraseType::np)].push_back(std::move(nps.front()));
      done[class_name(Condition::unpred, PhraseType::vp)].push_back(std::move(vps.front()));
      nps.pop_front();
      vps.pop_front();
    }
  }

  std::vector<StimulusTrial> out;
  for (const auto& [c, p] : kStimulusClasses) {
    auto& list = done[class_name(c, p)];
    for (std::size_t i = 0; i < per_class; ++i) {
      list[i].id = fmt::format("{}-{:02}", class_name(c, p), i + 1);
      out.push_back(std::move(list[i]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scoring

std::string to_string(Notion n) {
  switch (n) {
    case Notion::ngram: return "ngram";
    case Notion::lexical: return "lexical";
    case Notion::pos: return "pos";
    case Notion::syntactic: return "syntactic";
  }
  return "?";
}

std::string column_prefix(Notion n) {
  switch (n) {
    case Notion::ngram: return "ngram";
    case Notion::lexical: return "lex";
    case Notion::pos: return "pos";
    case Notion::syntactic: return "syn";
  }
  return "?";
}

SurprisalTable score_stimuli(const std::vector<StimulusTrial>& trials,
                             const ScoringModels& models) {
  if (models.word.mode() != UnitMode::word) throw Error("the word model must be a word n-gram");
  if (models.pos.mode() != UnitMode::pos) throw Error("the POS model must be a tag n-gram");
  SurprisalTable table;
  for (const auto& t : trials) {
    if (t.hp_start + 1 >= t.sentence.size())
      throw Error(fmt::format("trial '{}': HP window out of range", t.id));
    if (!t.has_tags())
      throw Error(fmt::format("trial '{}': POS surprisal needs a tag on every token (form/TAG)",
                              t.id));
    SurprisalRow row;
    row.trial_id = t.id;
    row.condition = t.condition;
    row.phrase_type = t.phrase_type;
    try {
      const auto forms = t.forms();
      const auto ngram = models.word.surprisal(t.sentence, models.base);
      const auto pos = models.pos.surprisal(t.sentence, models.base);
      const auto split = models.parser.split_surprisal(forms, models.base);
      for (std::size_t k = 0; k < 2; ++k) {
        const std::size_t i = t.hp_start + k;
        row.values[0 + k] = ngram[i];
        row.values[2 + k] = split.lexical[i];
        row.values[4 + k] = pos[i];
        row.values[6 + k] = split.syntactic[i];
      }
    } catch (const Error& e) {
      throw Error(fmt::format("trial '{}': {}", t.id, e.what()));
    }
    for (std::size_t v = 0; v < row.values.size(); ++v) {
      double& x = row.values[v];
      if (x < 0.0 && x > -1e-9) x = 0.0;  // rounding around certainty
      if (!std::isfinite(x) || x < 0.0)
        throw Error(fmt::format("trial '{}': surprisal at HP word {} is {}", t.id, v % 2 + 1, x));
    }
    table.push_back(row);
  }
  return table;
}

void write_surprisal_table(std::ostream& out, const SurprisalTable& table) {
  out << "trial_id,condition,phrase_type";
  for (Notion n : kNotions) out << ',' << column_prefix(n) << "_w1," << column_prefix(n) << "_w2";
  out << '\n';
  for (const auto& r : table) {
    out << r.trial_id << ',' << to_string(r.condition) << ',' << to_string(r.phrase_type);
    for (double v : r.values) out << ',' << format_value(v);
    out << '\n';
  }
}

SurprisalTable parse_surprisal_table(std::string_view text, const std::string& source) {
  const auto lines = lines_of(text);
  std::size_t ln = 0;
  while (ln < lines.size() && blank(lines[ln])) ++ln;
  if (ln == lines.size()) throw ParseError(source, 0, "surprisal table is empty");
  std::ostringstream expected;
  write_surprisal_table(expected, {});
  if (std::string(lines[ln]) + "\n" != expected.str())
    throw ParseError(source, ln + 1, "unexpected surprisal table header");
  SurprisalTable table;
  for (++ln; ln < lines.size(); ++ln) {
    if (blank(lines[ln])) continue;
    const auto f = split_csv_line(lines[ln]);
    if (f.size() != 11)
      throw ParseError(source, ln + 1, fmt::format("expected 11 fields, found {}", f.size()));
    SurprisalRow r;
    r.trial_id = f[0];
    try {
      r.condition = condition_from_string(f[1]);
      r.phrase_type = phrase_type_from_string(f[2]);
      for (std::size_t v = 0; v < 8; ++v) {
        std::size_t used = 0;
        r.values[v] = std::stod(f[3 + v], &used);
        if (used != f[3 + v].size()) throw Error("bad number '" + f[3 + v] + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(source, ln + 1, e.what());
    }
    table.push_back(r);
  }
  return table;
}

SurprisalTable read_surprisal_table(const std::filesystem::path& path) {
  return parse_surprisal_table(read_file(path), path.string());
}

void write_long_format(std::ostream& out, const SurprisalTable& table) {
  out << "trial_id,class,condition,phrase_type,notion,position,surprisal\n";
  for (const auto& r : table)
    for (Notion n : kNotions)
      for (std::size_t k = 0; k < 2; ++k)
        out << r.trial_id << ',' << r.class_name() << ',' << to_string(r.condition) << ','
            << to_string(r.phrase_type) << ',' << to_string(n) << ",w" << k + 1 << ','
            << format_value(r.value(n, k)) << '\n';
}

}  // namespace surp
