#include "surp/corpus.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "surp/error.hpp"

namespace surp {

std::vector<std::string> TaggedSentence::forms() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.form);
  return out;
}

std::vector<std::string> TaggedSentence::tags() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.tag);
  return out;
}

namespace {

void collect_yield(const Tree& t, std::vector<std::string>& out) {
  if (t.is_leaf()) {
    out.push_back(t.label);
    return;
  }
  for (const auto& c : t.children) collect_yield(c, out);
}

// A leaf is tagged with its parent's label, also when it sits next to
// other children (terminals inside longer rules).
void collect_tagged(const Tree& t, TaggedSentence& out) {
  for (const auto& c : t.children) {
    if (c.is_leaf()) out.tokens.push_back({c.label, t.label});
    else collect_tagged(c, out);
  }
}

void write_bracketed(const Tree& t, std::string& out) {
  if (t.is_leaf()) {
    out += t.label;
    return;
  }
  out += '(';
  out += t.label;
  for (const auto& c : t.children) {
    out += ' ';
    write_bracketed(c, out);
  }
  out += ')';
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

}  // namespace

std::vector<std::string> Tree::yield() const {
  std::vector<std::string> out;
  collect_yield(*this, out);
  return out;
}

std::vector<std::string> Tree::preterminals() const { return tagged().tags(); }

std::size_t Tree::depth() const {
  std::size_t d = 0;
  for (const auto& c : children) d = std::max(d, c.depth());
  return is_leaf() ? 0 : d + 1;
}

TaggedSentence Tree::tagged() const {
  TaggedSentence s;
  collect_tagged(*this, s);
  return s;
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<TaggedSentence> parse_tagged_corpus(std::string_view text, const std::string& source) {
  std::vector<TaggedSentence> corpus;
  TaggedSentence current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (!current.tokens.empty()) corpus.push_back(std::move(current));
      current = {};
    } else {
      auto tab = line.find('\t');
      if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos)
        throw ParseError(source, line_no, "expected exactly two tab-separated columns (token<TAB>tag)");
      std::string_view form = line.substr(0, tab);
      std::string_view tag = line.substr(tab + 1);
      if (form.empty() || tag.empty())
        throw ParseError(source, line_no, "empty token or tag");
      if (split_ws(form).size() != 1 || split_ws(tag).size() != 1)
        throw ParseError(source, line_no, "token and tag must not contain whitespace");
      current.tokens.push_back({std::string(form), std::string(tag)});
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  if (!current.tokens.empty()) corpus.push_back(std::move(current));
  if (corpus.empty()) throw ParseError(source, 0, "corpus contains no sentences");
  return corpus;
}

std::vector<TaggedSentence> read_tagged_corpus(const std::filesystem::path& path) {
  return parse_tagged_corpus(read_file(path), path.string());
}

void write_tagged_corpus(std::ostream& out, const std::vector<TaggedSentence>& corpus) {
  for (const auto& s : corpus) {
    for (const auto& t : s.tokens) out << t.form << '\t' << t.tag << '\n';
    out << '\n';
  }
}

namespace {

class TreeReader {
 public:
  TreeReader(std::string_view text, const std::string& source, std::size_t line)
      : text_(text), source_(source), line_(line) {}

  Tree read() {
    skip_space();
    Tree t = read_node();
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters after tree");
    return t;
  }

 private:
  Tree read_node() {
    if (pos_ >= text_.size() || text_[pos_] != '(') fail("expected '('");
    ++pos_;
    skip_space();
    Tree node;
    node.label = read_atom();
    if (node.label.empty()) fail("empty label");
    skip_space();
    while (pos_ < text_.size() && text_[pos_] != ')') {
      if (text_[pos_] == '(') {
        node.children.push_back(read_node());
      } else {
        std::string form = read_atom();
        if (form.empty()) fail("unexpected character");
        node.children.push_back(Tree{std::move(form), {}});
      }
      skip_space();
    }
    if (pos_ >= text_.size()) fail("unbalanced parentheses: missing ')'");
    ++pos_;
    if (node.children.empty()) fail("node '" + node.label + "' has no children");
    bool has_leaf = false;
    for (const auto& c : node.children) has_leaf |= c.is_leaf();
    if (has_leaf && node.children.size() != 1)
      fail("node '" + node.label + "' mixes a surface form with other children");
    return node;
  }

  std::string read_atom() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '(' && text_[pos_] != ')')
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_, line_, what + " (at column " + std::to_string(pos_ + 1) + ")");
  }

  std::string_view text_;
  const std::string& source_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

Tree parse_tree(std::string_view text, const std::string& source, std::size_t line) {
  return TreeReader(text, source, line).read();
}

Treebank parse_treebank(std::string_view text, const std::string& source) {
  Treebank tb;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos)
      tb.push_back(parse_tree(line, source, line_no));
    pos = end + 1;
  }
  if (tb.empty()) throw ParseError(source, 0, "treebank contains no trees");
  return tb;
}

Treebank read_treebank(const std::filesystem::path& path) {
  return parse_treebank(read_file(path), path.string());
}

std::string to_bracketed(const Tree& tree) {
  std::string out;
  write_bracketed(tree, out);
  return out;
}

std::string Vocabulary::map(std::string_view form) const {
  return is_known(form) ? std::string(form) : std::string(kUnk);
}

TaggedSentence Vocabulary::map(const TaggedSentence& sentence) const {
  TaggedSentence out = sentence;
  for (auto& t : out.tokens) t.form = map(t.form);
  return out;
}

Vocabulary build_vocab(const std::vector<TaggedSentence>& corpus, std::size_t unk_threshold) {
  if (corpus.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  if (unk_threshold < 1) throw Error("unk threshold must be >= 1");
  std::map<std::string, std::size_t> counts;
  Vocabulary v;
  v.threshold_ = unk_threshold;
  for (const auto& s : corpus)
    for (const auto& t : s.tokens) {
      ++counts[t.form];
      v.tags_.insert(t.tag);
    }
  for (const auto& [form, n] : counts)
    if (n >= unk_threshold && form != kUnk) v.known_.insert(form);
  return v;
}

Vocabulary make_vocabulary(std::set<std::string> known, std::set<std::string> tags,
                           std::size_t unk_threshold) {
  Vocabulary v;
  known.erase(std::string(kUnk));
  v.known_ = std::move(known);
  v.tags_ = std::move(tags);
  v.threshold_ = unk_threshold;
  return v;
}

}  // namespace surp
