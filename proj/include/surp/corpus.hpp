#pragma once

// Tagged corpora, bracketed treebanks and vocabularies.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace surp {

inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";

struct TaggedToken {
  std::string form;
  std::string tag;

  bool operator==(const TaggedToken&) const = default;
};

// Sentence as read from the corpus. Boundary markers are never stored here;
// the n-gram models add them when counting or scoring.
struct TaggedSentence {
  std::vector<TaggedToken> tokens;

  std::vector<std::string> forms() const;
  std::vector<std::string> tags() const;
  std::size_t size() const { return tokens.size(); }

  bool operator==(const TaggedSentence&) const = default;
};

// Constituency tree. A node without children is a leaf (a surface form);
// a node whose only child is a leaf is a preterminal.
struct Tree {
  std::string label;
  std::vector<Tree> children;

  bool is_leaf() const { return children.empty(); }
  bool is_preterminal() const { return children.size() == 1 && children.front().is_leaf(); }

  std::vector<std::string> yield() const;
  // Label of the node directly above each leaf, in yield order.
  std::vector<std::string> preterminals() const;
  // Rule applications on the longest root-to-leaf path; 0 for a leaf.
  std::size_t depth() const;
  TaggedSentence tagged() const;

  bool operator==(const Tree&) const = default;
};

using Treebank = std::vector<Tree>;

std::vector<TaggedSentence> parse_tagged_corpus(std::string_view text,
                                                const std::string& source = "<string>");
std::vector<TaggedSentence> read_tagged_corpus(const std::filesystem::path& path);
void write_tagged_corpus(std::ostream& out, const std::vector<TaggedSentence>& corpus);

// Parses one bracketed tree, e.g. "(S (NP (Det the) (N book)) (VP (V reads)))".
Tree parse_tree(std::string_view text, const std::string& source = "<string>",
                std::size_t line = 0);
Treebank parse_treebank(std::string_view text, const std::string& source = "<string>");
Treebank read_treebank(const std::filesystem::path& path);
std::string to_bracketed(const Tree& tree);

class Vocabulary {
 public:
  Vocabulary() = default;

  const std::set<std::string>& known_forms() const { return known_; }
  const std::set<std::string>& tags() const { return tags_; }
  std::size_t unk_threshold() const { return threshold_; }

  bool is_known(std::string_view form) const { return known_.count(std::string(form)) > 0; }
  // Known forms map to themselves, anything else to <unk>.
  std::string map(std::string_view form) const;
  TaggedSentence map(const TaggedSentence& sentence) const;

 private:
  friend Vocabulary build_vocab(const std::vector<TaggedSentence>&, std::size_t);
  friend Vocabulary make_vocabulary(std::set<std::string>, std::set<std::string>, std::size_t);

  std::set<std::string> known_;
  std::set<std::string> tags_;
  std::size_t threshold_ = 1;
};

// Forms seen fewer than unk_threshold times are excluded from the known set.
Vocabulary build_vocab(const std::vector<TaggedSentence>& corpus, std::size_t unk_threshold = 2);
Vocabulary make_vocabulary(std::set<std::string> known, std::set<std::string> tags,
                           std::size_t unk_threshold);

std::string read_file(const std::filesystem::path& path);

// Splits on runs of ASCII whitespace.
std::vector<std::string> split_ws(std::string_view text);

}  // namespace surp
