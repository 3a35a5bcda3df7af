#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ssa {

using VarId = std::string;

struct Node {
  VarId variable;
  std::string concept_label;

  bool operator==(const Node&) const = default;
};

// Edges are stored in forward form. `inverted_in_surface` remembers that the
// edge was written as `:role-of` and is only a serialization hint.
struct Edge {
  VarId source;
  std::string role;
  VarId target;
  bool inverted_in_surface = false;
};

struct Attribute {
  VarId variable;
  std::string role;
  std::string value;  // quoted strings keep their quotes

  bool operator==(const Attribute&) const = default;
};

class AmrGraph {
 public:
  AmrGraph() = default;

  // Validates every invariant; throws DanglingVariable or SyntaxError.
  AmrGraph(VarId root, std::map<VarId, Node> nodes, std::vector<Edge> edges,
           std::vector<Attribute> attributes);

  const VarId& root() const { return root_; }
  const std::map<VarId, Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Attribute>& attributes() const { return attributes_; }

  bool has_node(const VarId& v) const { return nodes_.contains(v); }
  const std::string& concept_of(const VarId& v) const;

  std::vector<const Edge*> outgoing(const VarId& v) const;
  std::vector<const Edge*> incoming(const VarId& v) const;

  // Structural equality: same root, nodes, and edge/attribute sets. The
  // surface-direction hint on edges is ignored.
  bool same_as(const AmrGraph& other) const;

 private:
  VarId root_;
  std::map<VarId, Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<Attribute> attributes_;
};

enum class TripleKind { Instance, Relation, Attribute, RootMarker };

struct Triple {
  TripleKind kind;
  std::string head;
  std::string label;
  std::string tail;

  auto operator<=>(const Triple&) const = default;
};

inline constexpr std::string_view kRootMarkerLabel = "TOP";
inline constexpr std::string_view kRootMarkerTail = "top";

// One PENMAN block with the comment lines that preceded it.
struct PenmanBlock {
  std::vector<std::string> comments;
  std::string text;
};

AmrGraph parse_penman(std::string_view text);
std::string serialize_penman(const AmrGraph& graph);
std::vector<Triple> to_triples(const AmrGraph& graph);

// Splits a file body into blank-line separated blocks; `#` lines are kept as
// comments of the block they precede.
std::vector<PenmanBlock> split_penman_blocks(std::string_view body);

// Node-to-token alignments carried by comment lines, either
//   # ::node <var> <concept> <start>-<end>
//   # ::alignments <start>-<end>|<var>[+<var>...] ...
// Returns (variable, [start, end)) triples.
struct CommentAlignment {
  VarId variable;
  int start = 0;
  int end = 0;
};
std::vector<CommentAlignment> alignments_from_comments(
    const std::vector<std::string>& comments);

// Renames variables to z0, z1, ... in serialization (depth-first) order.
// `renaming`, when given, receives old -> new.
AmrGraph reletter(const AmrGraph& graph,
                  std::map<VarId, VarId>* renaming = nullptr);

// Concept label matches `name-DD`.
bool has_sense_suffix(std::string_view label);
// "sit-01" -> "sit"; labels without a sense suffix are returned as-is.
std::string strip_sense(std::string_view label);
// :ARG0 .. :ARG5
bool is_core_argument_role(std::string_view role);

}  // namespace ssa
