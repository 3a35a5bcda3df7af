#include "ssa/amr.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <optional>
#include <queue>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

#include "ssa/error.hpp"

namespace ssa {

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

// Symbols shaped like AMR variables (b, b2, z13, ii4). Anything else that is
// not instantiated is read as a constant.
bool looks_like_variable(std::string_view sym) {
  static const std::regex pattern("^([a-z][0-9]*|[a-z]{1,3}[0-9]+)$");
  return std::regex_match(sym.begin(), sym.end(), pattern);
}

enum class TokenKind { LParen, RParen, Slash, Role, String, Symbol, End };

struct Token {
  TokenKind kind;
  std::string text;
  size_t offset;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space();
    if (pos_ >= text_.size()) return {TokenKind::End, "", pos_};
    const size_t start = pos_;
    const char c = text_[pos_];
    if (c == '(') return ++pos_, Token{TokenKind::LParen, "(", start};
    if (c == ')') return ++pos_, Token{TokenKind::RParen, ")", start};
    if (c == '/') return ++pos_, Token{TokenKind::Slash, "/", start};
    if (c == '"') return string_literal();
    if (c == ':') {
      ++pos_;
      while (pos_ < text_.size() && !is_delim(text_[pos_]) && text_[pos_] != '/')
        ++pos_;
      if (pos_ == start + 1) throw SyntaxError(at(start, "empty role"));
      return {TokenKind::Role, std::string(text_.substr(start, pos_ - start)),
              start};
    }
    while (pos_ < text_.size() && !is_delim(text_[pos_]) && text_[pos_] != '/')
      ++pos_;
    return {TokenKind::Symbol, std::string(text_.substr(start, pos_ - start)),
            start};
  }

  Token peek() {
    const size_t saved = pos_;
    Token t = next();
    pos_ = saved;
    return t;
  }

  std::string at(size_t offset, const std::string& msg) const {
    return msg + " at offset " + std::to_string(offset);
  }

 private:
  static bool is_delim(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' ||
           c == '"';
  }

  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  Token string_literal() {
    const size_t start = pos_++;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') ++pos_;
      ++pos_;
    }
    if (pos_ >= text_.size()) throw SyntaxError(at(start, "unterminated string"));
    ++pos_;
    return {TokenKind::String, std::string(text_.substr(start, pos_ - start)),
            start};
  }

  std::string_view text_;
  size_t pos_ = 0;
};

struct PendingTarget {
  VarId source;
  std::string role;
  std::string symbol;
};

class PenmanParser {
 public:
  explicit PenmanParser(std::string_view text) : lex_(text) {}

  AmrGraph parse() {
    if (lex_.peek().kind != TokenKind::LParen)
      throw SyntaxError("graph must start with '('");
    VarId root = parse_node();
    Token trailing = lex_.next();
    if (trailing.kind != TokenKind::End)
      throw SyntaxError(lex_.at(trailing.offset, "trailing input '" + trailing.text + "'"));

    for (const auto& p : pending_) {
      if (nodes_.contains(p.symbol)) {
        add_edge(p.source, p.role, p.symbol);
      } else if (looks_like_variable(p.symbol)) {
        throw DanglingVariable("variable '" + p.symbol +
                               "' is referenced but never instantiated");
      } else {
        attributes_.push_back({p.source, p.role, p.symbol});
      }
    }
    return AmrGraph(std::move(root), std::move(nodes_), std::move(edges_),
                    std::move(attributes_));
  }

 private:
  VarId parse_node() {
    Token open = lex_.next();
    if (open.kind != TokenKind::LParen)
      throw SyntaxError(lex_.at(open.offset, "expected '('"));
    Token var = lex_.next();
    if (var.kind != TokenKind::Symbol)
      throw SyntaxError(lex_.at(var.offset, "expected variable"));
    Token slash = lex_.next();
    if (slash.kind != TokenKind::Slash)
      throw SyntaxError(lex_.at(slash.offset, "missing '/' after variable '" +
                                                  var.text + "'"));
    Token concept_tok = lex_.next();
    if (concept_tok.kind != TokenKind::Symbol && concept_tok.kind != TokenKind::String)
      throw SyntaxError(lex_.at(concept_tok.offset, "expected concept"));
    if (nodes_.contains(var.text))
      throw DuplicateInstance("variable '" + var.text + "' has two concepts");
    nodes_.emplace(var.text, Node{var.text, concept_tok.text});

    for (;;) {
      Token t = lex_.next();
      if (t.kind == TokenKind::RParen) break;
      if (t.kind != TokenKind::Role)
        throw SyntaxError(lex_.at(t.offset, t.kind == TokenKind::End
                                                ? "unbalanced parentheses"
                                                : "expected role or ')'"));
      Token target = lex_.peek();
      switch (target.kind) {
        case TokenKind::LParen: {
          VarId child = parse_node();
          add_edge(var.text, t.text, child);
          break;
        }
        case TokenKind::String:
          lex_.next();
          attributes_.push_back({var.text, t.text, target.text});
          break;
        case TokenKind::Symbol:
          lex_.next();
          pending_.push_back({var.text, t.text, target.text});
          break;
        default:
          throw SyntaxError(lex_.at(target.offset, "missing target for role " + t.text));
      }
    }
    return var.text;
  }

  void add_edge(const VarId& source, const std::string& role, const VarId& target) {
    Edge e;
    if (ends_with(role, "-of") && role.size() > 4) {
      e = {target, role.substr(0, role.size() - 3), source, true};
    } else {
      e = {source, role, target, false};
    }
    const auto key = std::tie(e.source, e.role, e.target);
    for (const auto& existing : edges_) {
      if (std::tie(existing.source, existing.role, existing.target) == key) return;
    }
    edges_.push_back(std::move(e));
  }

  Lexer lex_;
  std::map<VarId, Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<Attribute> attributes_;
  std::vector<PendingTarget> pending_;
};

// Entry emitted inside a constituent.
struct Slot {
  enum Kind { Child, Ref, Constant };
  std::string role;
  Kind kind;
  std::string target;
};

// Decides, for every edge, at which endpoint it is written and whether the
// other endpoint is expanded there or only referenced.
class SerializationPlan {
 public:
  explicit SerializationPlan(const AmrGraph& g) : g_(g) {
    const auto& edges = g.edges();
    for (size_t i = 0; i < edges.size(); ++i) {
      const Edge& e = edges[i];
      host_[e.inverted_in_surface ? e.target : e.source].push_back(i);
    }
    assigned_.assign(edges.size(), false);

    visited_.insert(g.root());
    expand(g.root());

    while (visited_.size() < g.nodes().size()) {
      std::optional<size_t> pick;
      for (size_t i = 0; i < edges.size(); ++i) {
        if (assigned_[i]) continue;
        const bool s = visited_.contains(edges[i].source);
        const bool t = visited_.contains(edges[i].target);
        if (s == t) continue;
        if (!pick || std::tie(edges[i].role, edges[i].source, edges[i].target) <
                         std::tie(edges[*pick].role, edges[*pick].source,
                                  edges[*pick].target))
          pick = i;
      }
      if (!pick) break;  // unreachable for connected graphs
      const Edge& e = edges[*pick];
      const bool forward = visited_.contains(e.source);
      const VarId& at = forward ? e.source : e.target;
      const VarId& other = forward ? e.target : e.source;
      assigned_[*pick] = true;
      slots_[at].push_back({forward ? e.role : e.role + "-of", Slot::Child, other});
      visited_.insert(other);
      expand(other);
    }

    for (auto& [v, slots] : slots_) {
      std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        return std::tie(a.role, a.target) < std::tie(b.role, b.target);
      });
    }
  }

  const std::vector<Slot>& slots(const VarId& v) const {
    static const std::vector<Slot> empty;
    auto it = slots_.find(v);
    return it == slots_.end() ? empty : it->second;
  }

 private:
  void expand(const VarId& v) {
    const auto& edges = g_.edges();
    std::vector<std::pair<Slot, std::optional<size_t>>> items;
    if (auto it = host_.find(v); it != host_.end()) {
      for (size_t i : it->second) {
        const Edge& e = edges[i];
        if (e.inverted_in_surface)
          items.push_back({{e.role + "-of", Slot::Ref, e.source}, i});
        else
          items.push_back({{e.role, Slot::Ref, e.target}, i});
      }
    }
    for (const auto& a : g_.attributes()) {
      if (a.variable == v) items.push_back({{a.role, Slot::Constant, a.value}, std::nullopt});
    }
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
      return std::tie(a.first.role, a.first.target) <
             std::tie(b.first.role, b.first.target);
    });
    for (auto& [slot, edge_index] : items) {
      if (edge_index) {
        if (assigned_[*edge_index]) continue;
        assigned_[*edge_index] = true;
        if (!visited_.contains(slot.target)) {
          slot.kind = Slot::Child;
          visited_.insert(slot.target);
          slots_[v].push_back(slot);
          expand(slot.target);
          continue;
        }
      }
      slots_[v].push_back(slot);
    }
  }

  const AmrGraph& g_;
  std::map<VarId, std::vector<size_t>> host_;
  std::vector<bool> assigned_;
  std::set<VarId> visited_;
  std::map<VarId, std::vector<Slot>> slots_;
};

void render(const AmrGraph& g, const SerializationPlan& plan, const VarId& v,
            std::string& out) {
  out += '(';
  out += v;
  out += " / ";
  out += g.concept_of(v);
  for (const auto& slot : plan.slots(v)) {
    out += ' ';
    out += slot.role;
    out += ' ';
    if (slot.kind == Slot::Child)
      render(g, plan, slot.target, out);
    else
      out += slot.target;
  }
  out += ')';
}

void preorder(const SerializationPlan& plan, const VarId& v,
              std::vector<VarId>& order) {
  order.push_back(v);
  for (const auto& slot : plan.slots(v)) {
    if (slot.kind == Slot::Child) preorder(plan, slot.target, order);
  }
}

}  // namespace

AmrGraph::AmrGraph(VarId root, std::map<VarId, Node> nodes, std::vector<Edge> edges,
                   std::vector<Attribute> attributes)
    : root_(std::move(root)),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      attributes_(std::move(attributes)) {
  if (!nodes_.contains(root_))
    throw DanglingVariable("root '" + root_ + "' is not a node");
  for (const auto& [v, n] : nodes_) {
    if (n.variable != v) throw SyntaxError("node key mismatch for '" + v + "'");
    if (n.concept_label.empty()) throw SyntaxError("empty concept for '" + v + "'");
  }
  std::map<VarId, std::vector<VarId>> adjacency;
  for (const auto& e : edges_) {
    if (!nodes_.contains(e.source) || !nodes_.contains(e.target))
      throw DanglingVariable("edge " + e.source + " " + e.role + " " + e.target +
                             " references an unknown variable");
    if (e.role.empty() || e.role.front() != ':')
      throw SyntaxError("role '" + e.role + "' must begin with ':'");
    adjacency[e.source].push_back(e.target);
    adjacency[e.target].push_back(e.source);
  }
  for (const auto& a : attributes_) {
    if (!nodes_.contains(a.variable))
      throw DanglingVariable("attribute on unknown variable '" + a.variable + "'");
  }
  std::set<VarId> seen{root_};
  std::queue<VarId> frontier;
  frontier.push(root_);
  while (!frontier.empty()) {
    VarId v = frontier.front();
    frontier.pop();
    for (const auto& w : adjacency[v]) {
      if (seen.insert(w).second) frontier.push(w);
    }
  }
  if (seen.size() != nodes_.size())
    throw SyntaxError("graph is not connected to root '" + root_ + "'");
}

const std::string& AmrGraph::concept_of(const VarId& v) const {
  return nodes_.at(v).concept_label;
}

std::vector<const Edge*> AmrGraph::outgoing(const VarId& v) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges_)
    if (e.source == v) out.push_back(&e);
  return out;
}

std::vector<const Edge*> AmrGraph::incoming(const VarId& v) const {
  std::vector<const Edge*> in;
  for (const auto& e : edges_)
    if (e.target == v) in.push_back(&e);
  return in;
}

bool AmrGraph::same_as(const AmrGraph& other) const {
  if (root_ != other.root_ || nodes_ != other.nodes_) return false;
  auto edge_set = [](const std::vector<Edge>& edges) {
    std::set<std::tuple<VarId, std::string, VarId>> s;
    for (const auto& e : edges) s.emplace(e.source, e.role, e.target);
    return s;
  };
  auto attr_set = [](const std::vector<Attribute>& attrs) {
    std::set<std::tuple<VarId, std::string, std::string>> s;
    for (const auto& a : attrs) s.emplace(a.variable, a.role, a.value);
    return s;
  };
  return edge_set(edges_) == edge_set(other.edges_) &&
         attr_set(attributes_) == attr_set(other.attributes_);
}

AmrGraph parse_penman(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw SyntaxError("empty PENMAN text");
  return PenmanParser(text).parse();
}

std::string serialize_penman(const AmrGraph& graph) {
  SerializationPlan plan(graph);
  std::string out;
  render(graph, plan, graph.root(), out);
  return out;
}

std::vector<Triple> to_triples(const AmrGraph& graph) {
  std::vector<Triple> triples;
  triples.reserve(graph.nodes().size() + graph.edges().size() +
                  graph.attributes().size() + 1);
  for (const auto& [v, n] : graph.nodes())
    triples.push_back({TripleKind::Instance, v, "instance", n.concept_label});
  for (const auto& e : graph.edges())
    triples.push_back({TripleKind::Relation, e.source, e.role, e.target});
  for (const auto& a : graph.attributes())
    triples.push_back({TripleKind::Attribute, a.variable, a.role, a.value});
  triples.push_back({TripleKind::RootMarker, graph.root(),
                     std::string(kRootMarkerLabel), std::string(kRootMarkerTail)});
  return triples;
}

std::vector<PenmanBlock> split_penman_blocks(std::string_view body) {
  std::vector<PenmanBlock> blocks;
  PenmanBlock current;
  auto flush = [&] {
    if (!current.text.empty()) blocks.push_back(std::move(current));
    current = {};
  };
  std::istringstream in{std::string(body)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) {
      flush();
    } else if (line[first] == '#') {
      if (!current.text.empty()) flush();
      current.comments.push_back(line);
    } else {
      if (!current.text.empty()) current.text += '\n';
      current.text += line;
    }
  }
  flush();
  return blocks;
}

namespace {

std::pair<int, int> parse_token_span(const std::string& span) {
  const auto dash = span.find('-');
  try {
    if (dash == std::string::npos) throw std::invalid_argument(span);
    size_t used_a = 0, used_b = 0;
    const int a = std::stoi(span.substr(0, dash), &used_a);
    const int b = std::stoi(span.substr(dash + 1), &used_b);
    if (used_a != dash || used_b != span.size() - dash - 1) throw std::invalid_argument(span);
    return {a, b};
  } catch (const std::exception&) {
    throw SyntaxError("bad alignment span '" + span + "'");
  }
}

}  // namespace

std::vector<CommentAlignment> alignments_from_comments(
    const std::vector<std::string>& comments) {
  std::vector<CommentAlignment> out;
  for (const auto& line : comments) {
    std::istringstream fields(line);
    std::string hash, tag;
    fields >> hash >> tag;
    if (hash != "#") continue;
    if (tag == "::node") {
      std::string var, concept_label, span;
      if (!(fields >> var >> concept_label >> span)) continue;
      const auto [start, end] = parse_token_span(span);
      out.push_back({var, start, end});
    } else if (tag == "::alignments") {
      // <start>-<end>|<var>[+<var>...]
      std::string item;
      while (fields >> item) {
        const auto bar = item.find('|');
        if (bar == std::string::npos) throw SyntaxError("bad alignment '" + item + "'");
        const auto [start, end] = parse_token_span(item.substr(0, bar));
        std::istringstream vars(item.substr(bar + 1));
        std::string var;
        while (std::getline(vars, var, '+'))
          if (!var.empty()) out.push_back({var, start, end});
      }
    }
  }
  return out;
}

AmrGraph reletter(const AmrGraph& graph, std::map<VarId, VarId>* renaming) {
  SerializationPlan plan(graph);
  std::vector<VarId> order;
  preorder(plan, graph.root(), order);
  std::map<VarId, VarId> rename;
  for (size_t i = 0; i < order.size(); ++i) rename[order[i]] = "z" + std::to_string(i);

  std::map<VarId, Node> nodes;
  for (const auto& [v, n] : graph.nodes()) {
    const VarId& nv = rename.at(v);
    nodes.emplace(nv, Node{nv, n.concept_label});
  }
  std::vector<Edge> edges;
  for (const auto& e : graph.edges())
    edges.push_back({rename.at(e.source), e.role, rename.at(e.target), e.inverted_in_surface});
  std::vector<Attribute> attrs;
  for (const auto& a : graph.attributes())
    attrs.push_back({rename.at(a.variable), a.role, a.value});
  if (renaming) *renaming = rename;
  return AmrGraph(rename.at(graph.root()), std::move(nodes), std::move(edges),
                  std::move(attrs));
}

bool has_sense_suffix(std::string_view label) {
  return label.size() >= 4 && label[label.size() - 3] == '-' &&
         std::isdigit(static_cast<unsigned char>(label[label.size() - 2])) &&
         std::isdigit(static_cast<unsigned char>(label.back()));
}

std::string strip_sense(std::string_view label) {
  if (has_sense_suffix(label)) label.remove_suffix(3);
  return std::string(label);
}

bool is_core_argument_role(std::string_view role) {
  return role.size() == 5 && role.substr(0, 4) == ":ARG" && role[4] >= '0' &&
         role[4] <= '5';
}

}  // namespace ssa
