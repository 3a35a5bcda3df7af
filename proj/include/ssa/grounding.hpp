#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ssa/amr.hpp"

namespace ssa {

// Axis-aligned box in pixel coordinates, corner convention.
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double area() const { return (x2 - x1) * (y2 - y1); }
  auto operator<=>(const Box&) const = default;
};

using BoxSet = std::set<Box>;

// Half-open token range [start, end).
struct TokenSpan {
  int start = 0;
  int end = 0;

  bool overlaps(const TokenSpan& o) const { return start < o.end && o.start < end; }
  auto operator<=>(const TokenSpan&) const = default;
};

struct PhraseGrounding {
  TokenSpan span;
  std::string entity_id;
  std::vector<Box> boxes;
};

struct NodeAlignment {
  VarId variable;
  TokenSpan span;
};

struct GroundedCaptionRecord {
  std::string image_id;
  int image_width = 0;
  int image_height = 0;
  std::string caption_id;
  std::vector<std::string> tokens;
  std::vector<PhraseGrounding> groundings;
  std::string amr;
  // Empty means: fall back to alignment comment lines inside `amr`.
  std::vector<NodeAlignment> alignments;
};

// Visually grounded AMR. `synonyms` has an entry for every node; the first
// label is the node's concept.
struct VgAmr {
  AmrGraph graph;
  std::map<VarId, BoxSet> grounding;
  std::map<VarId, std::vector<std::string>> synonyms;

  bool is_grounded(const VarId& v) const { return grounding.contains(v); }
};

// Wraps a plain graph with no grounding and single-label synonym lists.
VgAmr ungrounded(AmrGraph graph);

// Throws InvalidBox / SpanOutOfRange when the record breaks its invariants.
void validate_record(const GroundedCaptionRecord& record);

// Joins node-token alignments with phrase-box groundings on span overlap.
VgAmr build_vgamr(const GroundedCaptionRecord& record);

}  // namespace ssa
