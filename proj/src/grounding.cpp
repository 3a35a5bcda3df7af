#include "ssa/grounding.hpp"

#include "ssa/error.hpp"

namespace ssa {

namespace {

std::string describe(const Box& b) {
  return "(" + std::to_string(b.x1) + "," + std::to_string(b.y1) + "," +
         std::to_string(b.x2) + "," + std::to_string(b.y2) + ")";
}

void check_span(const TokenSpan& span, size_t token_count, const std::string& what) {
  if (span.start < 0 || span.start >= span.end ||
      static_cast<size_t>(span.end) > token_count)
    throw SpanOutOfRange(what + " span [" + std::to_string(span.start) + "," +
                         std::to_string(span.end) + ") outside " +
                         std::to_string(token_count) + " tokens");
}

}  // namespace

VgAmr ungrounded(AmrGraph graph) {
  VgAmr out{std::move(graph), {}, {}};
  for (const auto& [v, n] : out.graph.nodes()) out.synonyms[v] = {n.concept_label};
  return out;
}

void validate_record(const GroundedCaptionRecord& record) {
  if (record.image_width <= 0 || record.image_height <= 0)
    throw InvalidBox("image " + record.image_id + " has non-positive dimensions");
  for (const auto& g : record.groundings) {
    check_span(g.span, record.tokens.size(), "grounding " + g.entity_id);
    for (const auto& b : g.boxes) {
      if (!(0 <= b.x1 && b.x1 < b.x2 && b.x2 <= record.image_width && 0 <= b.y1 &&
            b.y1 < b.y2 && b.y2 <= record.image_height))
        throw InvalidBox("box " + describe(b) + " of " + g.entity_id +
                         " outside image " + record.image_id);
    }
  }
  for (const auto& a : record.alignments)
    check_span(a.span, record.tokens.size(), "alignment of " + a.variable);
}

VgAmr build_vgamr(const GroundedCaptionRecord& record) {
  validate_record(record);

  std::vector<NodeAlignment> alignments = record.alignments;
  if (alignments.empty()) {
    for (const auto& block : split_penman_blocks(record.amr)) {
      for (const auto& c : alignments_from_comments(block.comments))
        alignments.push_back({c.variable, {c.start, c.end}});
    }
    for (const auto& a : alignments)
      check_span(a.span, record.tokens.size(), "alignment of " + a.variable);
  }

  auto blocks = split_penman_blocks(record.amr);
  if (blocks.size() != 1)
    throw SyntaxError("record " + record.caption_id + " must hold exactly one AMR");
  VgAmr out = ungrounded(parse_penman(blocks.front().text));

  for (const auto& a : alignments) {
    if (!out.graph.has_node(a.variable))
      throw DanglingVariable("alignment names unknown variable '" + a.variable + "'");
    for (const auto& g : record.groundings) {
      if (!a.span.overlaps(g.span) || g.boxes.empty()) continue;
      out.grounding[a.variable].insert(g.boxes.begin(), g.boxes.end());
    }
  }
  return out;
}

}  // namespace ssa
