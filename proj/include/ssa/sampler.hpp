#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ssa/grounding.hpp"

namespace ssa {

// A node whose concept (or any synonym) has a two-digit sense suffix and
// which has at least one outgoing :ARG0..:ARG5 edge.
bool is_predicate(const VgAmr& graph, const VarId& v);

std::vector<VarId> find_predicates(const VgAmr& meta);

enum class SampleKind { ArgumentClosure, Extended };

const char* to_string(SampleKind kind);

struct SampledSubgraph {
  VgAmr graph;  // synonyms resolved to one label, variables re-lettered
  VarId origin_predicate;  // meta variable; source_nodes maps the root to it
  SampleKind kind = SampleKind::ArgumentClosure;
  std::map<VarId, VarId> source_nodes;  // sample variable -> meta variable
};

// Two samples per predicate: the closure along outgoing argument edges and
// the same closure extended by the predicate's other branches. The extended
// sample is dropped when it adds nothing.
std::vector<SampledSubgraph> sample_event_subgraphs(const VgAmr& meta, uint64_t seed);

}  // namespace ssa
