#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ssa/embeddings.hpp"
#include "ssa/grounding.hpp"
#include "ssa/smatch.hpp"

namespace ssa {

struct MergeParams {
  double synonym_threshold = 0.7;
  double predicate_threshold = 0.5;

  // Throws ConfigError unless 0 <= predicate < synonym <= 1.
  void validate() const;
};

// Cluster ids: leaves are 0..n-1, step k creates cluster n+k.
struct MergeStep {
  size_t left = 0;
  size_t right = 0;
  size_t merged = 0;
  double distance = 0;
};

struct MergeTree {
  size_t leaves = 0;
  std::vector<MergeStep> steps;
};

// Average-linkage agglomeration. Ties go to the smallest (left, right) pair
// of cluster ids.
MergeTree upgma_order(const DistanceMatrix& d);

enum class PairReason { AndOr, GroundedSameBoxes, LabelNeighborhood, PredicateChildren };

const char* to_string(PairReason reason);

struct NodePair {
  VarId a;
  VarId b;
  PairReason reason;
};

struct NodePairing {
  std::vector<NodePair> pairs;
  // Labels that had no embedding; they score similarity 0.
  std::vector<std::string> warnings;

  bool empty() const { return pairs.empty(); }
};

// Similarity of two synonym lists: identical labels (sense suffix ignored)
// score 1, otherwise the best cosine over label pairs. Missing labels are
// appended to `missing` when given.
double label_similarity(const std::vector<std::string>& a,
                        const std::vector<std::string>& b, const EmbeddingStore& store,
                        std::set<std::string>* missing = nullptr);

NodePairing find_common_nodes(const VgAmr& a, const VgAmr& b, const MergeParams& params,
                              const EmbeddingStore& embeddings);

struct MergeResult {
  VgAmr graph;
  std::map<VarId, VarId> from_a;  // variable of a -> variable of graph
  std::map<VarId, VarId> from_b;
};

// Unifies paired nodes and unions everything else. With an empty pairing the
// two graphs hang off a fresh multi-sentence root as :snt1 / :snt2.
MergeResult merge_pair(const VgAmr& a, const VgAmr& b, const NodePairing& pairing);

// Folds grounded nodes of one graph that share a box set and have synonym
// labels into a single node. Returns old -> new variable names.
std::map<VarId, VarId> collapse_redundant_grounded(VgAmr& graph, const MergeParams& params,
                                                   const EmbeddingStore& embeddings);

struct MetaResult {
  VgAmr meta;
  MergeTree tree;
  // node_maps[i]: variable of input i -> variable of meta.
  std::vector<std::map<VarId, VarId>> node_maps;
  std::vector<std::string> warnings;
};

MetaResult build_meta_vgamr(const std::vector<VgAmr>& vgamrs, const MergeParams& params,
                            const EmbeddingStore& embeddings,
                            int restarts = kDefaultSmatchRestarts, uint64_t seed = 0);

}  // namespace ssa
