#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ssa/amr.hpp"

namespace ssa {

struct SmatchResult {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::map<VarId, VarId> mapping;  // injective, A -> B
  int matched_triples = 0;
  int triples_a = 0;
  int triples_b = 0;
};

inline constexpr int kDefaultSmatchRestarts = 4;
inline constexpr size_t kBruteForceVariableLimit = 8;

// Hill-climbing over injective variable mappings. The first restart starts
// from a concept-matching assignment, the rest from seeded random ones.
SmatchResult smatch_score(const AmrGraph& a, const AmrGraph& b,
                          int restarts = kDefaultSmatchRestarts, uint64_t seed = 0);

// Exact optimum by enumerating injections of the smaller variable set.
// Throws TooLarge if both graphs exceed kBruteForceVariableLimit variables.
SmatchResult smatch_brute_force(const AmrGraph& a, const AmrGraph& b);

// Number of triples of `a` matched in `b` under `mapping`.
int count_matched_triples(const AmrGraph& a, const AmrGraph& b,
                          const std::map<VarId, VarId>& mapping);

class DistanceMatrix {
 public:
  explicit DistanceMatrix(size_t n) : n_(n), d_(n * n, 0.0) {}

  size_t size() const { return n_; }
  double operator()(size_t i, size_t j) const { return d_[i * n_ + j]; }
  void set_symmetric(size_t i, size_t j, double v) {
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

  static DistanceMatrix from_rows(const std::vector<std::vector<double>>& rows);

 private:
  size_t n_;
  std::vector<double> d_;
};

// d[i][j] = 1 - max(f1(g_i, g_j), f1(g_j, g_i)). Pair seeds derive from
// (seed, i, j), so the result does not depend on evaluation order.
DistanceMatrix distance_matrix(const std::vector<AmrGraph>& graphs,
                               int restarts = kDefaultSmatchRestarts, uint64_t seed = 0);

}  // namespace ssa
