#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ssa {

// Word -> vector table read from the "word v1 ... vd" text format. Keys are
// case-folded on insert and lookup.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(size_t dimension = 0) : dimension_(dimension) {}

  // Throws DimensionMismatch, EmptyFile.
  static EmbeddingStore load(const std::filesystem::path& path);
  static EmbeddingStore parse(std::string_view body);

  // Throws DimensionMismatch if the vector length differs from the store's.
  void add(std::string_view word, std::vector<double> vec);

  size_t dimension() const { return dimension_; }
  size_t size() const { return table_.size(); }
  bool contains(std::string_view word) const;
  const std::vector<double>* find(std::string_view word) const;

  // nullopt when either word is missing or has a zero vector.
  std::optional<double> cosine(std::string_view a, std::string_view b) const;

 private:
  size_t dimension_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

std::string case_fold(std::string_view s);

}  // namespace ssa
