#include "ssa/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ssa/error.hpp"

namespace ssa {

std::string case_fold(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw EmptyFile("cannot read embeddings file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

EmbeddingStore EmbeddingStore::parse(std::string_view body) {
  EmbeddingStore store;
  std::istringstream in{std::string(body)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> vec;
    double x;
    while (fields >> x) vec.push_back(x);
    if (!fields.eof())
      throw DimensionMismatch("non-numeric component on line " + std::to_string(line_no));
    if (vec.empty())
      throw DimensionMismatch("no vector for '" + word + "' on line " +
                              std::to_string(line_no));
    store.add(word, std::move(vec));
  }
  if (store.size() == 0) throw EmptyFile("embeddings file holds no vectors");
  return store;
}

void EmbeddingStore::add(std::string_view word, std::vector<double> vec) {
  if (dimension_ == 0) dimension_ = vec.size();
  if (vec.size() != dimension_)
    throw DimensionMismatch("'" + std::string(word) + "' has " +
                            std::to_string(vec.size()) + " components, expected " +
                            std::to_string(dimension_));
  table_[case_fold(word)] = std::move(vec);
}

bool EmbeddingStore::contains(std::string_view word) const {
  return table_.contains(case_fold(word));
}

const std::vector<double>* EmbeddingStore::find(std::string_view word) const {
  auto it = table_.find(case_fold(word));
  return it == table_.end() ? nullptr : &it->second;
}

std::optional<double> EmbeddingStore::cosine(std::string_view a, std::string_view b) const {
  const auto* va = find(a);
  const auto* vb = find(b);
  if (!va || !vb) return std::nullopt;
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < dimension_; ++i) {
    dot += (*va)[i] * (*vb)[i];
    na += (*va)[i] * (*va)[i];
    nb += (*vb)[i] * (*vb)[i];
  }
  if (na == 0 || nb == 0) return std::nullopt;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace ssa
