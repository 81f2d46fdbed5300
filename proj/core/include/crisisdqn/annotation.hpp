#pragma once

// Weak annotation: turns per-(query, text) confidences from two extractive QA
// models into the integer score Sc = number of queries the text answers.

#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crisisdqn/corpus.hpp"

namespace crisisdqn {

inline constexpr double kDefaultConfidenceThreshold = 0.80;

struct ConfidencePair {
  std::string text_id;
  std::string query_id;
  double conf_a = 0.0;
  double conf_b = 0.0;
};

struct WeakScoreTable {
  std::map<std::string, int> sc;
  // text_id -> query_id -> (conf_a + conf_b) / 2, counting pairs only. Diagnostic.
  std::map<std::string, std::map<std::string, double>> mean_confidence;

  int score(const std::string& text_id) const;
};

class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pair counts iff both conf_a >= threshold and conf_b >= threshold.
// Every text seen in `pairs` gets an entry, possibly 0.
WeakScoreTable aggregate_scores(std::span<const ConfidencePair> pairs,
                                double threshold = kDefaultConfidenceThreshold);

std::vector<ConfidencePair> load_confidences(const std::filesystem::path& path);
void write_confidences(std::span<const ConfidencePair> pairs, const std::filesystem::path& path);

// Overwrites sc on every text of the corpus; texts absent from the table get 0.
// Throws AnnotationError if a resulting score exceeds the owning event's |Q_e|.
void merge_scores(Corpus& corpus, const WeakScoreTable& table);

}  // namespace crisisdqn
