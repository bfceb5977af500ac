#pragma once

#include <span>
#include <string>
#include <vector>

namespace lstma {

using Tokens = std::vector<std::string>;

struct EvalPair {
  std::string id;
  Tokens candidate;
  std::vector<Tokens> references;  // at least one
};

struct MetricReport {
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double bleu3 = 0.0;
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double cider_d = 0.0;

  /// Single-line JSON object.
  std::string to_json() const;
};

/// Corpus-level BLEU@1..BLEU@max_n: clipped n-gram precisions (clip at the
/// maximum count in any reference), uniform geometric mean, brevity penalty
/// against the closest reference length of each pair.
std::vector<double> bleu(std::span<const EvalPair> pairs, int max_n = 4);

/// LCS-based F-measure with beta = 1.2 against the best reference.
double rouge_l_pair(const Tokens& candidate, const std::vector<Tokens>& references);
double rouge_l(std::span<const EvalPair> pairs);

/// CIDEr-D per pair: TF-IDF n-gram vectors (n = 1..4, equal weights) with
/// document frequencies over the references of `pairs`, clipped cosine,
/// Gaussian length penalty (sigma = 6), scaled by 10.
std::vector<double> cider_d_scores(std::span<const EvalPair> pairs);
double cider_d(std::span<const EvalPair> pairs);

MetricReport score_corpus(std::span<const EvalPair> pairs);

}  // namespace lstma
