#pragma once

#include <span>
#include <string>
#include <vector>

#include "lstma/captioner.hpp"
#include "lstma/data.hpp"
#include "lstma/decoding.hpp"
#include "lstma/metrics.hpp"
#include "lstma/vocab.hpp"

namespace lstma {

struct CaptionResult {
  std::string id;
  TokenSequence sequence;
  std::string caption;
  double logprob = 0.0;
};

/// Decodes every record: greedy when `greedy`, otherwise the top beam.
std::vector<CaptionResult> caption_records(std::span<const CaptionerParams> models,
                                           Variant variant,
                                           const std::vector<CaptionRecord>& records,
                                           const Vocabulary& vocab, const DecodeConfig& config,
                                           bool greedy = false, std::size_t threads = 1);

std::string captions_tsv(const std::vector<CaptionResult>& captions);

/// Pairs each decoded caption with the tokenized ground-truth captions.
std::vector<EvalPair> make_eval_pairs(const std::vector<CaptionResult>& captions,
                                      const std::vector<CaptionRecord>& records);

struct ImageScore {
  std::string id;
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double bleu3 = 0.0;
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double cider_d = 0.0;
};

struct Evaluation {
  MetricReport report;
  std::vector<ImageScore> per_image;
  std::vector<CaptionResult> captions;
};

Evaluation score_captions(const std::vector<CaptionResult>& captions,
                          const std::vector<CaptionRecord>& records);

Evaluation evaluate(std::span<const CaptionerParams> models, Variant variant,
                    const std::vector<CaptionRecord>& records, const Vocabulary& vocab,
                    const DecodeConfig& config, bool greedy = false, std::size_t threads = 1);

/// "id,bleu1,bleu2,bleu3,bleu4,rouge_l,cider_d" rows.
std::string per_image_csv(const std::vector<ImageScore>& scores);

struct SweepRow {
  std::size_t beam_size = 0;
  MetricReport raw;
  MetricReport normalized;  // each metric divided by its maximum over the sweep
};

std::vector<SweepRow> beam_sweep(std::span<const CaptionerParams> models, Variant variant,
                                 const std::vector<CaptionRecord>& records,
                                 const Vocabulary& vocab, std::span<const std::size_t> beam_sizes,
                                 const DecodeConfig& base, std::size_t threads = 1);

std::string beam_sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace lstma
