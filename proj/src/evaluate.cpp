#include "lstma/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "lstma/parallel.hpp"

namespace lstma {

std::vector<CaptionResult> caption_records(std::span<const CaptionerParams> models,
                                           Variant variant,
                                           const std::vector<CaptionRecord>& records,
                                           const Vocabulary& vocab, const DecodeConfig& config,
                                           bool greedy, std::size_t threads) {
  config.validate();
  std::vector<CaptionResult> out(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    const CaptionRecord& rec = records[i];
    DecodedSentence best;
    if (greedy) {
      best = greedy_decode(models, variant, rec.features, rec.attributes, config);
    } else {
      best = beam_search(models, variant, rec.features, rec.attributes, config).front();
    }
    out[i].id = rec.id;
    out[i].sequence = best.sequence();
    out[i].caption = decode(out[i].sequence, vocab);
    out[i].logprob = best.logprob;
  });
  return out;
}

std::string captions_tsv(const std::vector<CaptionResult>& captions) {
  std::string out;
  for (const auto& c : captions) {
    out += format_caption_line(c.id, c.caption, c.logprob);
    out += '\n';
  }
  return out;
}

std::vector<EvalPair> make_eval_pairs(const std::vector<CaptionResult>& captions,
                                      const std::vector<CaptionRecord>& records) {
  if (captions.size() != records.size()) {
    throw std::invalid_argument("caption count does not match record count");
  }
  std::vector<EvalPair> pairs;
  pairs.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EvalPair p;
    p.id = records[i].id;
    p.candidate = tokenize(captions[i].caption);
    for (const auto& ref : records[i].captions) p.references.push_back(tokenize(ref));
    pairs.push_back(std::move(p));
  }
  return pairs;
}

Evaluation score_captions(const std::vector<CaptionResult>& captions,
                          const std::vector<CaptionRecord>& records) {
  const auto pairs = make_eval_pairs(captions, records);
  Evaluation ev;
  ev.report = score_corpus(pairs);
  ev.captions = captions;
  const auto cider = cider_d_scores(pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto b = bleu(std::span(&pairs[i], 1), 4);
    ev.per_image.push_back({pairs[i].id, b[0], b[1], b[2], b[3],
                            rouge_l_pair(pairs[i].candidate, pairs[i].references), cider[i]});
  }
  return ev;
}

Evaluation evaluate(std::span<const CaptionerParams> models, Variant variant,
                    const std::vector<CaptionRecord>& records, const Vocabulary& vocab,
                    const DecodeConfig& config, bool greedy, std::size_t threads) {
  if (records.empty()) throw std::invalid_argument("evaluate: no records");
  return score_captions(caption_records(models, variant, records, vocab, config, greedy, threads),
                        records);
}

std::string per_image_csv(const std::vector<ImageScore>& scores) {
  std::string out = "id,bleu1,bleu2,bleu3,bleu4,rouge_l,cider_d\n";
  char buf[256];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, ",%.10f,%.10f,%.10f,%.10f,%.10f,%.10f\n", s.bleu1, s.bleu2,
                  s.bleu3, s.bleu4, s.rouge_l, s.cider_d);
    out += s.id;
    out += buf;
  }
  return out;
}

namespace {

double safe_ratio(double v, double max) { return max > 0.0 ? v / max : 0.0; }

}  // namespace

std::vector<SweepRow> beam_sweep(std::span<const CaptionerParams> models, Variant variant,
                                 const std::vector<CaptionRecord>& records,
                                 const Vocabulary& vocab, std::span<const std::size_t> beam_sizes,
                                 const DecodeConfig& base, std::size_t threads) {
  if (beam_sizes.empty()) throw std::invalid_argument("beam sweep needs at least one beam size");
  std::vector<SweepRow> rows;
  for (std::size_t k : beam_sizes) {
    DecodeConfig cfg = base;
    cfg.beam_size = k;
    rows.push_back({k, evaluate(models, variant, records, vocab, cfg, false, threads).report, {}});
  }
  MetricReport peak;
  for (const auto& r : rows) {
    peak.bleu1 = std::max(peak.bleu1, r.raw.bleu1);
    peak.bleu2 = std::max(peak.bleu2, r.raw.bleu2);
    peak.bleu3 = std::max(peak.bleu3, r.raw.bleu3);
    peak.bleu4 = std::max(peak.bleu4, r.raw.bleu4);
    peak.rouge_l = std::max(peak.rouge_l, r.raw.rouge_l);
    peak.cider_d = std::max(peak.cider_d, r.raw.cider_d);
  }
  for (auto& r : rows) {
    r.normalized = {safe_ratio(r.raw.bleu1, peak.bleu1), safe_ratio(r.raw.bleu2, peak.bleu2),
                    safe_ratio(r.raw.bleu3, peak.bleu3), safe_ratio(r.raw.bleu4, peak.bleu4),
                    safe_ratio(r.raw.rouge_l, peak.rouge_l), safe_ratio(r.raw.cider_d, peak.cider_d)};
  }
  return rows;
}

std::string beam_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "k,bleu1,bleu2,bleu3,bleu4,rouge_l,cider_d,"
      "bleu1_norm,bleu2_norm,bleu3_norm,bleu4_norm,rouge_l_norm,cider_d_norm\n";
  char buf[512];
  for (const auto& r : rows) {
    const auto& a = r.raw;
    const auto& n = r.normalized;
    std::snprintf(buf, sizeof buf,
                  "%zu,%.10f,%.10f,%.10f,%.10f,%.10f,%.10f,%.10f,%.10f,%.10f,%.10f,%.10f,%.10f\n",
                  r.beam_size, a.bleu1, a.bleu2, a.bleu3, a.bleu4, a.rouge_l, a.cider_d, n.bleu1,
                  n.bleu2, n.bleu3, n.bleu4, n.rouge_l, n.cider_d);
    out += buf;
  }
  return out;
}

}  // namespace lstma
