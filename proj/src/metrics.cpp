#include "lstma/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

namespace lstma {

namespace {

using NgramCounts = std::map<std::string, double>;

constexpr int kMaxOrder = 4;
constexpr double kRougeBeta = 1.2;
constexpr double kCiderSigma = 6.0;

NgramCounts ngrams(const Tokens& tokens, int n) {
  NgramCounts out;
  if (tokens.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key += ' ';
      key += tokens[i + k];
    }
    out[key] += 1.0;
  }
  return out;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

void require_pairs(std::span<const EvalPair> pairs, const char* metric) {
  if (pairs.empty()) throw std::invalid_argument(std::string(metric) + ": no pairs to score");
  for (const auto& p : pairs) {
    if (p.references.empty()) {
      throw std::invalid_argument(std::string(metric) + ": pair '" + p.id + "' has no references");
    }
  }
}

struct TfIdf {
  std::array<NgramCounts, kMaxOrder> vec;
  std::array<double, kMaxOrder> norm{};
  std::size_t length = 0;
};

}  // namespace

std::vector<double> bleu(std::span<const EvalPair> pairs, int max_n) {
  if (max_n < 1 || max_n > kMaxOrder) throw std::invalid_argument("BLEU order must be in 1..4");
  require_pairs(pairs, "bleu");

  std::vector<double> clipped(max_n, 0.0), total(max_n, 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (const auto& p : pairs) {
    const double c = static_cast<double>(p.candidate.size());
    cand_len += c;
    // Closest reference length; ties go to the shorter one.
    double best = -1.0;
    for (const auto& r : p.references) {
      const double len = static_cast<double>(r.size());
      if (best < 0 || std::abs(len - c) < std::abs(best - c) ||
          (std::abs(len - c) == std::abs(best - c) && len < best)) {
        best = len;
      }
    }
    ref_len += best;

    for (int n = 1; n <= max_n; ++n) {
      const NgramCounts cand = ngrams(p.candidate, n);
      NgramCounts max_ref;
      for (const auto& r : p.references) {
        for (const auto& [g, cnt] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], cnt);
      }
      for (const auto& [g, cnt] : cand) {
        auto it = max_ref.find(g);
        clipped[n - 1] += std::min(cnt, it == max_ref.end() ? 0.0 : it->second);
        total[n - 1] += cnt;
      }
    }
  }

  std::vector<double> scores(max_n, 0.0);
  if (cand_len == 0.0) return scores;
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    if (clipped[n - 1] == 0.0 || total[n - 1] == 0.0) break;  // this and higher orders stay 0
    log_sum += std::log(clipped[n - 1] / total[n - 1]);
    scores[n - 1] = bp * std::exp(log_sum / n);
  }
  return scores;
}

double rouge_l_pair(const Tokens& candidate, const std::vector<Tokens>& references) {
  double best = 0.0;
  for (const auto& ref : references) {
    const double lcs = static_cast<double>(lcs_length(candidate, ref));
    if (lcs == 0.0) continue;
    const double prec = lcs / static_cast<double>(candidate.size());
    const double rec = lcs / static_cast<double>(ref.size());
    const double b2 = kRougeBeta * kRougeBeta;
    best = std::max(best, (1.0 + b2) * prec * rec / (rec + b2 * prec));
  }
  return best;
}

double rouge_l(std::span<const EvalPair> pairs) {
  require_pairs(pairs, "rouge_l");
  double sum = 0.0;
  for (const auto& p : pairs) sum += rouge_l_pair(p.candidate, p.references);
  return sum / static_cast<double>(pairs.size());
}

std::vector<double> cider_d_scores(std::span<const EvalPair> pairs) {
  require_pairs(pairs, "cider_d");

  // Document frequency: number of pairs whose reference set contains the n-gram.
  std::map<std::string, double> df;
  for (const auto& p : pairs) {
    std::set<std::string> seen;
    for (const auto& r : p.references) {
      for (int n = 1; n <= kMaxOrder; ++n) {
        for (const auto& entry : ngrams(r, n)) seen.insert(entry.first);
      }
    }
    for (const auto& g : seen) df[g] += 1.0;
  }
  const double log_docs = std::log(static_cast<double>(pairs.size()));

  auto to_vec = [&](const Tokens& tokens) {
    TfIdf out;
    out.length = tokens.size();
    for (int n = 1; n <= kMaxOrder; ++n) {
      for (const auto& [g, tf] : ngrams(tokens, n)) {
        auto it = df.find(g);
        const double d = it == df.end() ? 1.0 : std::max(1.0, it->second);
        const double w = tf * (log_docs - std::log(d));
        out.vec[n - 1][g] = w;
        out.norm[n - 1] += w * w;
      }
    }
    for (double& v : out.norm) v = std::sqrt(v);
    return out;
  };

  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& p : pairs) {
    const TfIdf cand = to_vec(p.candidate);
    double sum = 0.0;
    for (const auto& r : p.references) {
      const TfIdf ref = to_vec(r);
      const double delta = static_cast<double>(cand.length) - static_cast<double>(ref.length);
      const double penalty = std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
      for (int n = 0; n < kMaxOrder; ++n) {
        double val = 0.0;
        for (const auto& [g, w] : cand.vec[n]) {
          auto it = ref.vec[n].find(g);
          if (it != ref.vec[n].end()) val += std::min(w, it->second) * it->second;
        }
        if (cand.norm[n] != 0.0 && ref.norm[n] != 0.0) val /= cand.norm[n] * ref.norm[n];
        sum += val * penalty;
      }
    }
    scores.push_back(10.0 * sum / kMaxOrder / static_cast<double>(p.references.size()));
  }
  return scores;
}

double cider_d(std::span<const EvalPair> pairs) {
  const auto scores = cider_d_scores(pairs);
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

MetricReport score_corpus(std::span<const EvalPair> pairs) {
  const auto b = bleu(pairs, 4);
  MetricReport r;
  r.bleu1 = b[0];
  r.bleu2 = b[1];
  r.bleu3 = b[2];
  r.bleu4 = b[3];
  r.rouge_l = rouge_l(pairs);
  r.cider_d = cider_d(pairs);
  return r;
}

std::string MetricReport::to_json() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"bleu1\":%.10f,\"bleu2\":%.10f,\"bleu3\":%.10f,\"bleu4\":%.10f,"
                "\"rouge_l\":%.10f,\"cider_d\":%.10f}",
                bleu1, bleu2, bleu3, bleu4, rouge_l, cider_d);
  return buf;
}

}  // namespace lstma
