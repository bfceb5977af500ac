// lstma: generate toy data, train attribute-conditioned captioners, decode,
// score and gradient-check from the command line.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lstma/checkpoint.hpp"
#include "lstma/data.hpp"
#include "lstma/decoding.hpp"
#include "lstma/evaluate.hpp"
#include "lstma/gradcheck.hpp"
#include "lstma/io.hpp"
#include "lstma/training.hpp"
#include "lstma/vocab.hpp"

namespace fs = std::filesystem;
using namespace lstma;

namespace {

std::size_t g_threads = 1;

// Flat key=value lines; blank lines and '#' comments ignored.
std::vector<std::string> config_args(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> args;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    args.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  return args;
}

// Moves "--config FILE" contents in front of the explicit flags of the
// subcommand so that flags given on the command line take precedence.
std::vector<std::string> expand_config(int argc, char** argv,
                                       const std::vector<std::string>& subcommands) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<fs::path> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!config) return args;
  auto sub = std::find_first_of(args.begin(), args.end(), subcommands.begin(), subcommands.end());
  if (sub == args.end()) throw std::runtime_error("--config requires a subcommand");
  auto extra = config_args(*config);
  args.insert(sub + 1, extra.begin(), extra.end());
  return args;
}

struct DecodeFlags {
  std::vector<std::string> checkpoints;
  std::string vocab;
  std::string data;
  std::string variant;
  std::size_t beam = 3;
  bool greedy = false;
  std::size_t max_len = 20;
  bool length_norm = false;
  std::string fusion = "arithmetic";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoints, "Checkpoint file(s); several form an ensemble")
        ->required();
    cmd->add_option("--vocab", vocab, "Vocabulary file written by train")->required();
    cmd->add_option("--data", data, "Dataset (JSON lines)")->required();
    cmd->add_option("--variant", variant, "Override the variant stored in the checkpoint");
    cmd->add_option("--beam", beam, "Beam size")->check(CLI::PositiveNumber);
    cmd->add_flag("--greedy", greedy, "Greedy decoding instead of beam search");
    cmd->add_option("--max-len", max_len, "Maximum generated words")->check(CLI::PositiveNumber);
    cmd->add_flag("--length-norm", length_norm, "Rank finished beams by logprob / length");
    cmd->add_option("--fusion", fusion, "Ensemble fusion: arithmetic | geometric");
  }

  DecodeConfig config() const {
    DecodeConfig c;
    c.beam_size = beam;
    c.max_len = max_len;
    c.length_norm = length_norm;
    c.fusion = parse_fusion(fusion);
    return c;
  }
};

struct Session {
  std::vector<CaptionerParams> models;
  Variant variant = Variant::A1;
  Vocabulary vocab;
  std::vector<CaptionRecord> records;
};

Session open_session(const DecodeFlags& flags) {
  Session s;
  s.records = load_dataset(flags.data);
  if (s.records.empty()) throw std::runtime_error(flags.data + ": no records");
  s.vocab = Vocabulary::load(flags.vocab);

  std::optional<ModelDims> expected;
  for (const auto& path : flags.checkpoints) {
    Checkpoint ck = load_checkpoint(path);
    if (!expected) {
      s.variant = flags.variant.empty() ? ck.meta.variant : parse_variant(flags.variant);
      expected = ModelDims{s.records.front().features.values.dim(),
                           s.records.front().attributes.probs.dim(), s.vocab.size(),
                           ck.meta.dims.embed_dim, ck.meta.dims.hidden_dim};
    }
    if (auto warning = check_compatible(ck.meta, s.variant, *expected, s.vocab.hash())) {
      std::cerr << "warning: " << path << ": " << *warning << "\n";
    }
    s.models.push_back(std::move(ck.params));
  }
  return s;
}

int run_gen_data(std::uint64_t seed, std::size_t n, std::size_t d_v, double attr_noise,
                 double feature_noise, const std::string& out) {
  ToyDatasetOptions opts;
  opts.seed = seed;
  opts.count = n;
  opts.image_dim = d_v;
  opts.attr_noise = attr_noise;
  opts.feature_noise = feature_noise;
  const auto records = generate_toy_dataset(opts);
  save_dataset(records, out);
  std::cerr << "wrote " << records.size() << " records to " << out << "\n";
  return 0;
}

struct TrainFlags {
  std::string data;
  std::string out;
  std::string variant = "a1";
  std::size_t iters = 2000;
  double lr = 0.01;
  std::size_t batch = 32;
  double clip = 5.0;
  std::uint64_t seed = 1;
  std::size_t embed = 64;
  std::size_t hidden = 64;
  double init_scale = 0.3;
  bool paper_scale = false;
  std::size_t ensemble = 1;
  std::size_t min_count = 5;
  std::size_t eval_every = 0;
  std::size_t decay_every = 0;
  double decay_factor = 0.5;
  std::size_t log_every = 100;
  bool dry_run = false;
};

int run_train(const TrainFlags& f) {
  const auto records = load_dataset(f.data);
  if (records.empty()) throw std::runtime_error(f.data + ": no records");
  const Vocabulary vocab = build_vocab(all_captions(records), f.min_count);

  TrainConfig cfg;
  cfg.variant = parse_variant(f.variant);
  cfg.lr = f.lr;
  cfg.batch_size = f.batch;
  cfg.max_iters = f.iters;
  cfg.clip_norm = f.clip > 0.0 ? std::optional<double>(f.clip) : std::nullopt;
  cfg.seed = f.seed;
  cfg.embed_dim = f.embed;
  cfg.hidden_dim = f.hidden;
  cfg.init_scale = f.init_scale;
  cfg.eval_every = f.eval_every;
  cfg.lr_decay_every = f.decay_every;
  cfg.lr_decay_factor = f.decay_factor;
  cfg.threads = g_threads;
  if (f.paper_scale) {
    cfg.embed_dim = 1024;
    cfg.hidden_dim = 1024;
    cfg.batch_size = 1024;
  }
  cfg.validate();
  const ModelDims dims = model_dims(cfg, records, vocab);
  const auto examples = make_examples(records, vocab);

  if (f.dry_run) {
    std::cout << "records=" << records.size() << " examples=" << examples.size()
              << " vocab=" << vocab.size() << " " << dims.describe() << "\n";
    return 0;
  }
  if (f.out.empty()) throw std::runtime_error("train: --out is required");

  vocab.save(f.out + ".vocab");
  for (std::size_t m = 0; m < f.ensemble; ++m) {
    TrainConfig member = cfg;
    member.seed = cfg.seed + m;
    const std::string stem = f.ensemble == 1 ? f.out : f.out + "." + std::to_string(m);
    auto progress = [&](std::size_t iter, double loss) {
      if (f.log_every > 0 && (iter % f.log_every == 0 || iter == 1)) {
        std::fprintf(stderr, "[%s member %zu] iter %zu loss %.6f\n", f.variant.c_str(), m, iter, loss);
      }
    };
    TrainResult result = sgd_train(member, records, vocab, progress);
    CheckpointMeta meta{member.variant, dims, vocab.hash(), member.max_iters};
    save_checkpoint(stem + ".ckpt", result.params, meta);
    write_file_atomic(stem + ".loss.csv", loss_history_csv(result.loss_history));
    std::fprintf(stderr, "member %zu: dataset loss %.6f -> %.6f, wrote %s.ckpt\n", m,
                 result.initial_dataset_loss, result.final_dataset_loss, stem.c_str());
  }
  return 0;
}

int run_caption(const DecodeFlags& flags, const std::string& out) {
  const Session s = open_session(flags);
  const auto captions = caption_records(s.models, s.variant, s.records, s.vocab, flags.config(),
                                        flags.greedy, g_threads);
  const std::string text = captions_tsv(captions);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
  return 0;
}

int run_evaluate(const DecodeFlags& flags, const std::string& report, const std::string& per_image,
                 const std::string& captions_out) {
  const Session s = open_session(flags);
  const Evaluation ev = evaluate(s.models, s.variant, s.records, s.vocab, flags.config(),
                                 flags.greedy, g_threads);
  const std::string line = ev.report.to_json() + "\n";
  if (report.empty() || report == "-") {
    std::cout << line;
  } else {
    write_file_atomic(report, line);
  }
  if (!per_image.empty()) write_file_atomic(per_image, per_image_csv(ev.per_image));
  if (!captions_out.empty()) write_file_atomic(captions_out, captions_tsv(ev.captions));
  return 0;
}

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const long long k = std::stoll(item, &used);
    if (used != item.size() || k < 1) throw std::runtime_error("invalid beam size '" + item + "'");
    out.push_back(static_cast<std::size_t>(k));
  }
  if (out.empty()) throw std::runtime_error("empty --k-list");
  return out;
}

int run_beam_sweep(const DecodeFlags& flags, const std::string& k_list, const std::string& out) {
  const Session s = open_session(flags);
  const auto ks = parse_k_list(k_list);
  const auto rows = beam_sweep(s.models, s.variant, s.records, s.vocab, ks, flags.config(), g_threads);
  const std::string csv = beam_sweep_csv(rows);
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    write_file_atomic(out, csv);
  }
  return 0;
}

int run_gradcheck(const std::string& variant, std::uint64_t seed, std::size_t seeds,
                  const GradCheckOptions& opts) {
  std::vector<Variant> variants;
  if (variant == "all") {
    variants.assign(kAllVariants.begin(), kAllVariants.end());
  } else {
    variants.push_back(parse_variant(variant));
  }
  bool all_pass = true;
  for (Variant v : variants) {
    for (std::size_t s = 0; s < seeds; ++s) {
      const GradCheckReport r = gradient_check(v, seed + s, opts);
      std::printf("%s seed %llu: max_rel_error %.3e %s\n", to_string(v).c_str(),
                  static_cast<unsigned long long>(r.seed), r.max_rel_error, r.passed ? "PASS" : "FAIL");
      for (const auto& b : r.blocks) {
        std::printf("  %-28s %6zu values  max_rel_error %.3e\n", b.name.c_str(), b.size, b.max_rel_error);
      }
      all_pass = all_pass && r.passed;
    }
  }
  std::printf("gradcheck: %s (tolerance %.1e)\n", all_pass ? "PASS" : "FAIL", opts.tolerance);
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute-conditioned LSTM captioners: data, training, decoding, scoring"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--threads", g_threads, "Worker threads")
      ->envname("LSTMA_THREADS")
      ->check(CLI::PositiveNumber);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic caption dataset");
  std::uint64_t gen_seed = 7;
  std::size_t gen_n = 50, gen_dv = 32;
  double attr_noise = 0.0, feature_noise = 0.1;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--n", gen_n, "Number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("--d-v", gen_dv, "Image feature dimension (>= 8)")->check(CLI::Range(8, 1 << 20));
  gen->add_option("--attr-noise", attr_noise, "Blend attributes with uniform noise")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--feature-noise", feature_noise, "Gaussian feature noise sigma")->check(CLI::NonNegativeNumber);
  gen->add_option("--out", gen_out, "Output dataset path")->required();

  // train
  auto* train = app.add_subcommand("train", "Train one model or an ensemble with minibatch SGD");
  TrainFlags tf;
  train->add_option("--data", tf.data, "Dataset (JSON lines)")->required();
  train->add_option("--out", tf.out, "Output prefix for .ckpt, .vocab and .loss.csv");
  train->add_option("--variant", tf.variant, "a1..a5");
  train->add_option("--iters", tf.iters, "SGD iterations");
  train->add_option("--lr", tf.lr, "Learning rate")->check(CLI::NonNegativeNumber);
  train->add_option("--batch", tf.batch, "Minibatch size")->check(CLI::PositiveNumber);
  train->add_option("--clip", tf.clip, "Global gradient-norm clip (0 disables)")->check(CLI::NonNegativeNumber);
  train->add_option("--seed", tf.seed, "Initialization and shuffling seed");
  train->add_option("--embed", tf.embed, "LSTM input size")->check(CLI::PositiveNumber);
  train->add_option("--hidden", tf.hidden, "LSTM hidden size")->check(CLI::PositiveNumber);
  train->add_option("--init-scale", tf.init_scale, "Uniform init half-width")->check(CLI::PositiveNumber);
  train->add_flag("--paper-scale", tf.paper_scale, "1024-unit LSTM and batch 1024");
  train->add_option("--ensemble", tf.ensemble, "Number of independently seeded members")->check(CLI::PositiveNumber);
  train->add_option("--min-count", tf.min_count, "Vocabulary frequency threshold")->check(CLI::PositiveNumber);
  train->add_option("--eval-every", tf.eval_every, "Full-dataset loss every N iterations");
  train->add_option("--lr-decay-every", tf.decay_every, "Step decay interval (0: off)");
  train->add_option("--lr-decay-factor", tf.decay_factor, "Step decay factor");
  train->add_option("--log-every", tf.log_every, "Progress line every N iterations (0: quiet)");
  train->add_flag("--dry-run", tf.dry_run, "Validate the dataset and report sizes only");

  // caption
  auto* caption = app.add_subcommand("caption", "Decode captions for every record");
  DecodeFlags cap_flags;
  std::string cap_out;
  cap_flags.add_to(caption);
  caption->add_option("--out", cap_out, "Output path (default stdout)");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Decode and score BLEU@1-4, ROUGE-L, CIDEr-D");
  DecodeFlags eval_flags;
  std::string report_out, per_image_out, eval_captions_out;
  eval_flags.add_to(eval);
  eval->add_option("--report", report_out, "Single-line JSON report (default stdout)");
  eval->add_option("--per-image", per_image_out, "Per-image score CSV");
  eval->add_option("--captions", eval_captions_out, "Also write decoded captions");

  // beam-sweep
  auto* sweep = app.add_subcommand("beam-sweep", "Score each beam size, raw and max-normalized");
  DecodeFlags sweep_flags;
  std::string k_list = "1,2,3,4,5", sweep_out;
  sweep_flags.add_to(sweep);
  sweep->add_option("--k-list", k_list, "Comma-separated beam sizes");
  sweep->add_option("--out", sweep_out, "Output CSV (default stdout)");

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of the full gradient");
  std::string gc_variant = "all";
  std::uint64_t gc_seed = 1;
  std::size_t gc_seeds = 5;
  GradCheckOptions gc_opts;
  grad->add_option("--variant", gc_variant, "a1..a5 or all");
  grad->add_option("--seed", gc_seed, "First seed");
  grad->add_option("--seeds", gc_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  grad->add_option("--epsilon", gc_opts.epsilon, "Central-difference step");
  grad->add_option("--tolerance", gc_opts.tolerance, "Maximum relative error");
  grad->add_flag("--corrupt-gradient", gc_opts.corrupt_gradient,
                 "Perturb one analytic entry (negative control)")
      ->group("");

  std::vector<std::string> args;
  try {
    std::vector<std::string> names;
    for (const auto* sub : app.get_subcommands([](CLI::App*) { return true; })) {
      names.push_back(sub->get_name());
    }
    args = expand_config(argc, argv, names);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return run_gen_data(gen_seed, gen_n, gen_dv, attr_noise, feature_noise, gen_out);
    if (*train) return run_train(tf);
    if (*caption) return run_caption(cap_flags, cap_out);
    if (*eval) return run_evaluate(eval_flags, report_out, per_image_out, eval_captions_out);
    if (*sweep) return run_beam_sweep(sweep_flags, k_list, sweep_out);
    if (*grad) return run_gradcheck(gc_variant, gc_seed, gc_seeds, gc_opts);
  } catch (const TrainingError& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
