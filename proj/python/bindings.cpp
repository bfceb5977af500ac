#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lstma/checkpoint.hpp"
#include "lstma/data.hpp"
#include "lstma/decoding.hpp"
#include "lstma/evaluate.hpp"
#include "lstma/gradcheck.hpp"
#include "lstma/metrics.hpp"
#include "lstma/training.hpp"
#include "lstma/vocab.hpp"

namespace py = pybind11;
using namespace lstma;

namespace {

std::vector<double> to_list(const Vec& v) { return v.raw(); }

CaptionRecord make_record(std::string id, std::vector<double> features,
                          std::vector<double> attributes, std::vector<std::string> captions) {
  CaptionRecord r;
  r.id = std::move(id);
  r.features.values = Vec(std::move(features));
  r.attributes.probs = Vec(std::move(attributes));
  r.captions = std::move(captions);
  return r;
}

std::vector<EvalPair> make_pairs(const std::vector<std::string>& candidates,
                                 const std::vector<std::vector<std::string>>& references) {
  if (candidates.size() != references.size()) {
    throw std::invalid_argument("candidates and references differ in length");
  }
  std::vector<EvalPair> pairs;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    EvalPair p{std::to_string(i), tokenize(candidates[i]), {}};
    for (const auto& r : references[i]) p.references.push_back(tokenize(r));
    pairs.push_back(std::move(p));
  }
  return pairs;
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  d["bleu1"] = r.bleu1;
  d["bleu2"] = r.bleu2;
  d["bleu3"] = r.bleu3;
  d["bleu4"] = r.bleu4;
  d["rouge_l"] = r.rouge_l;
  d["cider_d"] = r.cider_d;
  return d;
}

}  // namespace

PYBIND11_MODULE(_lstma, m) {
  m.doc() = "Attribute-conditioned LSTM captioners";

  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  py::enum_<Variant>(m, "Variant")
      .value("A1", Variant::A1)
      .value("A2", Variant::A2)
      .value("A3", Variant::A3)
      .value("A4", Variant::A4)
      .value("A5", Variant::A5);
  m.def("parse_variant", &parse_variant, py::arg("name"));
  m.def("encode_length", &encode_length, py::arg("variant"));

  py::enum_<Fusion>(m, "Fusion")
      .value("ARITHMETIC", Fusion::Arithmetic)
      .value("GEOMETRIC", Fusion::Geometric);

  py::class_<ModelDims>(m, "ModelDims")
      .def(py::init([](std::size_t image_dim, std::size_t attr_dim, std::size_t vocab_size,
                       std::size_t embed_dim, std::size_t hidden_dim) {
             ModelDims d{image_dim, attr_dim, vocab_size, embed_dim, hidden_dim};
             d.validate();
             return d;
           }),
           py::arg("image_dim"), py::arg("attr_dim"), py::arg("vocab_size"), py::arg("embed_dim"),
           py::arg("hidden_dim"))
      .def_readonly("image_dim", &ModelDims::image_dim)
      .def_readonly("attr_dim", &ModelDims::attr_dim)
      .def_readonly("vocab_size", &ModelDims::vocab_size)
      .def_readonly("embed_dim", &ModelDims::embed_dim)
      .def_readonly("hidden_dim", &ModelDims::hidden_dim)
      .def("__eq__", &ModelDims::operator==)
      .def("__repr__", &ModelDims::describe);

  // Vocabulary
  m.def("tokenize", &tokenize, py::arg("caption"));
  py::class_<Vocabulary>(m, "Vocabulary")
      .def(py::init<>())
      .def_static("from_tokens", &Vocabulary::from_tokens, py::arg("tokens"))
      .def_static("load", &Vocabulary::load, py::arg("path"))
      .def("save", &Vocabulary::save, py::arg("path"))
      .def("index_of", &Vocabulary::index_of, py::arg("token"))
      .def("token", &Vocabulary::token, py::arg("index"))
      .def("__contains__", &Vocabulary::contains)
      .def("__len__", &Vocabulary::size)
      .def_property_readonly("tokens", &Vocabulary::tokens)
      .def("hash", &Vocabulary::hash);
  m.def("build_vocab", &build_vocab, py::arg("corpus"), py::arg("min_count") = 5);
  m.def("encode", [](const std::string& caption, const Vocabulary& v) { return encode(caption, v).ids; },
        py::arg("caption"), py::arg("vocab"));
  m.def("decode",
        [](const std::vector<std::size_t>& ids, const Vocabulary& v) { return decode({ids}, v); },
        py::arg("ids"), py::arg("vocab"));
  m.attr("BOS") = kBos;
  m.attr("EOS") = kEos;
  m.attr("UNK") = kUnk;

  // Data
  py::class_<CaptionRecord>(m, "CaptionRecord")
      .def(py::init(&make_record), py::arg("id"), py::arg("features"), py::arg("attributes"),
           py::arg("captions"))
      .def_readwrite("id", &CaptionRecord::id)
      .def_property_readonly("features", [](const CaptionRecord& r) { return to_list(r.features.values); })
      .def_property_readonly("attributes", [](const CaptionRecord& r) { return to_list(r.attributes.probs); })
      .def_readwrite("captions", &CaptionRecord::captions);
  m.def(
      "generate_toy_dataset",
      [](std::uint64_t seed, std::size_t count, std::size_t image_dim, double feature_noise,
         double attr_noise) {
        return generate_toy_dataset({seed, count, image_dim, feature_noise, attr_noise});
      },
      py::arg("seed") = 7, py::arg("count") = 50, py::arg("image_dim") = 32,
      py::arg("feature_noise") = 0.1, py::arg("attr_noise") = 0.0);
  m.def("toy_attribute_vocab", [] { return toy_attribute_vocab().tokens; });
  m.def("serialize_dataset", &serialize_dataset, py::arg("records"));
  m.def("parse_dataset", &parse_dataset, py::arg("text"));
  m.def("save_dataset", &save_dataset, py::arg("records"), py::arg("path"));
  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("all_captions", &all_captions, py::arg("records"));

  // Model
  py::class_<CaptionerParams>(m, "CaptionerParams")
      .def(py::init<const ModelDims&>(), py::arg("dims"))
      .def_static("random", &CaptionerParams::random, py::arg("dims"), py::arg("seed"),
                  py::arg("scale") = 0.08)
      .def_property_readonly("dims", &CaptionerParams::dims)
      .def("num_values", &CaptionerParams::num_values)
      .def("blocks",
           [](const CaptionerParams& p) {
             py::dict out;
             for (const auto& b : p.blocks()) {
               out[py::str(std::string(b.name))] =
                   std::vector<double>(b.values.begin(), b.values.end());
             }
             return out;
           })
      .def("__eq__", &CaptionerParams::operator==);

  m.def(
      "forward_loss",
      [](Variant v, const CaptionerParams& p, const std::vector<double>& features,
         const std::vector<double>& attributes, const std::vector<std::size_t>& ids) {
        return forward_loss(v, p, {Vec(features)}, {Vec(attributes)}, {ids});
      },
      py::arg("variant"), py::arg("params"), py::arg("features"), py::arg("attributes"),
      py::arg("ids"));

  py::class_<GradCheckReport>(m, "GradCheckReport")
      .def_readonly("max_rel_error", &GradCheckReport::max_rel_error)
      .def_readonly("passed", &GradCheckReport::passed)
      .def_property_readonly("blocks", [](const GradCheckReport& r) {
        py::dict out;
        for (const auto& b : r.blocks) out[py::str(b.name)] = b.max_rel_error;
        return out;
      });
  m.def(
      "gradient_check",
      [](Variant v, std::uint64_t seed, bool corrupt) {
        GradCheckOptions o;
        o.corrupt_gradient = corrupt;
        return gradient_check(v, seed, o);
      },
      py::arg("variant"), py::arg("seed") = 1, py::arg("corrupt_gradient") = false);

  // Training
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("variant", &TrainConfig::variant)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("max_iters", &TrainConfig::max_iters)
      .def_readwrite("clip_norm", &TrainConfig::clip_norm)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("eval_every", &TrainConfig::eval_every)
      .def_readwrite("embed_dim", &TrainConfig::embed_dim)
      .def_readwrite("hidden_dim", &TrainConfig::hidden_dim)
      .def_readwrite("init_scale", &TrainConfig::init_scale)
      .def_readwrite("lr_decay_every", &TrainConfig::lr_decay_every)
      .def_readwrite("lr_decay_factor", &TrainConfig::lr_decay_factor)
      .def_readwrite("threads", &TrainConfig::threads);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("params", &TrainResult::params)
      .def_readonly("loss_history", &TrainResult::loss_history)
      .def_readonly("initial_dataset_loss", &TrainResult::initial_dataset_loss)
      .def_readonly("final_dataset_loss", &TrainResult::final_dataset_loss);

  m.def(
      "train",
      [](const TrainConfig& c, const std::vector<CaptionRecord>& records, const Vocabulary& vocab) {
        py::gil_scoped_release release;
        return sgd_train(c, records, vocab);
      },
      py::arg("config"), py::arg("records"), py::arg("vocab"));

  m.def(
      "save_checkpoint",
      [](const std::filesystem::path& path, const CaptionerParams& p, Variant v,
         const Vocabulary& vocab, std::uint64_t step) {
        save_checkpoint(path, p, {v, p.dims(), vocab.hash(), step});
      },
      py::arg("path"), py::arg("params"), py::arg("variant"), py::arg("vocab"), py::arg("step") = 0);
  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& path) {
        Checkpoint ck = load_checkpoint(path);
        return py::make_tuple(ck.params, ck.meta.variant, ck.meta.step);
      },
      py::arg("path"));

  // Decoding and scoring
  py::class_<DecodeConfig>(m, "DecodeConfig")
      .def(py::init<>())
      .def_readwrite("beam_size", &DecodeConfig::beam_size)
      .def_readwrite("max_len", &DecodeConfig::max_len)
      .def_readwrite("length_norm", &DecodeConfig::length_norm)
      .def_readwrite("fusion", &DecodeConfig::fusion);

  m.def(
      "caption",
      [](const std::vector<CaptionerParams>& models, Variant v,
         const std::vector<CaptionRecord>& records, const Vocabulary& vocab,
         const DecodeConfig& config, bool greedy) {
        std::vector<std::tuple<std::string, std::string, double>> out;
        for (const auto& c : caption_records(models, v, records, vocab, config, greedy)) {
          out.emplace_back(c.id, c.caption, c.logprob);
        }
        return out;
      },
      py::arg("models"), py::arg("variant"), py::arg("records"), py::arg("vocab"),
      py::arg("config") = DecodeConfig{}, py::arg("greedy") = false);

  m.def(
      "evaluate",
      [](const std::vector<CaptionerParams>& models, Variant v,
         const std::vector<CaptionRecord>& records, const Vocabulary& vocab,
         const DecodeConfig& config, bool greedy) {
        return report_dict(evaluate(models, v, records, vocab, config, greedy).report);
      },
      py::arg("models"), py::arg("variant"), py::arg("records"), py::arg("vocab"),
      py::arg("config") = DecodeConfig{}, py::arg("greedy") = false);

  m.def(
      "beam_sweep",
      [](const std::vector<CaptionerParams>& models, Variant v,
         const std::vector<CaptionRecord>& records, const Vocabulary& vocab,
         const std::vector<std::size_t>& ks) {
        return beam_sweep_csv(beam_sweep(models, v, records, vocab, ks, DecodeConfig{}));
      },
      py::arg("models"), py::arg("variant"), py::arg("records"), py::arg("vocab"),
      py::arg("beam_sizes") = std::vector<std::size_t>{1, 2, 3, 4, 5});

  m.def(
      "score",
      [](const std::vector<std::string>& candidates,
         const std::vector<std::vector<std::string>>& references) {
        return report_dict(score_corpus(make_pairs(candidates, references)));
      },
      py::arg("candidates"), py::arg("references"));
}
