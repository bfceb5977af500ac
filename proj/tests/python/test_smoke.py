import math

import pytest

import lstma


@pytest.fixture(scope="module")
def toy():
    records = lstma.generate_toy_dataset(seed=7, count=12)
    vocab = lstma.build_vocab(lstma.all_captions(records), min_count=1)
    return records, vocab


def test_vocab_and_tokens(toy):
    _, vocab = toy
    assert vocab.tokens[:3] == ["<bos>", "<eos>", "<unk>"]
    ids = lstma.encode("A red ball.", vocab)
    assert ids[0] == lstma.BOS and ids[-1] == lstma.EOS
    assert lstma.decode(ids, vocab) == "a red ball"
    assert lstma.tokenize("a  man,  a dog") == ["a", "man", "a", "dog"]


def test_dataset_round_trip(toy, tmp_path):
    records, _ = toy
    path = tmp_path / "toy.jsonl"
    lstma.save_dataset(records, path)
    back = lstma.load_dataset(path)
    assert [r.id for r in back] == [r.id for r in records]
    assert back[0].features == records[0].features
    assert len(records[0].attributes) == len(lstma.toy_attribute_vocab())


def test_uniform_loss_and_gradcheck():
    dims = lstma.ModelDims(7, 5, 12, 6, 6)
    params = lstma.CaptionerParams(dims)
    ids = [lstma.BOS, 4, 5, lstma.EOS]
    for v in (lstma.Variant.A1, lstma.Variant.A5):
        loss = lstma.forward_loss(v, params, [0.1] * 7, [0.5] * 5, ids)
        assert abs(loss - 3 * math.log(12)) < 1e-9
    report = lstma.gradient_check(lstma.Variant.A2, seed=3)
    assert report.passed and report.max_rel_error < 1e-4
    assert not lstma.gradient_check(lstma.Variant.A2, seed=3, corrupt_gradient=True).passed


def test_train_decode_score(toy, tmp_path):
    records, vocab = toy
    cfg = lstma.TrainConfig()
    cfg.variant = lstma.Variant.A3
    cfg.embed_dim = cfg.hidden_dim = 16
    cfg.max_iters = 60
    result = lstma.train(cfg, records, vocab)
    assert len(result.loss_history) == 60
    assert result.final_dataset_loss < result.initial_dataset_loss

    ckpt = tmp_path / "m.ckpt"
    lstma.save_checkpoint(ckpt, result.params, cfg.variant, vocab, 60)
    params, variant, step = lstma.load_checkpoint(ckpt)
    assert params == result.params and variant == cfg.variant and step == 60

    beam1 = lstma.DecodeConfig()
    beam1.beam_size = 1
    greedy = lstma.caption([params], variant, records, vocab, beam1, greedy=True)
    beam = lstma.caption([params], variant, records, vocab, beam1)
    assert greedy == beam

    report = lstma.evaluate([params], variant, records, vocab)
    assert set(report) == {"bleu1", "bleu2", "bleu3", "bleu4", "rouge_l", "cider_d"}
    csv = lstma.beam_sweep([params], variant, records, vocab, [1, 2])
    assert csv.splitlines()[0].startswith("k,bleu1")
    assert len(csv.splitlines()) == 3


def test_metrics():
    refs = [["a red ball on a blue box"], ["two dogs run across the green field"]]
    report = lstma.score([r[0] for r in refs], refs)
    assert abs(report["bleu4"] - 1.0) < 1e-9
    assert abs(report["cider_d"] - 10.0) < 1e-9
    clipped = lstma.score(["the the the the"], [["the cat"]])
    assert abs(clipped["bleu1"] - 0.25) < 1e-12


def test_errors():
    with pytest.raises(ValueError):
        lstma.ModelDims(7, 5, 3, 6, 6)
    with pytest.raises(ValueError):
        lstma.parse_variant("a9")
