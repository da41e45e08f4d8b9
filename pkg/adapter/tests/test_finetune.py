import pytest
import torch

from bugsem_adapter.cli import main
from bugsem_adapter.data import load_examples
from bugsem_adapter.finetune import f1_score, finetune
from bugsem_adapter.model import build_tiny_model, load_checkpoint
from bugsem_adapter.tokenization import load_tokenizer, train_tokenizer

from conftest import make_smoke_corpus


def test_f1_score_by_hand():
    labels = [1, 1, 0, 0, 1]
    preds = [1, 0, 0, 1, 1]
    # tp=2 fp=1 fn=1 -> precision 2/3, recall 2/3 -> f1 2/3
    assert f1_score(labels, preds) == pytest.approx(2 / 3)
    assert f1_score([0, 0], [0, 0]) == 0.0


def test_smoke_training_runs(tmp_path):
    corpus = make_smoke_corpus(tmp_path / "c.jsonl", 50)
    examples = load_examples(corpus)
    tokenizer = train_tokenizer([e.text for e in examples], vocab_size=512)
    model = build_tiny_model(vocab_size=len(tokenizer),
                             pad_token_id=tokenizer.pad_token_id, seed=1)
    model, best_f1 = finetune(model, tokenizer, examples, epochs=1,
                              batch_size=8, val_every=5, seed=1)
    assert 0.0 <= best_f1 <= 1.0


def test_finetune_cli_saves_loadable_checkpoint(tmp_path):
    corpus = make_smoke_corpus(tmp_path / "c.jsonl", 50)
    out_dir = tmp_path / "ckpt"
    code = main(["finetune", "--corpus", str(corpus), "--out-dir", str(out_dir),
                 "--epochs", "1", "--vocab-size", "512"])
    assert code == 0
    model = load_checkpoint(out_dir)
    tokenizer = load_tokenizer(out_dir)
    enc = tokenizer("int f ( ) { return 1 ; }", return_tensors="pt")
    with torch.no_grad():
        out = model(**enc, output_attentions=True)
    assert out.logits.shape == (1, 2)
    assert len(out.attentions) == 2


def test_mark_mode_grows_vocab_by_two(tmp_path):
    corpus = make_smoke_corpus(tmp_path / "c.jsonl", 20)
    examples = load_examples(corpus)
    texts = [e.text for e in examples]
    base = train_tokenizer(texts, vocab_size=512, extra_specials=("[SEP]",))
    marked = train_tokenizer(texts, vocab_size=512,
                             extra_specials=("<vul-b>", "<vul-e>", "[SEP]"))
    assert len(marked) == len(base) + 2
    model = build_tiny_model(vocab_size=len(base), pad_token_id=base.pad_token_id)
    from bugsem_adapter.model import resize_for_new_tokens
    resized = resize_for_new_tokens(model, marked)
    assert resized.get_input_embeddings().weight.shape[0] == len(marked)


def test_training_divergence_detected(tmp_path):
    corpus = make_smoke_corpus(tmp_path / "c.jsonl", 20)
    examples = load_examples(corpus)
    tokenizer = train_tokenizer([e.text for e in examples], vocab_size=512)
    model = build_tiny_model(vocab_size=len(tokenizer),
                             pad_token_id=tokenizer.pad_token_id)
    # blow up the loss by poisoning the classifier weights
    with torch.no_grad():
        model.classifier.out_proj.weight.fill_(float("nan"))
    with pytest.raises(RuntimeError, match="diverged"):
        finetune(model, tokenizer, examples, epochs=1, val_every=5)
