"""Byte-level BPE tokenizer built from the corpus at hand.

No pretrained vocabulary is assumed: for tiny-random models the tokenizer is
trained on the corpus texts, which keeps the whole pipeline runnable offline.
Marker/separator sentinels are registered as special tokens so annotated
inputs keep them atomic.
"""

from __future__ import annotations

from tokenizers import Tokenizer, models, pre_tokenizers, processors, trainers
from transformers import PreTrainedTokenizerFast

BASE_SPECIALS = ("[PAD]", "[UNK]", "[BOS]", "[EOS]", "[SEP]")


def train_tokenizer(texts, vocab_size=2048, extra_specials=()) -> PreTrainedTokenizerFast:
    tokenizer = Tokenizer(models.BPE(unk_token="[UNK]"))
    tokenizer.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    specials = list(BASE_SPECIALS) + [s for s in extra_specials if s not in BASE_SPECIALS]
    trainer = trainers.BpeTrainer(vocab_size=vocab_size, special_tokens=specials)
    tokenizer.train_from_iterator(texts, trainer)
    tokenizer.post_processor = processors.TemplateProcessing(
        single="[BOS] $A [EOS]",
        pair="[BOS] $A [EOS] $B [EOS]",
        special_tokens=[("[BOS]", tokenizer.token_to_id("[BOS]")),
                        ("[EOS]", tokenizer.token_to_id("[EOS]"))],
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        pad_token="[PAD]", unk_token="[UNK]",
        bos_token="[BOS]", eos_token="[EOS]", sep_token="[SEP]",
    )
    if extra_specials:
        fast.add_special_tokens({"additional_special_tokens": list(extra_specials)})
    return fast


def load_tokenizer(path) -> PreTrainedTokenizerFast:
    return PreTrainedTokenizerFast.from_pretrained(path)


def encode_with_spans(tokenizer, text, max_length=512):
    """Token ids plus half-open character spans (None for special tokens)."""
    enc = tokenizer(text, truncation=True, max_length=max_length,
                    return_offsets_mapping=True, return_special_tokens_mask=True)
    spans = []
    for (start, end), special in zip(enc["offset_mapping"], enc["special_tokens_mask"]):
        spans.append(None if special or end <= start else (start, end))
    tokens = tokenizer.convert_ids_to_tokens(enc["input_ids"])
    return enc["input_ids"], tokens, spans
