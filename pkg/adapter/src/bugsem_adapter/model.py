"""Classifier construction: local checkpoints or a small random model.

Attention is forced to the eager implementation because fused kernels do not
expose the per-head attention probabilities the dumps need.
"""

from __future__ import annotations

import torch
from transformers import RobertaConfig, RobertaForSequenceClassification


def build_tiny_model(vocab_size, hidden_size=32, num_layers=2, num_heads=2,
                     intermediate_size=64, max_length=512, pad_token_id=0, seed=0):
    torch.manual_seed(seed)
    config = RobertaConfig(
        vocab_size=vocab_size,
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=intermediate_size,
        max_position_embeddings=max_length + 2,   # roberta position offset
        pad_token_id=pad_token_id,
        num_labels=2,
        attn_implementation="eager",
    )
    return RobertaForSequenceClassification(config)


def load_checkpoint(path):
    return RobertaForSequenceClassification.from_pretrained(
        path, attn_implementation="eager")


def resize_for_new_tokens(model, tokenizer):
    """Grow the embedding matrix when sentinels were added to the vocabulary;
    new rows are randomly initialized and trained during fine-tuning."""
    if len(tokenizer) > model.get_input_embeddings().weight.shape[0]:
        model.resize_token_embeddings(len(tokenizer))
    return model
