"""Adapter configuration."""

from __future__ import annotations

from dataclasses import dataclass


DEFAULT_TOOLS = ("saliency", "input_x_gradient", "integrated_gradients", "occlusion")


@dataclass
class AdapterConfig:
    model: str = "tiny-random"        # checkpoint directory, or tiny-random
    corpus: str = ""
    out_dir: str = ""
    context_length: int = 512
    tools: tuple = DEFAULT_TOOLS
    device: str = "cpu"
    seed: int = 0
    # architecture for tiny-random models
    vocab_size: int = 2048
    hidden_size: int = 32
    num_layers: int = 2
    num_heads: int = 2
    intermediate_size: int = 64
    # fine-tuning
    epochs: int = 3
    batch_size: int = 8
    learning_rate: float = 5e-4
    val_every: int = 5                # every n-th example goes to validation
    # annotation sentinels, matching the toolkit defaults
    bos: str = "[BOS]"
    eos: str = "[EOS]"
    separator: str = "[SEP]"
    markers: tuple = ("<vul-b>", "<vul-e>")
