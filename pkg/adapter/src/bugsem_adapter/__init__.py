"""Transformer instrumentation producing dumps for the analysis toolkit."""

from .config import AdapterConfig
from .data import Example, load_examples
from .dumping import dump_corpus, dump_example, read_attention_file, write_attention_file
from .finetune import f1_score, finetune
from .model import build_tiny_model, load_checkpoint
from .tokenization import encode_with_spans, load_tokenizer, train_tokenizer

__version__ = "0.1.0"
