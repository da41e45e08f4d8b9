"""Adapter CLI: dump model internals, fine-tune on annotated corpora."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import DEFAULT_TOOLS, AdapterConfig
from .data import load_examples
from .dumping import dump_corpus
from .finetune import finetune
from .model import build_tiny_model, load_checkpoint, resize_for_new_tokens
from .tokenization import load_tokenizer, train_tokenizer

log = logging.getLogger("bugsem_adapter")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bugsem-adapter",
        description="Dump transformer internals / fine-tune on annotated corpora")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--corpus", required=True,
                       help="normalized corpus or annotated dataset (JSON lines)")
        p.add_argument("--model", default="tiny-random",
                       help="checkpoint directory, or 'tiny-random'")
        p.add_argument("--context-length", type=int, default=512)
        p.add_argument("--device", default="cpu")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--vocab-size", type=int, default=2048)
        p.add_argument("--hidden-size", type=int, default=32)
        p.add_argument("--layers", type=int, default=2)
        p.add_argument("--heads", type=int, default=2)

    p_dump = sub.add_parser("dump", help="write attention/attribution dumps")
    common(p_dump)
    p_dump.add_argument("--out", required=True, help="dump directory")
    p_dump.add_argument("--tools", default=",".join(DEFAULT_TOOLS))

    p_ft = sub.add_parser("finetune", help="train and save the best checkpoint")
    common(p_ft)
    p_ft.add_argument("--out-dir", required=True)
    p_ft.add_argument("--epochs", type=int, default=3)
    p_ft.add_argument("--batch-size", type=int, default=8)
    p_ft.add_argument("--lr", type=float, default=5e-4)
    return parser


def _prepare(config: AdapterConfig, examples):
    """Model + tokenizer pair for a checkpoint path or a fresh tiny model."""
    if config.model != "tiny-random":
        tokenizer = load_tokenizer(config.model)
        model = load_checkpoint(config.model)
        return model, tokenizer
    needs_markers = any(e.mode == "mark" for e in examples)
    extra = list(config.markers) + [config.separator] if needs_markers \
        else [config.separator]
    tokenizer = train_tokenizer([e.text for e in examples],
                                vocab_size=config.vocab_size, extra_specials=extra)
    model = build_tiny_model(
        vocab_size=len(tokenizer),
        hidden_size=config.hidden_size,
        num_layers=config.num_layers,
        num_heads=config.num_heads,
        intermediate_size=config.intermediate_size,
        max_length=config.context_length,
        pad_token_id=tokenizer.pad_token_id,
        seed=config.seed,
    )
    return resize_for_new_tokens(model, tokenizer), tokenizer


def cmd_dump(config: AdapterConfig, out: str, tools) -> int:
    examples = load_examples(config.corpus, bos=config.bos, eos=config.eos)
    model, tokenizer = _prepare(config, examples)
    model.to(config.device)
    written = dump_corpus(model, tokenizer, examples, out, tools,
                          max_length=config.context_length, device=config.device)
    log.info("wrote %d dumps to %s", written, out)
    return 0 if written else 1


def cmd_finetune(config: AdapterConfig) -> int:
    examples = load_examples(config.corpus, bos=config.bos, eos=config.eos)
    model, tokenizer = _prepare(config, examples)
    model, best_f1 = finetune(
        model, tokenizer, examples,
        epochs=config.epochs, batch_size=config.batch_size,
        learning_rate=config.learning_rate, max_length=config.context_length,
        device=config.device, val_every=config.val_every, seed=config.seed)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    log.info("saved checkpoint with val F1 %.4f to %s", best_f1, out_dir)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    config = AdapterConfig(
        model=args.model,
        corpus=args.corpus,
        context_length=args.context_length,
        device=args.device,
        seed=args.seed,
        vocab_size=args.vocab_size,
        hidden_size=args.hidden_size,
        num_layers=args.layers,
        num_heads=args.heads,
    )
    if args.command == "dump":
        tools = tuple(t.strip() for t in args.tools.split(",") if t.strip())
        return cmd_dump(config, args.out, tools)
    if args.command == "finetune":
        config.out_dir = args.out_dir
        config.epochs = args.epochs
        config.batch_size = args.batch_size
        config.learning_rate = args.lr
        return cmd_finetune(config)
    return 1


if __name__ == "__main__":
    sys.exit(main())
