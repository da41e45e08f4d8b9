"""Fine-tuning loop with best-validation-F1 checkpoint selection."""

from __future__ import annotations

import copy
import logging
import math

import torch

log = logging.getLogger(__name__)


def f1_score(labels, predictions, positive=1) -> float:
    tp = sum(1 for y, p in zip(labels, predictions) if y == positive and p == positive)
    fp = sum(1 for y, p in zip(labels, predictions) if y != positive and p == positive)
    fn = sum(1 for y, p in zip(labels, predictions) if y == positive and p != positive)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def _batches(examples, batch_size):
    for start in range(0, len(examples), batch_size):
        yield examples[start:start + batch_size]


def _encode_batch(tokenizer, batch, max_length, device):
    enc = tokenizer([e.text for e in batch], padding=True, truncation=True,
                    max_length=max_length, return_tensors="pt")
    labels = torch.tensor([e.label for e in batch])
    return {k: v.to(device) for k, v in enc.items()}, labels.to(device)


@torch.no_grad()
def evaluate(model, tokenizer, examples, max_length, device, batch_size=8) -> float:
    model.eval()
    labels, predictions = [], []
    for batch in _batches(examples, batch_size):
        enc, y = _encode_batch(tokenizer, batch, max_length, device)
        logits = model(**enc).logits
        predictions.extend(logits.argmax(dim=-1).cpu().tolist())
        labels.extend(y.cpu().tolist())
    return f1_score(labels, predictions)


def finetune(model, tokenizer, examples, epochs=3, batch_size=8,
             learning_rate=5e-4, max_length=512, device="cpu", val_every=5,
             seed=0):
    """Train on all but every ``val_every``-th example; keep the epoch state
    with the best validation F1.  Raises on non-finite loss."""
    torch.manual_seed(seed)
    model.to(device)
    val = [e for i, e in enumerate(examples) if i % val_every == 0]
    train = [e for i, e in enumerate(examples) if i % val_every != 0]
    if not train or not val:
        raise ValueError("corpus too small to split into train and validation")

    optimizer = torch.optim.AdamW(model.parameters(), lr=learning_rate)
    loss_fn = torch.nn.CrossEntropyLoss()
    best_f1 = -1.0
    best_state = None
    for epoch in range(epochs):
        model.train()
        total_loss = 0.0
        for batch in _batches(train, batch_size):
            enc, labels = _encode_batch(tokenizer, batch, max_length, device)
            optimizer.zero_grad()
            logits = model(**enc).logits
            loss = loss_fn(logits, labels)
            if not math.isfinite(loss.item()):
                raise RuntimeError(f"training diverged at epoch {epoch}: loss={loss.item()}")
            loss.backward()
            optimizer.step()
            total_loss += loss.item()
        val_f1 = evaluate(model, tokenizer, val, max_length, device, batch_size)
        log.info("epoch %d: train loss %.4f, val F1 %.4f", epoch, total_loss, val_f1)
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_state = copy.deepcopy(model.state_dict())

    model.load_state_dict(best_state)
    return model, best_f1
