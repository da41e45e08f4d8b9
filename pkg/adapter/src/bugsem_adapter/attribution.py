"""Per-token attribution scores for the positive-class logit.

Four methods, all computed directly on the input embeddings:

* ``saliency``             -- L2 norm of the gradient at each token;
* ``input_x_gradient``     -- sum over hidden dims of embedding * gradient;
* ``integrated_gradients`` -- Riemann approximation along the straight path
  from a zero baseline (16 steps);
* ``occlusion``            -- logit drop when a token's embedding is replaced
  by the padding embedding.

The attribution target is the logit of the positive (vulnerable) class.
"""

from __future__ import annotations

import numpy as np
import torch

POSITIVE_CLASS = 1


def _embeddings(model, input_ids):
    return model.get_input_embeddings()(input_ids)


def _logit(model, embeds):
    return model(inputs_embeds=embeds).logits[:, POSITIVE_CLASS]


def saliency(model, input_ids) -> np.ndarray:
    embeds = _embeddings(model, input_ids).detach().requires_grad_(True)
    _logit(model, embeds).sum().backward()
    return embeds.grad.norm(dim=-1).squeeze(0).detach().cpu().numpy()


def input_x_gradient(model, input_ids) -> np.ndarray:
    embeds = _embeddings(model, input_ids).detach().requires_grad_(True)
    _logit(model, embeds).sum().backward()
    scores = (embeds * embeds.grad).sum(dim=-1)
    return scores.squeeze(0).detach().cpu().numpy()


def integrated_gradients(model, input_ids, steps: int = 16) -> np.ndarray:
    embeds = _embeddings(model, input_ids).detach()
    total = torch.zeros_like(embeds)
    for step in range(1, steps + 1):
        scaled = (embeds * (step / steps)).detach().requires_grad_(True)
        _logit(model, scaled).sum().backward()
        total += scaled.grad
    attr = embeds * total / steps
    return attr.sum(dim=-1).squeeze(0).cpu().numpy()


def occlusion(model, input_ids, batch_size: int = 16) -> np.ndarray:
    embeds = _embeddings(model, input_ids).detach()
    pad_id = model.config.pad_token_id or 0
    pad_vector = model.get_input_embeddings()(
        torch.tensor([pad_id], device=input_ids.device)).detach()
    with torch.no_grad():
        base = _logit(model, embeds).item()
        n = embeds.shape[1]
        scores = np.zeros(n)
        for start in range(0, n, batch_size):
            stop = min(start + batch_size, n)
            batch = embeds.repeat(stop - start, 1, 1).clone()
            for row, pos in enumerate(range(start, stop)):
                batch[row, pos] = pad_vector
            logits = _logit(model, batch)
            scores[start:stop] = base - logits.cpu().numpy()
    return scores


TOOL_FUNCTIONS = {
    "saliency": saliency,
    "input_x_gradient": input_x_gradient,
    "integrated_gradients": integrated_gradients,
    "occlusion": occlusion,
}


def compute_attributions(model, input_ids, tools) -> dict[str, np.ndarray]:
    model.eval()
    out = {}
    for tool in tools:
        try:
            fn = TOOL_FUNCTIONS[tool]
        except KeyError:
            raise ValueError(f"unknown attribution tool: {tool!r}") from None
        out[tool] = np.asarray(fn(model, input_ids), dtype=float)
    return out
