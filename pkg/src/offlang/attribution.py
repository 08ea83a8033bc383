"""Token-level attribution via Integrated Gradients, plus error surfacing.

For an input embedding sequence x and a baseline x', each embedding coordinate
is attributed (x - x') times the path integral of the model-output gradient
along the straight line from x' to x, approximated with a midpoint Riemann sum
over ``num_steps`` points. A token's score is the sum over its embedding
coordinates; positive scores push the prediction toward OFFENSIVE.

Conventions (not dictated by the method itself, so fixed here): the
attribution target F is the pre-sigmoid logit, and the baseline is the
padding-token embedding at every non-special position. The completeness
identity sum(scores) = F(x) - F(x') is tracked as an explicit residual; on
models linear in the embeddings the midpoint sum is exact for any step count.

Attribution runs on a double-precision copy of the model by default so the
recorded residual reflects quadrature error rather than float32 noise. Runs
are read-only over the checkpoint and safe to execute concurrently.
"""

from __future__ import annotations

import copy
import html as html_lib
from dataclasses import dataclass
from typing import Sequence

import torch

from .classifier import Checkpoint, predict_proba
from .corpus import Label, LabeledExample
from .errors import ContractError, DivergenceError

_CHUNK = 64


@dataclass(frozen=True)
class AttributionConfig:
    num_steps: int = 50
    baseline_kind: str = "pad_embedding_sequence"
    completeness_tolerance: float = 1e-2
    compute_dtype: str = "float64"

    def __post_init__(self):
        if self.num_steps < 2:
            raise ContractError("num_steps must be >= 2")
        if self.completeness_tolerance <= 0:
            raise ContractError("completeness_tolerance must be > 0")
        if self.baseline_kind != "pad_embedding_sequence":
            raise ContractError(f"unsupported baseline kind {self.baseline_kind!r}")
        if self.compute_dtype not in ("float32", "float64"):
            raise ContractError(f"unsupported compute dtype {self.compute_dtype!r}")


@dataclass(frozen=True)
class AttributionResult:
    """Signed per-token importance for one example.

    `tokens`/`scores` are surface words (subword pieces summed into their
    parent word); the raw per-piece view is kept alongside. `target_value`
    and `baseline_target_value` are the pre-sigmoid logits the completeness
    residual is measured against.
    """

    tokens: tuple[str, ...]
    scores: tuple[float, ...]
    prediction: float
    baseline_prediction: float
    completeness_residual: float
    target_value: float
    baseline_target_value: float
    piece_tokens: tuple[str, ...]
    piece_scores: tuple[float, ...]
    num_steps: int
    example_id: str = ""
    gold_label: Label | None = None

    def __post_init__(self):
        if len(self.tokens) != len(self.scores):
            raise ContractError("tokens and scores must have equal length")
        if len(self.piece_tokens) != len(self.piece_scores):
            raise ContractError("piece tokens and scores must have equal length")


def _resolve_model(model) -> tuple[torch.nn.Module, object, int]:
    if isinstance(model, Checkpoint):
        module, tokenizer = model.materialize()
        return module, tokenizer, model.model_config.max_sequence_length
    return model.module, model.tokenizer, model.max_sequence_length


def integrated_gradients(
    model, example: LabeledExample, config: AttributionConfig | None = None
) -> AttributionResult:
    """Attribute one example's pre-sigmoid logit to its tokens.

    `model` is a Checkpoint or any handle exposing ``module``, ``tokenizer``
    and ``max_sequence_length``.
    """
    config = config or AttributionConfig()
    module, tokenizer, max_length = _resolve_model(model)
    encoding = tokenizer.encode(example.text, max_length)
    if not encoding.ids:
        raise ContractError(f"example {example.id!r} produced no tokens")

    dtype = torch.float64 if config.compute_dtype == "float64" else torch.float32
    work = copy.deepcopy(module).to(dtype)
    work.eval()
    for param in work.parameters():
        param.requires_grad_(False)

    ids = torch.tensor([encoding.ids], dtype=torch.long)
    mask = torch.ones_like(ids, dtype=torch.bool)
    baseline_ids = torch.tensor(
        [
            [
                tok_id if word is None else tokenizer.pad_id
                for tok_id, word in zip(encoding.ids, encoding.word_ids)
            ]
        ],
        dtype=torch.long,
    )

    x = work.embed_ids(ids)
    x_base = work.embed_ids(baseline_ids)
    delta = x - x_base

    grad_sum = torch.zeros_like(x)
    steps = config.num_steps
    alphas = (torch.arange(steps, dtype=dtype) + 0.5) / steps
    for start in range(0, steps, _CHUNK):
        chunk = alphas[start : start + _CHUNK]
        points = x_base + chunk[:, None, None] * delta
        points = points.detach().requires_grad_(True)
        outputs = work.forward_embedded(points, mask.expand(len(chunk), -1), rng=None)
        grads = torch.autograd.grad(outputs.sum(), points)[0]
        if not torch.isfinite(grads).all():
            finite_rows = torch.isfinite(grads).reshape(len(chunk), -1).all(dim=1)
            bad = int(torch.nonzero(~finite_rows)[0])
            raise DivergenceError(
                f"non-finite gradient at integration step {start + bad}",
                step=start + bad,
            )
        grad_sum += grads.sum(dim=0, keepdim=True)

    attribution = (delta * grad_sum / steps)[0]  # (positions, embedding dim)
    piece_scores = attribution.sum(dim=-1)

    with torch.no_grad():
        target = float(work.forward_embedded(x, mask, rng=None)[0])
        baseline_target = float(work.forward_embedded(x_base, mask, rng=None)[0])

    word_scores = [0.0] * len(encoding.words)
    for position, word in enumerate(encoding.word_ids):
        if word is not None:
            word_scores[word] += float(piece_scores[position])

    total = float(piece_scores.sum())
    residual = abs(total - (target - baseline_target))
    return AttributionResult(
        tokens=encoding.words,
        scores=tuple(word_scores),
        prediction=float(torch.sigmoid(torch.tensor(target))),
        baseline_prediction=float(torch.sigmoid(torch.tensor(baseline_target))),
        completeness_residual=residual,
        target_value=target,
        baseline_target_value=baseline_target,
        piece_tokens=encoding.pieces,
        piece_scores=tuple(float(s) for s in piece_scores),
        num_steps=steps,
        example_id=example.id,
        gold_label=example.label,
    )


def completeness_residual(result: AttributionResult) -> float:
    """The stored gap |sum(scores) - (F(input) - F(baseline))|."""
    return result.completeness_residual


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _intensities(scores: Sequence[float]) -> list[float]:
    peak = max((abs(s) for s in scores), default=0.0)
    if peak == 0.0:
        return [0.0] * len(scores)
    return [s / peak for s in scores]


def _rgb(signed_intensity: float) -> tuple[int, int, int]:
    # red toward offensive, green toward not offensive
    level = int(round(200 * abs(signed_intensity)))
    if signed_intensity > 0:
        return (255, 255 - level, 255 - level)
    if signed_intensity < 0:
        return (255 - level, 255, 255 - level)
    return (255, 255, 255)


def _header_lines(result: AttributionResult) -> list[str]:
    lines = [
        f"prediction p(offensive) = {result.prediction:.4f} "
        f"(baseline {result.baseline_prediction:.4f})",
        f"completeness residual = {result.completeness_residual:.3e} "
        f"over {result.num_steps} steps",
    ]
    if result.gold_label is not None:
        lines.insert(0, f"example {result.example_id or '-'} gold={result.gold_label.value}")
    return lines


def render_importance(
    result: AttributionResult, format: str = "terminal", color: bool = True
) -> str:
    """Render one attribution as a colored token strip.

    Token intensity is |score| normalized by the maximum absolute score; red
    pushes toward OFFENSIVE, green toward NOT_OFFENSIVE. The terminal format
    uses ANSI colors unless ``color=False``, which falls back to inline
    ``token[+x.xxx]`` annotations. Output is a pure function of `result`.
    """
    if format == "terminal":
        return _render_terminal(result, color)
    if format == "html":
        return render_html_report([result])
    raise ContractError(f"unknown render format {format!r}")


def _render_terminal(result: AttributionResult, color: bool) -> str:
    lines = _header_lines(result)
    pieces = []
    for token, intensity, score in zip(
        result.tokens, _intensities(result.scores), result.scores
    ):
        if color:
            r, g, b = _rgb(intensity)
            pieces.append(f"\x1b[48;2;{r};{g};{b}m\x1b[30m{token}\x1b[0m")
        else:
            pieces.append(f"{token}[{score:+.3f}]")
    lines.append(" ".join(pieces))
    return "\n".join(lines) + "\n"


def _html_section(result: AttributionResult) -> str:
    spans = []
    for token, intensity, score in zip(
        result.tokens, _intensities(result.scores), result.scores
    ):
        r, g, b = _rgb(intensity)
        spans.append(
            f'<span class="tok" style="background-color: rgb({r},{g},{b})" '
            f'title="{score:+.6f}">{html_lib.escape(token)}</span>'
        )
    header = "<br>".join(html_lib.escape(line) for line in _header_lines(result))
    return (
        '<section class="example">\n'
        f"<p>{header}</p>\n"
        f'<p class="tokens">{" ".join(spans)}</p>\n'
        "</section>"
    )


_HTML_STYLE = (
    "body { font-family: sans-serif; margin: 2em; }\n"
    ".tok { padding: 1px 3px; margin: 1px; border-radius: 3px; color: #000; }\n"
    "section.example { margin-bottom: 1.5em; border-bottom: 1px solid #ddd; }\n"
)


def render_html_report(results: Sequence[AttributionResult]) -> str:
    """Standalone HTML document with one section per attribution result."""
    sections = "\n".join(_html_section(r) for r in results)
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8">\n'
        "<title>Token importance</title>\n"
        f"<style>\n{_HTML_STYLE}</style>\n</head>\n<body>\n"
        "<h1>Token importance</h1>\n"
        f"{sections}\n"
        "</body>\n</html>\n"
    )


# ---------------------------------------------------------------------------
# Error surfacing
# ---------------------------------------------------------------------------

def collect_false_positives(
    checkpoint: Checkpoint, corpus_split: Sequence[LabeledExample], limit: int
) -> tuple[tuple[LabeledExample, float], ...]:
    """Examples with gold NOT_OFFENSIVE predicted OFFENSIVE, most confident
    first, truncated to `limit`. An empty result is valid."""
    if limit < 0:
        raise ContractError("limit must be >= 0")
    split = tuple(corpus_split)
    if not split or limit == 0:
        return ()
    predictions = predict_proba(checkpoint, split)
    hits = [
        (ex, prob)
        for ex, prob, label in zip(split, predictions.probabilities, predictions.labels)
        if ex.label is Label.NOT_OFFENSIVE and label is Label.OFFENSIVE
    ]
    hits.sort(key=lambda pair: -pair[1])
    return tuple(hits[:limit])
