"""Composite training loss on model scores: a numeric oracle, no autograd.

For every tube-sentence pair the model emits a matching probability, a
two-class gender distribution, per-frame in-span probabilities and per-frame
predicted boundary distances.  The total loss combines a focal matching term
with gender cross-entropy, frame cross-entropy and a 1-D interval-IoU
regression term; the last three are gated on the tube being a positive
match, and the regression term runs only over positive frames.

Closed-form derivatives with respect to the probability / distance inputs
are provided so downstream training code can be validated against finite
differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import MalformedInputError
from .grounding import FrameTargets
from .text_attributes import Gender

PROB_EPS = 1e-7
MAX_REG_LOSS = -math.log(PROB_EPS)

GENDER_CLASS_INDEX = {Gender.FEMALE: 0, Gender.MALE: 1}


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    lambda4: float = 1.0
    focal_gamma: float = 2.0
    focal_alpha: float = 0.25

    def __post_init__(self) -> None:
        for name in ("lambda1", "lambda2", "lambda3", "lambda4", "focal_gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise MalformedInputError(f"{name} must be finite and nonnegative, got {v}")
        if not 0.0 <= self.focal_alpha <= 1.0:
            raise MalformedInputError(f"focal_alpha must be in [0,1], got {self.focal_alpha}")


@dataclass(frozen=True)
class ScorePack:
    """Model outputs for one tube: matching prob, gender probs, per-frame scores."""

    gl: float
    ge: tuple[float, float]  # (p_female, p_male)
    cls: tuple[float, ...]
    reg: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not 0.0 <= self.gl <= 1.0:
            raise MalformedInputError(f"gl must be in [0,1], got {self.gl}")
        if len(self.ge) != 2 or any(not 0.0 <= g <= 1.0 for g in self.ge):
            raise MalformedInputError(f"ge must be two probabilities, got {self.ge}")
        if abs(sum(self.ge) - 1.0) > 1e-6:
            raise MalformedInputError(f"gender probabilities must sum to 1, got {self.ge}")
        if any(not 0.0 <= c <= 1.0 for c in self.cls):
            raise MalformedInputError("cls entries must be in [0,1]")
        if len(self.reg) != len(self.cls):
            raise MalformedInputError(
                f"reg length {len(self.reg)} != cls length {len(self.cls)}"
            )
        for ds, de in self.reg:
            if not (math.isfinite(ds) and math.isfinite(de) and ds >= 0 and de >= 0):
                raise MalformedInputError(f"reg distances must be finite and >= 0, got {(ds, de)}")


@dataclass(frozen=True)
class LabelPack:
    """Ground-truth labels for one tube; ``ge=None`` excludes the gender term."""

    gl: int
    ge: Optional[Gender]
    targets: FrameTargets

    def __post_init__(self) -> None:
        if self.gl not in (0, 1):
            raise MalformedInputError(f"gl label must be 0 or 1, got {self.gl}")
        if self.ge is Gender.UNKNOWN:
            # An unstated gender carries no supervision signal.
            object.__setattr__(self, "ge", None)
        if self.ge is not None and self.ge not in GENDER_CLASS_INDEX:
            raise MalformedInputError(f"ge label must be a gender, got {self.ge}")
        if self.targets.num_frames < 1:
            raise MalformedInputError("label pack needs at least one frame")
        if self.gl == 1 and self.targets.num_positive < 1:
            raise MalformedInputError("positive tube must have at least one positive frame")

    @property
    def n(self) -> int:
        return self.targets.num_frames

    @property
    def n_pos(self) -> int:
        return self.targets.num_positive


def _clamp(p: float) -> float:
    return min(max(p, PROB_EPS), 1.0 - PROB_EPS)


def bce(p: float, y: int) -> float:
    """Binary cross-entropy with probability clamping."""
    p = _clamp(p)
    return -math.log(p) if y == 1 else -math.log(1.0 - p)


def focal_loss(p: float, y: int, gamma: float, alpha: float) -> float:
    """Focal loss on a probability; reduces to ``0.5 * bce`` at gamma=0, alpha=0.5."""
    p = _clamp(p)
    if y == 1:
        return -alpha * (1.0 - p) ** gamma * math.log(p)
    return -(1.0 - alpha) * p**gamma * math.log(1.0 - p)


def focal_loss_grad(p: float, y: int, gamma: float, alpha: float) -> float:
    """d focal_loss / d p inside the clamp interval."""
    p = _clamp(p)
    if y == 1:
        return alpha * gamma * (1.0 - p) ** (gamma - 1.0) * math.log(p) - alpha * (
            1.0 - p
        ) ** gamma / p
    return -(1.0 - alpha) * gamma * p ** (gamma - 1.0) * math.log(1.0 - p) + (
        1.0 - alpha
    ) * p**gamma / (1.0 - p)


def gender_ce(probs: tuple[float, float], truth: Gender) -> float:
    return -math.log(_clamp(probs[GENDER_CLASS_INDEX[truth]]))


def _interval_inter_union(
    pred: tuple[float, float], target: tuple[float, float]
) -> tuple[float, float]:
    ds, de = pred
    ts, te = target
    inter = min(ds, ts) + min(de, te)
    union = max(ds, ts) + max(de, te)
    return inter, union


def iou_reg_loss(pred: tuple[float, float], target: tuple[float, float]) -> float:
    """-ln of the 1-D IoU of two boundary-distance intervals around one frame.

    Intervals are [t - start_distance, t + end_distance]; both share the
    anchor frame t, so the IoU depends only on the distances.  An empty
    intersection is capped at ``-ln(eps)`` instead of infinity.
    """
    ts, te = target
    if ts + te <= 0.0:
        raise MalformedInputError("target interval has zero length")
    inter, union = _interval_inter_union(pred, target)
    ratio = max(inter / union, PROB_EPS)
    return -math.log(ratio)


def iou_reg_loss_grad(
    pred: tuple[float, float], target: tuple[float, float]
) -> tuple[float, float]:
    """Gradient of ``iou_reg_loss`` in (start_distance, end_distance).

    At a tie between predicted and target distance the averaged subgradient
    is returned, which is what central finite differences produce there.
    """
    ds, de = pred
    ts, te = target
    inter, union = _interval_inter_union(pred, target)
    if inter / union <= PROB_EPS:
        return (0.0, 0.0)

    def _branch(x: float, t: float) -> tuple[float, float]:
        # (d inter / d x, d union / d x)
        if x < t:
            return 1.0, 0.0
        if x > t:
            return 0.0, 1.0
        return 0.5, 0.5

    di_ds, du_ds = _branch(ds, ts)
    di_de, du_de = _branch(de, te)
    return (du_ds / union - di_ds / inter, du_de / union - di_de / inter)


@dataclass(frozen=True)
class LossBreakdown:
    """Weighted loss terms summed over tubes; ``total`` is their sum."""

    global_term: float
    gender: float
    frame_cls: float
    frame_reg: float

    @property
    def total(self) -> float:
        return self.global_term + self.gender + self.frame_cls + self.frame_reg

    def as_dict(self) -> dict:
        return {
            "global": self.global_term,
            "gender": self.gender,
            "frame_cls": self.frame_cls,
            "frame_reg": self.frame_reg,
            "total": self.total,
        }


def baseline_variant_loss(
    scores: Sequence[ScorePack],
    labels: Sequence[LabelPack],
    weights: LossWeights = LossWeights(),
    use_focal: bool = True,
    use_gender: bool = True,
) -> LossBreakdown:
    """Total loss with the ablation switches exposed.

    ``use_focal=False`` scores the matching term with plain binary
    cross-entropy instead of the focal loss; ``use_gender=False`` zeroes the
    gender term.
    """
    if len(scores) != len(labels):
        raise MalformedInputError(
            f"score/label lists misaligned: {len(scores)} vs {len(labels)}"
        )
    global_term = 0.0
    gender_term = 0.0
    cls_term = 0.0
    reg_term = 0.0
    for pack, lab in zip(scores, labels):
        if len(pack.cls) != lab.n:
            raise MalformedInputError(
                f"score pack has {len(pack.cls)} frames, label pack has {lab.n}"
            )
        if use_focal:
            global_term += weights.lambda1 * focal_loss(
                pack.gl, lab.gl, weights.focal_gamma, weights.focal_alpha
            )
        else:
            global_term += weights.lambda1 * bce(pack.gl, lab.gl)

        if lab.gl != 1:
            continue  # gender / frame terms are gated on a positive match

        if use_gender and lab.ge is not None:
            gender_term += weights.lambda2 * gender_ce(pack.ge, lab.ge)

        cls_sum = sum(
            bce(p, c) for p, c in zip(pack.cls, lab.targets.cls)
        )
        cls_term += weights.lambda3 * cls_sum / lab.n

        reg_sum = 0.0
        for pred, target, c in zip(pack.reg, lab.targets.reg, lab.targets.cls):
            if c == 1:
                reg_sum += iou_reg_loss(pred, target)
        reg_term += weights.lambda4 * reg_sum / lab.n_pos

    return LossBreakdown(
        global_term=global_term,
        gender=gender_term,
        frame_cls=cls_term,
        frame_reg=reg_term,
    )


def total_loss(
    scores: Sequence[ScorePack],
    labels: Sequence[LabelPack],
    weights: LossWeights = LossWeights(),
) -> LossBreakdown:
    """Composite loss with all branches active (focal matching + gender)."""
    return baseline_variant_loss(scores, labels, weights, use_focal=True, use_gender=True)
