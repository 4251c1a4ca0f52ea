"""Accept/reject decisions from calibrated pore sizes.

The camera calibration maps pixels to physical size (40 px per millimeter by
default). A work piece is rejected as soon as one detected pore, at or above
the score threshold, exceeds the configured millimeter limit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataset import Detection

SIZE_MEASURES = ("longer_side", "shorter_side", "sqrt_area")


@dataclass(frozen=True)
class Calibration:
    px_per_mm: float = 40.0

    def __post_init__(self):
        if self.px_per_mm <= 0:
            raise ValueError(f"px_per_mm must be > 0, got {self.px_per_mm}")


@dataclass(frozen=True)
class Verdict:
    image_id: str
    decision: str  # accept | reject | no-detection
    largest_pore_mm: float
    threshold_mm: float
    triggering: Detection | None = None
    score: float | None = None


def pore_size_mm(
    d: Detection, c: Calibration | None = None, measure: str = "longer_side"
) -> float:
    """Physical pore size of a detection in millimeters.

    The default measure is the longer box side, the conservative choice for
    a pass/fail gate; 'shorter_side' and 'sqrt_area' are available.
    """
    c = c or Calibration()
    w, h = d.box.width, d.box.height
    if measure == "longer_side":
        px = max(w, h)
    elif measure == "shorter_side":
        px = min(w, h)
    elif measure == "sqrt_area":
        px = (w * h) ** 0.5
    else:
        raise ValueError(f"unknown size measure {measure!r}, pick one of {SIZE_MEASURES}")
    return px / c.px_per_mm


def assess(
    dets: list[Detection],
    threshold_mm: float,
    min_score: float = 0.0,
    c: Calibration | None = None,
    measure: str = "longer_side",
    image_ids: list[str] | None = None,
) -> list[Verdict]:
    """Per-image verdicts over a detection stream.

    Detections below `min_score` are ignored. Images with no remaining
    detection get a 'no-detection' verdict. `image_ids`, when given, fixes
    the image universe (e.g. from a dataset) so images without any detection
    are still reported; otherwise the universe is the ids seen in `dets`.
    """
    if threshold_mm <= 0:
        raise ValueError(f"threshold_mm must be > 0, got {threshold_mm}")
    if not 0.0 <= min_score <= 1.0:
        raise ValueError(f"min_score must lie in [0, 1], got {min_score}")
    c = c or Calibration()

    universe = sorted(set(image_ids) if image_ids is not None else {d.image_id for d in dets})
    by_image: dict[str, list[Detection]] = {i: [] for i in universe}
    for d in dets:
        if d.score >= min_score and d.image_id in by_image:
            by_image[d.image_id].append(d)

    verdicts = []
    for image_id in universe:
        remaining = by_image[image_id]
        if not remaining:
            verdicts.append(
                Verdict(
                    image_id=image_id,
                    decision="no-detection",
                    largest_pore_mm=0.0,
                    threshold_mm=threshold_mm,
                )
            )
            continue
        largest = max(remaining, key=lambda d: pore_size_mm(d, c, measure))
        largest_mm = pore_size_mm(largest, c, measure)
        decision = "reject" if largest_mm > threshold_mm else "accept"
        verdicts.append(
            Verdict(
                image_id=image_id,
                decision=decision,
                largest_pore_mm=largest_mm,
                threshold_mm=threshold_mm,
                triggering=largest if decision == "reject" else None,
                score=largest.score,
            )
        )
    return verdicts


def verdicts_csv_rows(verdicts: list[Verdict]) -> list[tuple]:
    rows = [("image_id", "decision", "largest_pore_mm", "score", "threshold_mm")]
    for v in verdicts:
        rows.append(
            (
                v.image_id,
                v.decision,
                f"{v.largest_pore_mm:.4f}",
                "" if v.score is None else f"{v.score:.4f}",
                f"{v.threshold_mm:.4f}",
            )
        )
    return rows
