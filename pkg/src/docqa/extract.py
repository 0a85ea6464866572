"""Region-guided text extraction from character geometry.

Characters arrive as per-glyph boxes (page points, origin top-left, so y
grows downward); layout regions arrive from a detector backend, a sidecar
file, or the geometric fallback. Assembly is pure and deterministic: the
same boxes always produce the same passages, bit-exact.

Pinned assembly constants (the source material is silent on these):
line-grouping tolerance is 40% of the page's median glyph height, the
word-gap threshold is 33% of the page's median glyph width, and region
boxes are inflated by 1pt before the center-containment test.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Passage, RegionBox
from .metrics import token_prf
from .text import normalize_tokens

LINE_TOL_FRACTION = 0.4
WORD_GAP_FRACTION = 0.33
REGION_PAD = 1.0
DEDUP_IOU = 0.9
COLUMN_EPS = 1.0
# Vertical gaps above this multiple of the median line gap split fallback blocks.
BLOCK_GAP_FACTOR = 1.5

# Region categories that map onto a passage category; the rest (headers,
# footers, page furniture) collapse to "other" and are normally filtered.
REGION_TO_PASSAGE = {
    "paragraph": "paragraph",
    "table": "table",
    "caption": "caption",
    "title": "other",
    "list": "other",
    "other": "other",
}

DEFAULT_KEEP = frozenset({"paragraph", "table", "caption"})


class SidecarError(Exception):
    """Raised for malformed or out-of-bounds region sidecar entries."""


@dataclass(frozen=True)
class CharBox:
    """One positioned glyph."""

    ch: str
    x0: float
    y0: float
    x1: float
    y1: float
    page_index: int
    baseline_y: float

    def __post_init__(self) -> None:
        if len(self.ch) != 1:
            raise ValueError(f"CharBox.ch must be a single character: {self.ch!r}")
        if self.x1 <= self.x0 or self.y1 <= self.y0:
            raise ValueError(f"degenerate char box: {self!r}")
        if self.page_index < 0:
            raise ValueError("page_index must be >= 0")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2

    def to_dict(self) -> dict:
        return {
            "ch": self.ch,
            "x0": self.x0,
            "y0": self.y0,
            "x1": self.x1,
            "y1": self.y1,
            "page_index": self.page_index,
            "baseline_y": self.baseline_y,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CharBox":
        return cls(
            ch=d["ch"],
            x0=float(d["x0"]),
            y0=float(d["y0"]),
            x1=float(d["x1"]),
            y1=float(d["y1"]),
            page_index=int(d["page_index"]),
            baseline_y=float(d["baseline_y"]),
        )


@dataclass(frozen=True)
class ExtractionScore:
    precision: float
    recall: float
    f1: float
    category: str | None = None


def _page_metrics(chars: Sequence[CharBox]) -> tuple[float, float]:
    heights = [c.y1 - c.y0 for c in chars]
    widths = [c.x1 - c.x0 for c in chars]
    return statistics.median(heights), statistics.median(widths)


def chars_in_region(chars: Sequence[CharBox], region: RegionBox) -> list[CharBox]:
    """Characters whose box center lies inside the (1pt-inflated) region.

    Enlarging the region can only grow this set; clipping monotonicity rests
    on that.
    """
    rx0, ry0 = region.x0 - REGION_PAD, region.y0 - REGION_PAD
    rx1, ry1 = region.x1 + REGION_PAD, region.y1 + REGION_PAD
    out = []
    for c in chars:
        if c.page_index != region.page_index or c.ch.isspace():
            continue
        cx, cy = c.center
        if rx0 <= cx <= rx1 and ry0 <= cy <= ry1:
            out.append(c)
    return out


def _group_lines(chars: Sequence[CharBox], tol: float) -> list[list[CharBox]]:
    """Cluster characters into baseline groups, top to bottom."""
    ordered = sorted(chars, key=lambda c: (c.baseline_y, c.x0, c.x1, c.ch))
    groups: list[list[CharBox]] = []
    anchor = None
    for c in ordered:
        if anchor is None or c.baseline_y - anchor > tol:
            groups.append([])
            anchor = c.baseline_y
        groups[-1].append(c)
    for g in groups:
        g.sort(key=lambda c: (c.x0, c.x1, c.ch))
    return groups


def _line_text(group: Sequence[CharBox], word_gap: float) -> str:
    parts = [group[0].ch]
    for prev, cur in zip(group, group[1:]):
        if cur.x0 - prev.x1 > word_gap:
            parts.append(" ")
        parts.append(cur.ch)
    return "".join(parts)


def _join_lines(lines: Sequence[str]) -> str:
    out = ""
    for line in lines:
        if not out:
            out = line
        elif out.endswith("-") and line and line[0].islower():
            out = out[:-1] + line  # dehyphenate across the line break
        else:
            out = out + "\n" + line
    return out


def clip_text_to_region(chars: Sequence[CharBox], region: RegionBox) -> str:
    """Assemble the region's characters in reading order.

    Lines group by baseline with a tolerance, read top-to-bottom; characters
    read left-to-right; wide horizontal gaps become single spaces; line
    breaks become newlines unless a trailing hyphen meets a lowercase start.
    """
    page_chars = [c for c in chars if c.page_index == region.page_index and not c.ch.isspace()]
    if not page_chars:
        return ""
    med_h, med_w = _page_metrics(page_chars)
    contained = chars_in_region(page_chars, region)
    if not contained:
        return ""
    groups = _group_lines(contained, LINE_TOL_FRACTION * med_h)
    lines = [_line_text(g, WORD_GAP_FRACTION * med_w) for g in groups]
    return _join_lines(lines)


# ---------------------------------------------------------------------------
# Region handling and passage assembly
# ---------------------------------------------------------------------------


def _iou(a: RegionBox, b: RegionBox) -> float:
    ix0, iy0 = max(a.x0, b.x0), max(a.y0, b.y0)
    ix1, iy1 = min(a.x1, b.x1), min(a.y1, b.y1)
    if ix1 <= ix0 or iy1 <= iy0:
        return 0.0
    inter = (ix1 - ix0) * (iy1 - iy0)
    area_a = (a.x1 - a.x0) * (a.y1 - a.y0)
    area_b = (b.x1 - b.x0) * (b.y1 - b.y0)
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0


def dedup_regions(regions: Sequence[RegionBox]) -> list[RegionBox]:
    """Drop near-duplicate regions (same page+category, IoU > 0.9), keeping
    the higher detector score (first seen wins ties)."""
    kept: list[RegionBox] = []
    for region in regions:
        replaced = False
        duplicate = False
        for i, existing in enumerate(kept):
            if (
                existing.page_index == region.page_index
                and existing.category == region.category
                and _iou(existing, region) > DEDUP_IOU
            ):
                duplicate = True
                if region.detector_score > existing.detector_score:
                    kept[i] = region
                    replaced = True
                break
        if not duplicate and not replaced:
            kept.append(region)
    return kept


def _column_of(region: RegionBox, mid: float) -> int:
    # Fully right of the midline -> column 1; left or spanning -> column 0.
    return 1 if region.x0 >= mid - COLUMN_EPS else 0


def assemble_passages(
    regions: Sequence[RegionBox],
    chars: Sequence[CharBox],
    keep: Iterable[str] = DEFAULT_KEEP,
) -> list[Passage]:
    """One passage per kept region, in reading order.

    Order is (page, column, y0) with left column before right on two-column
    pages; regions whose category is not kept, and regions with empty clipped
    text, are dropped. Passage ids are provisional (p0000...) until
    register_document assigns document-scoped ids.
    """
    keep = frozenset(keep)
    regions = dedup_regions(regions)
    by_page: dict[int, list[RegionBox]] = {}
    for r in regions:
        if r.category in keep:
            by_page.setdefault(r.page_index, []).append(r)

    chars_by_page: dict[int, list[CharBox]] = {}
    for c in chars:
        chars_by_page.setdefault(c.page_index, []).append(c)

    ordered: list[RegionBox] = []
    for page in sorted(by_page):
        page_regions = by_page[page]
        mid = (min(r.x0 for r in page_regions) + max(r.x1 for r in page_regions)) / 2
        page_regions.sort(key=lambda r: (_column_of(r, mid), r.y0, r.x0, r.x1))
        ordered.extend(page_regions)

    passages: list[Passage] = []
    for region in ordered:
        text = clip_text_to_region(chars_by_page.get(region.page_index, ()), region)
        if not text.strip():
            continue
        passages.append(
            Passage(
                passage_id=f"p{len(passages):04d}",
                text=text,
                category=REGION_TO_PASSAGE[region.category],
                page_index=region.page_index,
                region_box=region,
            )
        )
    return passages


def extraction_score(extracted: str, gold: str, category: str | None = None) -> ExtractionScore:
    """Token-multiset precision/recall/F1 of extracted text against ground truth."""
    p, r, f1 = token_prf(normalize_tokens(extracted), normalize_tokens(gold))
    return ExtractionScore(precision=p, recall=r, f1=f1, category=category)


# ---------------------------------------------------------------------------
# Geometric fallback (no detector available)
# ---------------------------------------------------------------------------


def fallback_regions(chars: Sequence[CharBox]) -> list[RegionBox]:
    """Detector-free regions: one paragraph region per text block.

    Lines cluster into blocks wherever the baseline gap exceeds
    BLOCK_GAP_FACTOR times the page's tightest line gap (a blank-line
    break). Keeps the pipeline runnable fully offline.
    """
    by_page: dict[int, list[CharBox]] = {}
    for c in chars:
        if not c.ch.isspace():
            by_page.setdefault(c.page_index, []).append(c)

    regions: list[RegionBox] = []
    for page in sorted(by_page):
        page_chars = by_page[page]
        med_h, _ = _page_metrics(page_chars)
        groups = _group_lines(page_chars, LINE_TOL_FRACTION * med_h)
        baselines = [g[0].baseline_y for g in groups]
        gaps = [b2 - b1 for b1, b2 in zip(baselines, baselines[1:])]
        if gaps:
            base_gap = min(gaps)  # the page's line spacing; medians skew when
            cut = BLOCK_GAP_FACTOR * base_gap if base_gap > 0 else math.inf
        else:                     # many gaps are paragraph breaks
            cut = math.inf
        blocks: list[list[list[CharBox]]] = [[groups[0]]] if groups else []
        for prev_b, group in zip(baselines, groups[1:]):
            if group[0].baseline_y - prev_b > cut:
                blocks.append([])
            blocks[-1].append(group)
        for block in blocks:
            cs = [c for g in block for c in g]
            regions.append(
                RegionBox(
                    page_index=page,
                    x0=min(c.x0 for c in cs),
                    y0=min(c.y0 for c in cs),
                    x1=max(c.x1 for c in cs),
                    y1=max(c.y1 for c in cs),
                    category="paragraph",
                    detector_score=1.0,
                )
            )
    return regions


# ---------------------------------------------------------------------------
# Sidecar files
# ---------------------------------------------------------------------------


def load_region_sidecar(
    path: str | Path, page_bounds: Mapping[int, tuple[float, float]] | None = None
) -> list[RegionBox]:
    """JSON array of {page, bbox:[x0,y0,x1,y1], category, score}, page points,
    origin top-left. With ``page_bounds`` (page -> (width, height)), boxes are
    clamped to the page and unknown pages rejected."""
    with open(path, encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise SidecarError(f"malformed sidecar {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise SidecarError(f"sidecar {path} must be a JSON array")

    regions = []
    for i, entry in enumerate(raw):
        try:
            page = int(entry["page"])
            x0, y0, x1, y1 = (float(v) for v in entry["bbox"])
            category = entry["category"]
            score = float(entry.get("score", 1.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise SidecarError(f"sidecar {path} entry {i} malformed: {exc}") from exc
        if page_bounds is not None:
            if page not in page_bounds:
                raise SidecarError(
                    f"sidecar {path} entry {i} references page {page}, "
                    f"but the document has pages {sorted(page_bounds)}"
                )
            w, h = page_bounds[page]
            x0, x1 = max(0.0, x0), min(w, x1)
            y0, y1 = max(0.0, y0), min(h, y1)
            if x1 <= x0 or y1 <= y0:
                raise SidecarError(
                    f"sidecar {path} entry {i} lies outside page {page} bounds ({w}, {h})"
                )
        try:
            regions.append(
                RegionBox(
                    page_index=page, x0=x0, y0=y0, x1=x1, y1=y1,
                    category=category, detector_score=score,
                )
            )
        except ValueError as exc:
            raise SidecarError(f"sidecar {path} entry {i}: {exc}") from exc
    return regions


def write_region_sidecar(regions: Iterable[RegionBox], path: str | Path) -> None:
    payload = [
        {
            "page": r.page_index,
            "bbox": [r.x0, r.y0, r.x1, r.y1],
            "category": r.category,
            "score": r.detector_score,
        }
        for r in regions
    ]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, indent=1)
        f.write("\n")


def load_char_dump(path: str | Path) -> list[CharBox]:
    """JSON-lines of CharBox dicts."""
    chars = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                chars.append(CharBox.from_dict(json.loads(line)))
    return chars


def write_char_dump(chars: Iterable[CharBox], path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for c in chars:
            f.write(json.dumps(c.to_dict(), sort_keys=True))
            f.write("\n")
