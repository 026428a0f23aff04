"""Guaranteed over-approximation of one-step reach sets as box pavings.

For a cell [x] and input point u, computes a union of boxes containing
f([x], u) + delta*B and exceeding it by at most eps: the cell is minced by
bisection until every sub-box is narrower than eps/(2L), each sub-box is
pushed through the interval extension, and the images are inflated by delta.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .exprlang import SystemModel
from .interval import Box


@dataclass
class Paving:
    """Union of same-dimension boxes; escapes_domain marks overflow past X."""

    boxes: list
    escapes_domain: bool

    def contains_point(self, p) -> bool:
        return any(b.contains_point(p) for b in self.boxes)

    def hull(self) -> Box:
        h = self.boxes[0]
        for b in self.boxes[1:]:
            h = h.hull(b)
        return h

    def coalesced(self) -> "Paving":
        """Merge boxes that agree on all dimensions but abut on one.

        Lossless (the union is unchanged), so every guarantee carried by the
        paving survives the merge.
        """
        boxes = list(self.boxes)
        merged = True
        while merged:
            merged = False
            out = []
            used = [False] * len(boxes)
            for i, a in enumerate(boxes):
                if used[i]:
                    continue
                for j in range(i + 1, len(boxes)):
                    if used[j]:
                        continue
                    b = boxes[j]
                    fused = _try_fuse(a, b)
                    if fused is not None:
                        a = fused
                        used[j] = True
                        merged = True
                out.append(a)
            boxes = out
        return Paving(boxes, self.escapes_domain)


def _try_fuse(a: Box, b: Box):
    diff = None
    for d in range(a.dims):
        if a.ivs[d] != b.ivs[d]:
            if diff is not None:
                return None
            diff = d
    if diff is None:
        return a
    ia, ib = a.ivs[diff], b.ivs[diff]
    if ia.hi < ib.lo or ib.hi < ia.lo:
        return None
    out = list(a.ivs)
    out[diff] = ia.hull(ib)
    return Box(out)


def over_reach(model: SystemModel, cell: Box, u, delta, eps: float,
               lipschitz: float) -> Paving:
    """One-step reach over-approximation of cell under input point u.

    Soundness: f(x, u) + w lies in the union for every x in cell, |w| <= delta.
    Tightness: the union stays within eps (infinity distance) of the true
    reach set, provided lipschitz dominates f(., u) on the cell.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if cell.is_empty:
        raise ValueError("cannot compute reach of the empty cell")
    threshold = float("inf") if lipschitz <= 0.0 else eps / (2.0 * lipschitz)
    ubox = Box.point(u)
    boxes = []
    escapes = False
    work = deque([cell])
    while work:
        y = work.popleft()
        if y.width() <= threshold:
            z = model.image_box(y, ubox).inflate(delta)
            boxes.append(z)
            if not model.X.contains(z):
                escapes = True
        else:
            left, right = y.bisect()
            work.append(left)
            work.append(right)
    return Paving(boxes, escapes)
