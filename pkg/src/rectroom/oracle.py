"""Root counting and enumeration by the argument principle.

The number of zeros of ``v`` inside a closed contour is the total change of
``arg v`` along it divided by ``2 pi``.  The phase is tracked on adaptively
refined samples until consecutive samples differ by less than ``pi/2``, which
is robust to the exponential growth of ``v`` in ``Im q`` (the scaled residual
is used, so phases are exact even where ``v`` itself would overflow).
Segments are also kept shorter than the Newton distance ``|v/v'|`` so that a
close multiple zero cannot wrap the phase by a full turn unnoticed.

This module shares nothing with the Newton pipeline except the residual
function itself, so it can serve as an independent oracle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np

from rectroom.core import GammaPair
from rectroom.errors import ContourOnRoot, MaxDepth, NonFinite
from rectroom.residual import (
    EPS,
    is_root,
    residual_derivative_scaled,
    residual_scaled,
)

log = logging.getLogger(__name__)

MIN_REGION = 1e-10
MAX_DEPTH = 60
CLEARANCE = 1e-12
CLUSTER_SIZE = 1e-4
_JITTER = (0.37, -0.61, 0.83, -0.29, 0.71)
_CUTS = (0.5127, 0.4731, 0.5519, 0.4412, 0.5893, 0.3967)


@dataclass(frozen=True)
class SearchRegion:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate search region {self}")

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (
            self.re_min - margin <= z.real <= self.re_max + margin
            and self.im_min - margin <= z.imag <= self.im_max + margin
        )

    def grown(self, d: float) -> "SearchRegion":
        return SearchRegion(self.re_min - d, self.re_max + d, self.im_min - d, self.im_max + d)


# -- contour phase tracking --------------------------------------------------


def _reach(z, w, g: GammaPair) -> np.ndarray:
    dw = np.abs(residual_derivative_scaled(z, g))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(dw > 0, np.abs(w) / dw, np.inf)


def _track(path, t, g: GammaPair, max_rounds: int = 64) -> int:
    """Winding number of ``v`` along the closed path sampled at nodes ``t``.

    ``t`` must be increasing with ``path(t[0]) == path(t[-1])``.
    """
    t = np.asarray(t, dtype=float)
    z = path(t)
    w = residual_scaled(z, g)
    # |v/v'| bounds the distance to the nearest zero from below (up to its
    # multiplicity); segments longer than that could hide a full turn.
    reach = _reach(z, w, g)
    for _ in range(max_rounds):
        if not np.all(np.isfinite(w)):
            raise NonFinite("residual not finite on contour")
        if np.any(w == 0):
            raise ContourOnRoot("contour sample hits a root exactly")
        dphi = np.angle(w[1:] / w[:-1])
        seg_all = np.abs(np.diff(z))
        bad = (np.abs(dphi) >= np.pi / 2) | (seg_all > 0.5 * np.minimum(reach[1:], reach[:-1]))
        if not bad.any():
            break
        idx = np.nonzero(bad)[0]
        seg = seg_all[idx]
        if np.any(seg < 1e-13 * np.maximum(1.0, np.abs(z[idx]))):
            raise ContourOnRoot("phase jump unresolved at minimal segment length")
        tm = 0.5 * (t[idx] + t[idx + 1])
        zm = path(tm)
        wm = residual_scaled(zm, g)
        t = np.concatenate([t, tm])
        order = np.argsort(t, kind="stable")
        t = t[order]
        z = np.concatenate([z, zm])[order]
        w = np.concatenate([w, wm])[order]
        reach = np.concatenate([reach, _reach(zm, wm, g)])[order]
    else:
        raise ContourOnRoot("phase refinement did not settle")
    aw = np.abs(w)
    if aw.min() < CLEARANCE * aw.max():
        raise ContourOnRoot("contour passes too close to a root")
    total = dphi.sum() / (2 * np.pi)
    n = int(round(total))
    if abs(total - n) > 1e-6:
        raise ContourOnRoot(f"non-integer winding {total}")
    return n


def _rect_path(region: SearchRegion):
    c = np.array(
        [
            complex(region.re_min, region.im_min),
            complex(region.re_max, region.im_min),
            complex(region.re_max, region.im_max),
            complex(region.re_min, region.im_max),
            complex(region.re_min, region.im_min),
        ]
    )

    def path(t):
        e = np.clip(np.floor(t).astype(int), 0, 3)
        s = t - e
        return c[e] + s * (c[e + 1] - c[e])

    nodes = []
    for e, length in enumerate((region.width, region.height, region.width, region.height)):
        m = int(min(8192, max(16, math.ceil(8 * length))))
        nodes.append(e + np.arange(m) / m)
    nodes.append(np.array([4.0]))
    return path, np.concatenate(nodes)


def _rect_winding(region: SearchRegion, g: GammaPair) -> int:
    path, t = _rect_path(region)
    return _track(path, t, g)


def winding_count(region: SearchRegion, g: GammaPair, clearance_step: float = 1e-4, retries: int = 5) -> int:
    """Number of zeros of ``v`` (with multiplicity) inside ``region``.

    If the boundary passes through a root the region is grown by a jittered
    multiple of ``clearance_step`` and the count retried.
    """
    return _winding_with_retry(region, g, clearance_step, retries)[0]


def _winding_with_retry(region, g, step, retries):
    last = None
    for attempt in range(retries + 1):
        r = region if attempt == 0 else region.grown(abs(_JITTER[attempt - 1]) * step * attempt)
        try:
            return _rect_winding(r, g), r
        except ContourOnRoot as exc:
            last = exc
            log.debug("contour on root for %s, retrying (%s)", r, exc)
    raise ContourOnRoot(f"{last} (after {retries} perturbations of {region})")


def disc_winding_count(radius: float, g: GammaPair, retries: int = 5) -> int:
    """Zeros of ``v`` in the disc ``|q| <= radius`` (circle contour)."""
    last = None
    for attempt in range(retries + 1):
        r = radius * (1 + 1e-7 * attempt * (_JITTER[attempt - 1] if attempt else 0))

        def path(t, r=r):
            return r * np.exp(2j * np.pi * t)

        m = int(max(128, math.ceil(16 * 2 * np.pi * r)))
        t = np.linspace(0.0, 1.0, m + 1)
        try:
            return _track(path, t, g)
        except ContourOnRoot as exc:
            last = exc
    raise ContourOnRoot(f"{last} (disc radius {radius})")


# -- enumeration ---------------------------------------------------------------


@dataclass(frozen=True)
class Enumeration:
    """Result of :func:`enumerate_roots`.

    ``clusters`` lists ``(center, multiplicity)`` for regions that shrank
    below the minimum size while still holding more than one zero.
    """

    roots: Tuple[complex, ...]
    clusters: Tuple[Tuple[complex, int], ...]
    winding: int
    region: SearchRegion

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)


def _polish(region: SearchRegion, g: GammaPair, tol: float, iters: int = 60):
    q = region.center
    size = max(region.width, region.height)
    for _ in range(iters):
        dv = complex(residual_derivative_scaled(q, g))
        v = complex(residual_scaled(q, g))
        if not (np.isfinite(dv) and np.isfinite(v)) or abs(dv) < 1e-300:
            return None
        step = v / dv
        q = q - step
        if not region.contains(q, 0.1 * size):
            return None
        if abs(step) <= 4 * EPS * max(1.0, abs(q)):
            break
    if region.contains(q, 1e-9 * size) and bool(is_root(q, g, tol)):
        return q
    return None


def _split(region: SearchRegion, cut: float) -> List[SearchRegion]:
    r = region
    xm = r.re_min + cut * r.width
    ym = r.im_min + cut * r.height
    if r.width > 2 * r.height:
        return [replace(r, re_max=xm), replace(r, re_min=xm)]
    if r.height > 2 * r.width:
        return [replace(r, im_max=ym), replace(r, im_min=ym)]
    return [
        SearchRegion(r.re_min, xm, r.im_min, ym),
        SearchRegion(xm, r.re_max, r.im_min, ym),
        SearchRegion(r.re_min, xm, ym, r.im_max),
        SearchRegion(xm, r.re_max, ym, r.im_max),
    ]


def enumerate_roots(
    region: SearchRegion,
    g: GammaPair,
    tol: float = 1e-10,
    min_size: float = MIN_REGION,
    max_depth: int = MAX_DEPTH,
) -> Enumeration:
    """All zeros of ``v`` inside ``region`` by recursive subdivision.

    Subregions with winding number 0 are discarded; those with winding
    number 1 are polished by undamped Newton from their centre (subdividing
    further if Newton leaves the box).  Returned roots satisfy the residual
    test of :func:`rectroom.residual.is_root` with absolute bound ``tol``.
    """
    total, region = _winding_with_retry(region, g, 1e-4, 5)
    roots: List[complex] = []
    clusters: List[Tuple[complex, int]] = []
    stack = [(region, total, 0)]
    while stack:
        r, n, depth = stack.pop()
        if n == 0:
            continue
        if depth > max_depth:
            raise MaxDepth(f"subdivision deeper than {max_depth} levels near {r.center}")
        if n == 1:
            q = _polish(r, g, tol)
            if q is not None:
                roots.append(complex(q))
                continue
        if max(r.width, r.height) < min_size:
            clusters.append((r.center, n))
            continue
        for cut in _CUTS:
            try:
                kids = _split(r, cut)
                counts = [_rect_winding(k, g) for k in kids]
            except ContourOnRoot:
                continue
            if sum(counts) == n:
                break
        else:
            if max(r.width, r.height) < CLUSTER_SIZE * max(1.0, abs(r.center)):
                # Rounding noise of a multiple root; report it as a cluster.
                clusters.append((r.center, n))
                continue
            raise ContourOnRoot(f"no root-free cut found for {r}")
        stack.extend((k, c, depth + 1) for k, c in zip(kids, counts) if c)
    if clusters:
        log.warning("unresolved multiple-root clusters: %s", clusters)
    roots.sort(key=lambda z: (z.real, z.imag))
    return Enumeration(tuple(roots), tuple(clusters), total, region)
