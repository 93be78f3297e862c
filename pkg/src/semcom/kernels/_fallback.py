"""Pure numpy implementations of the hot pixel kernels.

These mirror the compiled versions in ``_native`` exactly; tests run both
backends against the same oracles.
"""
from __future__ import annotations

import numpy as np


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 8-connected components of a binary map.

    Returns ``(labels, count)`` where ``labels`` is int32 with 0 for
    background and components numbered 1..count in raster order of their
    first pixel.
    """
    m = np.ascontiguousarray(mask) != 0
    h, w = m.shape
    labels = np.zeros((h, w), dtype=np.int32)

    # Gather maximal horizontal runs per row, then union-find over runs:
    # 8-connectivity makes runs in adjacent rows neighbors when their
    # column spans overlap after widening one side by a pixel.
    runs: list[tuple[int, int, int]] = []  # (row, start, stop)
    row_slices: list[tuple[int, int]] = []  # run index range per row
    padded = np.zeros(w + 2, dtype=np.int8)
    for y in range(h):
        row = m[y]
        lo = len(runs)
        if row.any():
            padded[1:-1] = row
            d = np.diff(padded)
            starts = np.flatnonzero(d == 1)
            stops = np.flatnonzero(d == -1)
            runs.extend((y, int(s), int(e)) for s, e in zip(starts, stops))
        row_slices.append((lo, len(runs)))

    parent = list(range(len(runs)))

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    for y in range(1, h):
        alo, ahi = row_slices[y - 1]
        blo, bhi = row_slices[y]
        a, b = alo, blo
        while a < ahi and b < bhi:
            _, s1, e1 = runs[a]
            _, s2, e2 = runs[b]
            if s1 < e2 + 1 and s2 < e1 + 1:  # overlap with 1px diagonal reach
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            # advance the run that ends first
            if e1 <= e2:
                a += 1
            else:
                b += 1

    next_label = 0
    root_label: dict[int, int] = {}
    for i, (y, s, e) in enumerate(runs):
        root = find(i)
        lab = root_label.get(root)
        if lab is None:
            next_label += 1
            lab = next_label
            root_label[root] = lab
        labels[y, s:e] = lab
    return labels, next_label


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation with a square structuring element of the given radius."""
    m = (np.ascontiguousarray(mask) != 0).astype(np.uint8)
    if radius <= 0:
        return m
    h, w = m.shape
    out = np.zeros_like(m)
    for dy in range(-radius, radius + 1):
        if abs(dy) >= h and dy != 0:
            continue
        ys = slice(max(dy, 0), min(h + dy, h))
        yd = slice(max(-dy, 0), min(h - dy, h))
        shifted = np.zeros_like(m)
        shifted[yd, :] = m[ys, :]
        for dx in range(-radius, radius + 1):
            if abs(dx) >= w and dx != 0:
                continue
            xs = slice(max(dx, 0), min(w + dx, w))
            xd = slice(max(-dx, 0), min(w - dx, w))
            out[:, xd] |= shifted[:, xs]
    return out


def median_filter(pixels: np.ndarray, window: int) -> np.ndarray:
    """Per-channel median over a ``window x window`` neighborhood.

    Edges are handled by replication.  ``window`` must be odd and >= 3.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    arr = np.ascontiguousarray(pixels)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, np.newaxis]
    r = window // 2
    out = np.empty_like(arr)
    for c in range(arr.shape[2]):
        padded = np.pad(arr[:, :, c], r, mode="edge")
        windows = np.lib.stride_tricks.sliding_window_view(padded, (window, window))
        out[:, :, c] = np.median(windows, axis=(2, 3)).astype(arr.dtype)
    return out[:, :, 0] if squeeze else out
