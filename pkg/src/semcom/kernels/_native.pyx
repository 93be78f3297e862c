# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot pixel kernels.

Same contracts as ``_fallback``; see the docstrings there.
"""
import numpy as np

cimport cython


cdef int _find(int[::1] parent, int i) nogil:
    cdef int root = i
    cdef int nxt
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


def label_components(mask):
    """8-connected component labels, numbered in raster order of first pixel."""
    m = np.ascontiguousarray(np.not_equal(mask, 0), dtype=np.uint8)
    cdef unsigned char[:, ::1] mv = m
    cdef int h = mv.shape[0]
    cdef int w = mv.shape[1]
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef int[:, ::1] labels = labels_arr
    # worst case: checkerboard, one provisional label per foreground pixel
    parent_arr = np.zeros((h * w + 2) // 2 + 1, dtype=np.int32)
    cdef int[::1] parent = parent_arr
    cdef int n_provisional = 0
    cdef int y, x, best, lab, ra, rb
    cdef int up_l, up_c, up_r, left

    with nogil:
        for y in range(h):
            for x in range(w):
                if mv[y, x] == 0:
                    continue
                left = labels[y, x - 1] if x > 0 else 0
                up_l = labels[y - 1, x - 1] if (y > 0 and x > 0) else 0
                up_c = labels[y - 1, x] if y > 0 else 0
                up_r = labels[y - 1, x + 1] if (y > 0 and x + 1 < w) else 0
                best = 0
                if left:
                    best = _find(parent, left)
                if up_l:
                    ra = _find(parent, up_l)
                    if best == 0:
                        best = ra
                    elif ra != best:
                        if ra < best:
                            parent[best] = ra
                            best = ra
                        else:
                            parent[ra] = best
                if up_c:
                    ra = _find(parent, up_c)
                    if best == 0:
                        best = ra
                    elif ra != best:
                        if ra < best:
                            parent[best] = ra
                            best = ra
                        else:
                            parent[ra] = best
                if up_r:
                    ra = _find(parent, up_r)
                    if best == 0:
                        best = ra
                    elif ra != best:
                        if ra < best:
                            parent[best] = ra
                            best = ra
                        else:
                            parent[ra] = best
                if best == 0:
                    n_provisional += 1
                    parent[n_provisional] = n_provisional
                    best = n_provisional
                labels[y, x] = best

    # second pass: compact roots to 1..count in raster order of first pixel
    remap_arr = np.zeros(n_provisional + 1, dtype=np.int32)
    cdef int[::1] remap = remap_arr
    cdef int count = 0
    with nogil:
        for y in range(h):
            for x in range(w):
                lab = labels[y, x]
                if lab == 0:
                    continue
                ra = _find(parent, lab)
                if remap[ra] == 0:
                    count += 1
                    remap[ra] = count
                labels[y, x] = remap[ra]
    return labels_arr, count


def dilate(mask, radius):
    """Binary dilation with a square structuring element (two separable passes)."""
    m = np.ascontiguousarray(np.not_equal(mask, 0), dtype=np.uint8)
    cdef int r = radius
    if r <= 0:
        return m
    cdef unsigned char[:, ::1] mv = m
    cdef int h = mv.shape[0]
    cdef int w = mv.shape[1]
    tmp_arr = np.zeros((h, w), dtype=np.uint8)
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] tmp = tmp_arr
    cdef unsigned char[:, ::1] out = out_arr
    cdef int y, x, d, lo, hi

    with nogil:
        for y in range(h):
            for x in range(w):
                if mv[y, x]:
                    lo = x - r if x - r > 0 else 0
                    hi = x + r + 1 if x + r + 1 < w else w
                    for d in range(lo, hi):
                        tmp[y, d] = 1
        for y in range(h):
            for x in range(w):
                if tmp[y, x]:
                    lo = y - r if y - r > 0 else 0
                    hi = y + r + 1 if y + r + 1 < h else h
                    for d in range(lo, hi):
                        out[d, x] = 1
    return out_arr


def median_filter(pixels, window):
    """Per-channel windowed median with edge replication; window odd >= 3."""
    cdef int win = window
    if win < 3 or win % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    arr = np.ascontiguousarray(pixels)
    if arr.dtype != np.uint8:
        raise ValueError("median_filter expects uint8 pixels")
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, np.newaxis]
    cdef const unsigned char[:, :, ::1] src = arr
    cdef int h = src.shape[0]
    cdef int w = src.shape[1]
    cdef int nc = src.shape[2]
    out_arr = np.empty((h, w, nc), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    cdef int r = win // 2
    cdef int y, x, c, dy, dx, yy, xx, i, j, n, mid
    cdef unsigned char v
    buf_arr = np.empty(win * win, dtype=np.uint8)
    cdef unsigned char[::1] buf = buf_arr

    with nogil:
        n = win * win
        mid = n // 2
        for c in range(nc):
            for y in range(h):
                for x in range(w):
                    i = 0
                    for dy in range(-r, r + 1):
                        yy = y + dy
                        if yy < 0:
                            yy = 0
                        elif yy >= h:
                            yy = h - 1
                        for dx in range(-r, r + 1):
                            xx = x + dx
                            if xx < 0:
                                xx = 0
                            elif xx >= w:
                                xx = w - 1
                            # insertion sort keeps buf ordered
                            v = src[yy, xx, c]
                            j = i
                            while j > 0 and buf[j - 1] > v:
                                buf[j] = buf[j - 1]
                                j -= 1
                            buf[j] = v
                            i += 1
                    out[y, x, c] = buf[mid]
    return out_arr[:, :, 0] if squeeze else out_arr
