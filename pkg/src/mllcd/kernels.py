"""Hot numeric kernels: numba ``@njit`` versions plus pure-numpy fallbacks.

The numba path is used when numba imports and ``MLLCD_DISABLE_NUMBA`` is unset
(or ``0``). Both paths share signatures; :func:`use_backend` switches at runtime.

Arc arrays follow :class:`mllcd.graph.GraphArrays`: arcs of node ``u`` live in
``arc_ptr[u]:arc_ptr[u+1]`` sorted by (layer, neighbour).
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from types import SimpleNamespace

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

DISABLED = os.environ.get("MLLCD_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


# -- numpy fallback -------------------------------------------------------------


def _layer_run(arc_ptr, arc_layer, u, layer):
    lo, hi = arc_ptr[u], arc_ptr[u + 1]
    seg = arc_layer[lo:hi]
    return lo + np.searchsorted(seg, layer, "left"), lo + np.searchsorted(seg, layer, "right")


def arc_jaccard_np(arc_ptr, arc_nbr, arc_layer):
    sims = np.zeros(arc_nbr.shape[0], dtype=np.float64)
    n = arc_ptr.shape[0] - 1
    for u in range(n):
        for a in range(arc_ptr[u], arc_ptr[u + 1]):
            v, layer = arc_nbr[a], arc_layer[a]
            ulo, uhi = _layer_run(arc_ptr, arc_layer, u, layer)
            vlo, vhi = _layer_run(arc_ptr, arc_layer, v, layer)
            common = np.intersect1d(arc_nbr[ulo:uhi], arc_nbr[vlo:vhi], assume_unique=True).size
            union = (uhi - ulo) + (vhi - vlo) - common
            sims[a] = common / union
    return sims


def dispersion_rows_np(rows, covered_only):
    """Population std dev of each row over its covered (>0) entries."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    mask = rows > 0 if covered_only else np.ones(rows.shape, dtype=bool)
    ncov = mask.sum(axis=1)
    denom = np.maximum(ncov, 1)
    mean = (rows * mask).sum(axis=1) / denom
    var = (((rows - mean[:, None]) ** 2) * mask).sum(axis=1) / denom
    return np.where(ncov >= 2, np.sqrt(var), 0.0)


def _bias_weights_np(rows, base_counts, beta, covered_only):
    f_after = dispersion_rows_np(rows, covered_only)
    f_before = dispersion_rows_np(base_counts, covered_only)[0]
    bf = beta * (f_after - f_before)
    return 2.0 / (1.0 + np.exp(-bf))


def shell_external_np(shell, w, k, counts, size_b, beta, use_bias, covered_only):
    if size_b == 0 or shell.size == 0:
        return 0.0
    weights = w[shell]
    if use_bias:
        weights = weights * _bias_weights_np(k[shell] + counts, counts, beta, covered_only)
    return float(weights.sum()) / size_b


def evaluate_candidates_np(cands, shell, in_c, in_s, rejected, w, k, counts, cnt_s,
                           internal_sum, size_c, size_b, arc_ptr, arc_nbr, arc_layer, arc_sim,
                           union_ptr, union_nbr, beta, use_bias, covered_only):
    m = cands.shape[0]
    out_int = np.empty(m)
    out_ext = np.empty(m)
    out_shell = np.empty(m, dtype=np.int64)
    for j in range(m):
        v = cands[j]
        lo, hi = arc_ptr[v], arc_ptr[v + 1]
        nb, ly, sm = arc_nbr[lo:hi], arc_layer[lo:hi], arc_sim[lo:hi]
        keep = ~in_c[nb] & ~rejected[nb]
        nb, ly, sm = nb[keep], ly[keep], sm[keep]
        wp = w.copy()
        np.add.at(wp, nb, sm)
        members = in_s.copy()
        members[nb] = True
        members[v] = False
        idx = np.flatnonzero(members)

        out_int[j] = 2.0 * (internal_sum + w[v]) / (size_c + 1)
        out_shell[j] = idx.size

        unb = union_nbr[union_ptr[v]:union_ptr[v + 1]]
        nb_size = size_b - np.count_nonzero(in_c[unb] & (cnt_s[unb] == 1))
        if np.any(~in_c[unb] & ~rejected[unb]):
            nb_size += 1
        if nb_size == 0 or idx.size == 0:
            out_ext[j] = 0.0
            continue
        weights = wp[idx]
        if use_bias:
            kp = k[idx].copy()
            hit = np.searchsorted(idx, nb)
            np.add.at(kp, (hit, ly), 1)
            cp = counts + k[v]
            weights = weights * _bias_weights_np(kp + cp, cp, beta, covered_only)
        out_ext[j] = float(weights.sum()) / nb_size
    return out_int, out_ext, out_shell


# -- numba ----------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _run_bounds(arc_ptr, arc_layer, u, layer):
        lo = arc_ptr[u]
        hi = arc_ptr[u + 1]
        start = lo
        while start < hi and arc_layer[start] < layer:
            start += 1
        end = start
        while end < hi and arc_layer[end] == layer:
            end += 1
        return start, end

    @njit(cache=True)
    def arc_jaccard_nb(arc_ptr, arc_nbr, arc_layer):
        sims = np.zeros(arc_nbr.shape[0], dtype=np.float64)
        n = arc_ptr.shape[0] - 1
        for u in range(n):
            for a in range(arc_ptr[u], arc_ptr[u + 1]):
                v = arc_nbr[a]
                layer = arc_layer[a]
                ulo, uhi = _run_bounds(arc_ptr, arc_layer, u, layer)
                vlo, vhi = _run_bounds(arc_ptr, arc_layer, v, layer)
                i, j, common = ulo, vlo, 0
                while i < uhi and j < vhi:
                    x, y = arc_nbr[i], arc_nbr[j]
                    if x == y:
                        common += 1
                        i += 1
                        j += 1
                    elif x < y:
                        i += 1
                    else:
                        j += 1
                union = (uhi - ulo) + (vhi - vlo) - common
                sims[a] = common / union
        return sims

    @njit(cache=True)
    def _dispersion2(base, add1, add2, covered_only):
        L = base.shape[0]
        cnt = 0
        total = 0.0
        for l in range(L):
            c = base[l] + add1[l] + add2[l]
            if c > 0 or not covered_only:
                cnt += 1
                total += c
        if cnt < 2:
            return 0.0
        mean = total / cnt
        acc = 0.0
        for l in range(L):
            c = base[l] + add1[l] + add2[l]
            if c > 0 or not covered_only:
                d = c - mean
                acc += d * d
        return np.sqrt(acc / cnt)

    @njit(cache=True)
    def shell_external_nb(shell, w, k, counts, size_b, beta, use_bias, covered_only):
        if size_b == 0 or shell.shape[0] == 0:
            return 0.0
        zero = np.zeros(counts.shape[0], dtype=np.int64)
        f0 = 0.0
        if use_bias:
            f0 = _dispersion2(counts, zero, zero, covered_only)
        total = 0.0
        for t in range(shell.shape[0]):
            u = shell[t]
            if use_bias:
                bf = beta * (_dispersion2(counts, k[u], zero, covered_only) - f0)
                total += 2.0 / (1.0 + np.exp(-bf)) * w[u]
            else:
                total += w[u]
        return total / size_b

    @njit(cache=True)
    def evaluate_candidates_nb(cands, shell, in_c, in_s, rejected, w, k, counts, cnt_s,
                               internal_sum, size_c, size_b, arc_ptr, arc_nbr, arc_layer, arc_sim,
                               union_ptr, union_nbr, beta, use_bias, covered_only):
        n, L = k.shape
        m = cands.shape[0]
        out_int = np.empty(m)
        out_ext = np.empty(m)
        out_shell = np.empty(m, dtype=np.int64)
        dw = np.zeros(n)
        dk = np.zeros((n, L), dtype=np.int64)
        touched = np.zeros(n, dtype=np.bool_)
        tlist = np.empty(n, dtype=np.int64)
        cp = np.empty(L, dtype=np.int64)
        zero = np.zeros(L, dtype=np.int64)
        for j in range(m):
            v = cands[j]
            ntouch = 0
            for a in range(arc_ptr[v], arc_ptr[v + 1]):
                x = arc_nbr[a]
                if in_c[x] or rejected[x]:
                    continue
                if not touched[x]:
                    touched[x] = True
                    tlist[ntouch] = x
                    ntouch += 1
                dw[x] += arc_sim[a]
                dk[x, arc_layer[a]] += 1

            out_int[j] = 2.0 * (internal_sum + w[v]) / (size_c + 1)

            nb_size = size_b
            v_in_b = False
            for q in range(union_ptr[v], union_ptr[v + 1]):
                c = union_nbr[q]
                if in_c[c]:
                    if cnt_s[c] == 1:
                        nb_size -= 1
                elif not rejected[c]:
                    v_in_b = True
            if v_in_b:
                nb_size += 1

            for l in range(L):
                cp[l] = counts[l] + k[v, l]
            f0 = 0.0
            if use_bias:
                f0 = _dispersion2(cp, zero, zero, covered_only)

            total = 0.0
            ssize = 0
            for t in range(shell.shape[0]):
                u = shell[t]
                if u == v:
                    continue
                ssize += 1
                wu = w[u] + dw[u]
                if use_bias:
                    bf = beta * (_dispersion2(cp, k[u], dk[u], covered_only) - f0)
                    total += 2.0 / (1.0 + np.exp(-bf)) * wu
                else:
                    total += wu
            for t in range(ntouch):
                x = tlist[t]
                if in_s[x]:
                    continue
                ssize += 1
                if use_bias:
                    bf = beta * (_dispersion2(cp, k[x], dk[x], covered_only) - f0)
                    total += 2.0 / (1.0 + np.exp(-bf)) * (w[x] + dw[x])
                else:
                    total += w[x] + dw[x]

            out_shell[j] = ssize
            if nb_size == 0 or ssize == 0:
                out_ext[j] = 0.0
            else:
                out_ext[j] = total / nb_size

            for t in range(ntouch):
                x = tlist[t]
                dw[x] = 0.0
                touched[x] = False
                for l in range(L):
                    dk[x, l] = 0
        return out_int, out_ext, out_shell


NUMPY = SimpleNamespace(
    name="numpy",
    arc_jaccard=arc_jaccard_np,
    shell_external=shell_external_np,
    evaluate_candidates=evaluate_candidates_np,
)

if HAVE_NUMBA:
    NUMBA = SimpleNamespace(
        name="numba",
        arc_jaccard=arc_jaccard_nb,
        shell_external=shell_external_nb,
        evaluate_candidates=evaluate_candidates_nb,
    )
else:  # pragma: no cover
    NUMBA = None

_active = NUMPY if (DISABLED or NUMBA is None) else NUMBA


def backend():
    return _active


def available_backends() -> list[str]:
    return ["numpy"] + (["numba"] if NUMBA is not None else [])


@contextmanager
def use_backend(name: str):
    """Temporarily route kernel calls through ``"numba"`` or ``"numpy"``."""
    global _active
    table = {"numpy": NUMPY, "numba": NUMBA}
    if table.get(name) is None:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    prev, _active = _active, table[name]
    try:
        yield _active
    finally:
        _active = prev


def arc_jaccard(arc_ptr, arc_nbr, arc_layer):
    return _active.arc_jaccard(arc_ptr, arc_nbr, arc_layer)


def shell_external(*args):
    return _active.shell_external(*args)


def evaluate_candidates(*args):
    return _active.evaluate_candidates(*args)
