"""Pairwise reduction kernels behind the contraction certifier.

Certification sweeps all ordered pairs of an N-point sample, an O(N^2 d)
inner loop that dominates runtime for the default sample sizes. Each kernel
exists twice with identical floating-point semantics:

* a numba ``@njit`` loop (``*_nb``), used by default, and
* a chunked pure-numpy reduction (``*_py``), selected when numba is
  unavailable or the environment variable ``ENRICHEDFP_DISABLE_NUMBA`` is
  set to a truthy value.

Both paths evaluate norms by summing squares in index order, so results are
bit-identical for the dimensions this package targets. Argmax/argmin ties on
exactly equal values are broken toward the lexicographically smallest
witness pair, which keeps results independent of evaluation order.

``benchmarks/kernel_bench.py`` times the two paths against each other.
"""

from __future__ import annotations

import os

import numpy as np

EPS = float(np.finfo(np.float64).eps)

# Rounding allowance per pair: a violation must clear this to count. Double
# precision cannot resolve the contraction inequality closer than a few ulp
# of the magnitudes involved, so certificates treat sub-guard excesses as
# satisfied-at-resolution rather than as violations.
CHECK_GUARD_EPS = 8.0 * EPS

# Zero-displacement pairs with a numerator above this make the constant
# unsatisfiable for any finite rate; below it the numerator is noise.
ZERO_NUM_TOL = 1e-14

MODE_KANNAN = 0  # rhs scale: dx + dy
MODE_BIANCHINI = 1  # rhs scale: max(dx, dy)
MODE_BANACH = 2  # rhs scale: ||x - y||

_flag = os.environ.get("ENRICHEDFP_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag not in ("", "0", "false", "no")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via ENRICHEDFP_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


_CHUNK = 256  # row block size for the numpy path; bounds peak memory


def _prepare(points, images):
    x = np.ascontiguousarray(points, dtype=np.float64)
    t = np.ascontiguousarray(images, dtype=np.float64)
    if x.shape != t.shape or x.ndim != 2:
        raise ValueError(f"points/images shape mismatch: {x.shape} vs {t.shape}")
    disp = np.sqrt(np.sum((x - t) ** 2, axis=-1))
    pnorm = np.sqrt(np.sum(x**2, axis=-1))
    tnorm = np.sqrt(np.sum(t**2, axis=-1))
    return x, t, disp, pnorm, tnorm


@njit(cache=True)
def _lex_less(x, i1, j1, i2, j2):
    """True when pair (x[i1], x[j1]) precedes (x[i2], x[j2]) lexicographically."""
    d = x.shape[1]
    for c in range(d):
        if x[i1, c] < x[i2, c]:
            return True
        if x[i1, c] > x[i2, c]:
            return False
    for c in range(d):
        if x[j1, c] < x[j2, c]:
            return True
        if x[j1, c] > x[j2, c]:
            return False
    return False


@njit(cache=True)
def _violation_max_nb(x, t, disp, pnorm, tnorm, k, rate, mode, guard_eps):
    n, d = x.shape
    best = -np.inf
    bi, bj = -1, -1
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            acc = 0.0
            for c in range(d):
                v = k * (x[i, c] - x[j, c]) + (t[i, c] - t[j, c])
                acc += v * v
            num = np.sqrt(acc)
            if mode == 0:
                rhs = rate * (disp[i] + disp[j])
            elif mode == 1:
                rhs = rate * max(disp[i], disp[j])
            else:
                acc2 = 0.0
                for c in range(d):
                    w = x[i, c] - x[j, c]
                    acc2 += w * w
                rhs = rate * np.sqrt(acc2)
            guard = guard_eps * (num + rhs + pnorm[i] + pnorm[j] + tnorm[i] + tnorm[j])
            viol = (num - rhs) - guard
            if viol > best or (viol == best and _lex_less(x, i, j, bi, bj)):
                best = viol
                bi, bj = i, j
    return best, bi, bj


def _violation_chunk(x, t, disp, pnorm, tnorm, k, rate, mode, guard_eps, lo, hi):
    diff = k * (x[lo:hi, None, :] - x[None, :, :]) + (t[lo:hi, None, :] - t[None, :, :])
    num = np.sqrt(np.sum(diff**2, axis=-1))
    if mode == MODE_KANNAN:
        rhs = rate * (disp[lo:hi, None] + disp[None, :])
    elif mode == MODE_BIANCHINI:
        rhs = rate * np.maximum(disp[lo:hi, None], disp[None, :])
    else:
        rhs = rate * np.sqrt(
            np.sum((x[lo:hi, None, :] - x[None, :, :]) ** 2, axis=-1)
        )
    guard = guard_eps * (
        num + rhs + pnorm[lo:hi, None] + pnorm[None, :] + tnorm[lo:hi, None] + tnorm[None, :]
    )
    viol = (num - rhs) - guard
    idx = np.arange(lo, hi)
    viol[idx - lo, idx] = -np.inf
    return viol


def _violation_max_py(x, t, disp, pnorm, tnorm, k, rate, mode, guard_eps):
    n = x.shape[0]
    best = -np.inf
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        viol = _violation_chunk(x, t, disp, pnorm, tnorm, k, rate, mode, guard_eps, lo, hi)
        m = float(viol.max())
        if m > best:
            best = m
    bi, bj = -1, -1
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        viol = _violation_chunk(x, t, disp, pnorm, tnorm, k, rate, mode, guard_eps, lo, hi)
        for ci, cj in zip(*np.nonzero(viol == best)):
            i = lo + int(ci)
            j = int(cj)
            if bi < 0 or _pair_key(x, i, j) < _pair_key(x, bi, bj):
                bi, bj = i, j
    return best, bi, bj


def _pair_key(x, i, j):
    return tuple(x[i]) + tuple(x[j])


@njit(cache=True)
def _ratio_sup_nb(x, t, disp, k, mode, zero_num_tol):
    n, d = x.shape
    sup = -np.inf
    bi, bj = -1, -1
    zi, zj = -1, -1
    has_pos = False
    infeasible = False
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            acc = 0.0
            for c in range(d):
                v = k * (x[i, c] - x[j, c]) + (t[i, c] - t[j, c])
                acc += v * v
            num = np.sqrt(acc)
            if mode == 0:
                den = disp[i] + disp[j]
            else:
                den = max(disp[i], disp[j])
            if den == 0.0:
                if num > zero_num_tol and (
                    not infeasible or _lex_less(x, i, j, zi, zj)
                ):
                    infeasible = True
                    zi, zj = i, j
                continue
            has_pos = True
            r = num / den
            if r > sup or (r == sup and _lex_less(x, i, j, bi, bj)):
                sup = r
                bi, bj = i, j
    return sup, bi, bj, has_pos, infeasible, zi, zj


def _ratio_chunk(x, t, disp, k, mode, lo, hi):
    diff = k * (x[lo:hi, None, :] - x[None, :, :]) + (t[lo:hi, None, :] - t[None, :, :])
    num = np.sqrt(np.sum(diff**2, axis=-1))
    if mode == MODE_KANNAN:
        den = disp[lo:hi, None] + disp[None, :]
    else:
        den = np.maximum(disp[lo:hi, None], disp[None, :])
    idx = np.arange(lo, hi)
    num[idx - lo, idx] = 0.0
    den[idx - lo, idx] = -1.0  # diagonal sentinel: skipped by both branches
    return num, den


def _ratio_sup_py(x, t, disp, k, mode, zero_num_tol):
    n = x.shape[0]
    sup = -np.inf
    has_pos = False
    infeasible = False
    zi, zj = -1, -1
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        num, den = _ratio_chunk(x, t, disp, k, mode, lo, hi)
        pos = den > 0.0
        if np.any(pos):
            has_pos = True
            m = float(np.max(num[pos] / den[pos]))
            if m > sup:
                sup = m
        bad = (den == 0.0) & (num > zero_num_tol)
        for ci, cj in zip(*np.nonzero(bad)):
            i, j = lo + int(ci), int(cj)
            if not infeasible or _pair_key(x, i, j) < _pair_key(x, zi, zj):
                infeasible = True
                zi, zj = i, j
    bi, bj = -1, -1
    if has_pos:
        for lo in range(0, n, _CHUNK):
            hi = min(lo + _CHUNK, n)
            num, den = _ratio_chunk(x, t, disp, k, mode, lo, hi)
            pos = den > 0.0
            ratios = np.full(num.shape, -np.inf)
            ratios[pos] = num[pos] / den[pos]
            for ci, cj in zip(*np.nonzero(ratios == sup)):
                i, j = lo + int(ci), int(cj)
                if bi < 0 or _pair_key(x, i, j) < _pair_key(x, bi, bj):
                    bi, bj = i, j
    return sup, bi, bj, has_pos, infeasible, zi, zj


@njit(cache=True)
def _inner_min_nb(x, g):
    n, d = x.shape
    best = np.inf
    bi, bj = -1, -1
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            acc = 0.0
            for c in range(d):
                acc += (g[i, c] - g[j, c]) * (x[i, c] - x[j, c])
            if acc < best or (acc == best and _lex_less(x, i, j, bi, bj)):
                best = acc
                bi, bj = i, j
    return best, bi, bj


def _inner_min_py(x, g):
    n = x.shape[0]
    best = np.inf
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        vals = np.sum(
            (g[lo:hi, None, :] - g[None, :, :]) * (x[lo:hi, None, :] - x[None, :, :]),
            axis=-1,
        )
        idx = np.arange(lo, hi)
        vals[idx - lo, idx] = np.inf
        m = float(vals.min())
        if m < best:
            best = m
    bi, bj = -1, -1
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        vals = np.sum(
            (g[lo:hi, None, :] - g[None, :, :]) * (x[lo:hi, None, :] - x[None, :, :]),
            axis=-1,
        )
        idx = np.arange(lo, hi)
        vals[idx - lo, idx] = np.inf
        for ci, cj in zip(*np.nonzero(vals == best)):
            i, j = lo + int(ci), int(cj)
            if bi < 0 or _pair_key(x, i, j) < _pair_key(x, bi, bj):
                bi, bj = i, j
    return best, bi, bj


def violation_max(points, images, k, rate, mode, guard_eps=CHECK_GUARD_EPS, force=None):
    """Max over distinct ordered pairs of ``lhs - rhs - guard``.

    Returns ``(max_violation, (i, j))`` where the index pair is the
    lexicographically smallest argmax. ``force`` selects "nb"/"py" explicitly
    (used by the parity tests and the benchmark).
    """
    x, t, disp, pnorm, tnorm = _prepare(points, images)
    use_nb = HAVE_NUMBA if force is None else force == "nb"
    impl = _violation_max_nb if use_nb else _violation_max_py
    best, bi, bj = impl(x, t, disp, pnorm, tnorm, float(k), float(rate), int(mode), float(guard_eps))
    return float(best), (int(bi), int(bj))


def ratio_sup(points, images, k, mode, zero_num_tol=ZERO_NUM_TOL, force=None):
    """Supremum over positive-displacement pairs of ``lhs / rhs_scale``.

    Returns ``(sup, (i, j), has_positive, infeasible, (zi, zj))``; ``sup`` is
    ``-inf`` when no pair has positive displacement, and ``infeasible`` marks
    a zero-displacement pair whose numerator exceeds ``zero_num_tol``.
    """
    x, t, disp, _, _ = _prepare(points, images)
    use_nb = HAVE_NUMBA if force is None else force == "nb"
    impl = _ratio_sup_nb if use_nb else _ratio_sup_py
    sup, bi, bj, has_pos, infeasible, zi, zj = impl(
        x, t, disp, float(k), int(mode), float(zero_num_tol)
    )
    return float(sup), (int(bi), int(bj)), bool(has_pos), bool(infeasible), (int(zi), int(zj))


def inner_min(points, images, force=None):
    """Min over distinct ordered pairs of ``<g_i - g_j, x_i - x_j>``."""
    x = np.ascontiguousarray(points, dtype=np.float64)
    g = np.ascontiguousarray(images, dtype=np.float64)
    if x.shape != g.shape or x.ndim != 2:
        raise ValueError(f"points/images shape mismatch: {x.shape} vs {g.shape}")
    use_nb = HAVE_NUMBA if force is None else force == "nb"
    impl = _inner_min_nb if use_nb else _inner_min_py
    best, bi, bj = impl(x, g)
    return float(best), (int(bi), int(bj))
