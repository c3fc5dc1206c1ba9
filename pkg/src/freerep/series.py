"""Sphere sums of squared matrix coefficients, growth-exponent fits,
Haagerup bound checks, and the good-vector probe.

The sphere sums come from direct enumeration of reduced words with the
geodesic block products extended one letter at a time; the three-part
split of each coefficient (straight product, pairing bracket, backward
product) makes a word's value computable from its parent's state in a
few small matrix multiplies.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .functions import norm as f_norm
from .twin import e_maps

# enumeration budget in node-cost units (nodes × max_dim³); covers k = 2
# with 1-dim letters up to n = 12
BUDGET = 1_062_880


def default_threads():
    """Worker count from FREEREP_THREADS; 1 when unset or invalid."""
    raw = os.environ.get("FREEREP_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class CoefficientSeries:
    """Sphere sums ``s_n = Σ_{|x|=n} |⟨v, π(x)w⟩|²``.

    ``cutoff`` marks a series truncated by the enumeration budget; in that
    case ``nmax`` is the last computed index, not the requested one.
    """

    s: tuple
    v_norm: float
    w_norm: float
    cutoff: bool
    nmax: int


def budget_nmax(nsys, nmax):
    """Largest horizon whose cumulative enumeration cost fits the budget."""
    size = nsys.alphabet.size
    unit = max(nsys.dims) ** 3
    total = 0
    n = 0
    nodes = size
    while n < nmax:
        total += nodes * unit
        if total > BUDGET:
            break
        n += 1
        nodes *= size - 1
    return n


def _first_shell_vectors(f):
    nsys = f.system
    out = []
    for a in nsys.alphabet.letters:
        vec = f.coeffs.get(((), a))
        if vec is None:
            vec = np.zeros(nsys.dims[a], dtype=complex)
        out.append(vec)
    return out


def _subtree_matrix(nsys, E, va, wa, r, u, first, nmax):
    """Partial sums over words starting with ``first``; matrix blocks."""
    acc = [0.0] * nmax
    vf = va[first]
    uf = u[first]
    h = nsys.h

    def rec(last, m, p, nm, n):
        lastinv = last ^ 1
        phi = ((m @ vf).conj() @ r[last]
               + vf.conj() @ nm @ wa[lastinv]
               + uf @ p @ wa[lastinv])
        acc[n - 1] += abs(complex(phi)) ** 2
        if n == nmax:
            return
        mh = m.conj().T
        for c in nsys.alphabet.letters:
            if c == lastinv:
                continue
            step = h(lastinv, c ^ 1)
            rec(c, h(c, last) @ m, p @ step,
                nm @ step + mh @ E[(lastinv, c ^ 1)], n + 1)

    eye = np.eye(nsys.dims[first], dtype=complex)
    eyeinv = np.eye(nsys.dims[first ^ 1], dtype=complex)
    zero = np.zeros((nsys.dims[first], nsys.dims[first ^ 1]), dtype=complex)
    rec(first, eye, eyeinv, zero, 1)
    return acc


def _subtree_scalar(nsys, E, va, wa, r, u, first, nmax):
    """Same recursion with plain complex arithmetic (all letters 1-dim)."""
    acc = [0.0] * nmax
    size = nsys.alphabet.size
    hs = {}
    for b in nsys.alphabet.letters:
        for a in nsys.alphabet.letters:
            hs[(b, a)] = complex(nsys.h(b, a)[0, 0]) if b != a ^ 1 else 0j
    es = {key: complex(val[0, 0]) for key, val in E.items()}
    vf = complex(va[first][0])
    uf = complex(u[first][0])
    vfc = vf.conjugate()
    rs = [complex(x[0]) for x in r]
    ws = [complex(x[0]) for x in wa]
    letters = tuple(range(size))

    def rec(last, m, p, nm, n):
        lastinv = last ^ 1
        phi = (m * vf).conjugate() * rs[last] + vfc * nm * ws[lastinv] \
            + uf * p * ws[lastinv]
        acc[n - 1] += phi.real * phi.real + phi.imag * phi.imag
        if n == nmax:
            return
        mc = m.conjugate()
        for c in letters:
            if c == lastinv:
                continue
            step = hs[(lastinv, c ^ 1)]
            rec(c, hs[(c, last)] * m, p * step,
                nm * step + mc * es[(lastinv, c ^ 1)], n + 1)

    rec(first, 1.0 + 0j, 1.0 + 0j, 0j, 1)
    return acc


def sphere_sums(v, w, nmax, threads=None):
    """Series of sphere sums for two depth-0 canonical families.

    Enumeration runs over reduced words up to the budgeted horizon; a
    requested ``nmax`` beyond it yields a partial series with the
    ``cutoff`` flag set.  Subtrees by first letter are independent and
    reduced in fixed letter order, so results are deterministic for any
    thread count.
    """
    if v.system is not w.system:
        raise ValueError("system mismatch")
    if v.depth != 0 or w.depth != 0:
        raise ValueError("sphere sums require depth-0 canonical families")
    nsys = v.system
    if threads is None:
        threads = default_threads()
    eff = budget_nmax(nsys, nmax)
    E = e_maps(nsys)
    va = _first_shell_vectors(v)
    wa = _first_shell_vectors(w)
    s0 = abs(sum(
        complex(va[a].conj() @ nsys.B[a] @ wa[a])
        for a in nsys.alphabet.letters
    )) ** 2
    r = []
    u = []
    for t in nsys.alphabet.letters:
        r.append(sum(
            nsys.h(b, t).conj().T @ nsys.B[b] @ wa[b]
            for b in nsys.alphabet.letters
        ))
        u.append(sum(
            va[a].conj() @ nsys.B[a] @ nsys.h(a, t ^ 1)
            for a in nsys.alphabet.letters
        ))
    subtree = _subtree_scalar if max(nsys.dims) == 1 else _subtree_matrix
    args = [(nsys, E, va, wa, r, u, first, eff)
            for first in nsys.alphabet.letters]
    if eff == 0:
        partials = []
    elif threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(lambda a: subtree(*a), args))
    else:
        partials = [subtree(*a) for a in args]
    sums = [0.0] * eff
    for part in partials:
        for n in range(eff):
            sums[n] += part[n]
    return CoefficientSeries(
        s=(s0,) + tuple(sums),
        v_norm=f_norm(v),
        w_norm=f_norm(w),
        cutoff=eff < nmax,
        nmax=eff,
    )


def haagerup_violations(series, slack=1e-9):
    """Indices where ``s_n`` exceeds ``(n+1)²‖v‖²‖w‖²`` beyond roundoff."""
    bound_scale = (series.v_norm * series.w_norm) ** 2
    return [
        n for n, s in enumerate(series.s)
        if s > (n + 1) ** 2 * bound_scale * (1 + slack) + slack
    ]


@dataclass(frozen=True)
class ExponentFit:
    """Log-log slope fit of a sphere-sum series.

    ``p_hat = slope + 1`` clamped to [1, 3]; ``confidence`` decays with
    the rms log-residual of the fit (heuristic, finite horizon).
    """

    p_hat: float
    slope: float
    confidence: float
    window: tuple
    n_points: int
    residual_rms: float


def exponent_fit(series, burn_in=3):
    """Fit ``s_n ~ n^{p−1}`` over ``n ∈ [burn_in, nmax]``.

    Raises
    ------
    ValueError
        "all-zero series" or "series too short" (fewer than 6 usable
        points beyond burn-in).
    """
    s = series.s
    top = max(s)
    if top <= 0.0:
        raise ValueError("all-zero series")
    pts = [(n, sn) for n, sn in enumerate(s)
           if n >= burn_in and sn > 1e-14 * top]
    if len(pts) < 6:
        raise ValueError("series too short")
    logn = np.log([p[0] for p in pts])
    logs = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(logn, logs, 1)
    resid = logs - (slope * logn + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    p_hat = float(np.clip(slope + 1.0, 1.0, 3.0))
    return ExponentFit(
        p_hat=p_hat, slope=float(slope), confidence=float(np.exp(-rms)),
        window=(pts[0][0], pts[-1][0]), n_points=len(pts), residual_rms=rms,
    )


@dataclass(frozen=True)
class PhiEpsNorm:
    """Truncated ``‖φ_ε‖² = Σ s_n e^{−εn}`` with its Haagerup tail bound."""

    value: float
    tail_bound: float
    tail_ok: bool


def phi_eps_norm(series, eps):
    """Evaluate the damped sum with a quadratic-growth tail estimate.

    The tail bound sums ``(n+1)² e^{−εn}`` times the norm scale past the
    horizon; ``tail_ok`` certifies it below ``1e−6`` of the partial sum.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    value = float(sum(sn * np.exp(-eps * n) for n, sn in enumerate(series.s)))
    scale = (series.v_norm * series.w_norm) ** 2
    tail = 0.0
    n = series.nmax + 1
    while True:
        term = (n + 1) ** 2 * np.exp(-eps * n) * scale
        tail += term
        if term < 1e-18 * max(value, tail):
            break
        n += 1
    return PhiEpsNorm(value=value, tail_bound=float(tail),
                      tail_ok=tail < 1e-6 * value if value > 0 else False)


@dataclass(frozen=True)
class GoodVectorVerdict:
    """Finite-horizon boundedness probe; explicitly heuristic."""

    sup_s: float
    bounded: bool
    label: str
    heuristic: bool = True


def good_vector_verdict(series):
    """Ratio test over the last third of the series."""
    s = series.s
    lo = max(1, (2 * len(s)) // 3)
    ratios = [s[n + 1] / s[n] for n in range(lo, len(s) - 1) if s[n] > 0
              and s[n + 1] > 0]
    bounded = not ratios or float(np.mean(ratios)) <= 1.05
    return GoodVectorVerdict(
        sup_s=float(max(s)), bounded=bounded,
        label="GVB-plausible" if bounded else "GVB-implausible",
    )


def good_vector_probe(v, nmax, threads=None):
    """Sphere sums of ``v`` against itself plus the boundedness verdict."""
    return good_vector_verdict(sphere_sums(v, v, nmax, threads=threads))
