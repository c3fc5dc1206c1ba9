"""Matrix systems over the free-group alphabet and their normalization.

A system assigns a complex space of dimension ``n_a`` to every letter and a
block ``H[b, a]`` to every ordered letter pair with ``ba ≠ e``.  This module
validates systems, tests irreducibility, applies the transfer operator, and
produces the normalized form (unit transfer radius, positive definite fixed
forms with the trace convention ``Σ_a tr(B_a) = Σ_a n_a``).
"""

from dataclasses import dataclass

import numpy as np

from . import freegroup

# Fixed-point residual and positivity thresholds, relative to the tuple
# Frobenius norm; double-precision headroom for block dims up to ~64.
TOL_FIX = 1e-10
TOL_PD = 1e-9

# Power iteration is driven well below TOL_FIX: downstream eigenvalue-cluster
# analysis is sensitive to sqrt of the fixed-point error.
_TARGET_RESIDUAL = 1e-14
_MAX_ITER = 10_000


class UndecidedError(RuntimeError):
    """A certification could not be completed at the working tolerance."""


class MatrixSystem:
    """Letter dimensions plus one complex block per ordered letter pair.

    Parameters
    ----------
    alphabet : freegroup.Alphabet
    dims : sequence of int
        ``dims[c]`` is the dimension attached to letter ``c``.
    blocks : mapping ``(b, a) -> array_like``
        Block of shape ``(dims[b], dims[a])`` for each pair with
        ``b != inv(a)``.  Missing pairs are treated as zero blocks (and
        flagged by :func:`validate`).
    """

    def __init__(self, alphabet, dims, blocks):
        self.alphabet = alphabet
        self.dims = tuple(int(n) for n in dims)
        if len(self.dims) != alphabet.size:
            raise ValueError("need one dimension per letter")
        self.blocks = {
            (int(b), int(a)): np.ascontiguousarray(m, dtype=complex)
            for (b, a), m in blocks.items()
        }

    def pairs(self):
        """All ordered letter pairs ``(b, a)`` with ``ba ≠ e``."""
        size = self.alphabet.size
        for b in range(size):
            for a in range(size):
                if b != a ^ 1:
                    yield b, a

    def h(self, b, a):
        """Block for the pair ``(b, a)``; zeros where none is stored."""
        block = self.blocks.get((b, a))
        if block is None:
            return np.zeros((self.dims[b], self.dims[a]), dtype=complex)
        return block

    def scaled(self, factor):
        """New system with every block multiplied by ``factor``."""
        return MatrixSystem(
            self.alphabet,
            self.dims,
            {key: factor * m for key, m in self.blocks.items()},
        )

    def __repr__(self):
        return "MatrixSystem(k=%d, dims=%s)" % (self.alphabet.k, list(self.dims))


def validate(sys):
    """Check structural soundness; return a list of violations.

    An empty list means valid.  Violations are reported with letter-pair
    locations and never raised, so callers can present all of them at once.
    """
    alpha = sys.alphabet
    violations = []
    for c in alpha.letters:
        if sys.dims[c] < 1:
            violations.append(
                "dimension for letter %s must be positive" % alpha.letter_name(c)
            )
    for (b, a), block in sys.blocks.items():
        loc = "(%s, %s)" % (alpha.letter_name(b), alpha.letter_name(a))
        if not (0 <= b < alpha.size and 0 <= a < alpha.size):
            violations.append("letter pair %s out of range" % loc)
            continue
        if block.shape != (sys.dims[b], sys.dims[a]):
            violations.append(
                "shape violation at %s: got %s, dims say %s"
                % (loc, block.shape, (sys.dims[b], sys.dims[a]))
            )
            continue
        if not np.all(np.isfinite(block)):
            violations.append("non-finite entries at %s" % loc)
            continue
        if b == a ^ 1 and np.any(block):
            violations.append("nonzero at ba = e: %s" % loc)
    for b, a in sys.pairs():
        if not np.any(sys.blocks.get((b, a))):
            violations.append(
                "zero block at (%s, %s): blocks must vanish only at ba = e"
                % (alpha.letter_name(b), alpha.letter_name(a))
            )
    return violations


def _span_basis(rows, extra, tol=1e-10):
    """Orthonormal row basis of span(rows ∪ extra); rows may be empty."""
    stack = [r for r in (rows, extra) if len(r)]
    mat = np.vstack(stack)
    # SVD keeps the dimension count robust against near-dependent products.
    _, s, vh = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, mat.shape[1]), dtype=complex)
    return vh[s > tol * s[0]]

def is_irreducible(sys):
    """Decide irreducibility via the path-span density criterion.

    For every ordered letter pair ``(a, b)`` the span of all path products
    from ``V_a`` to ``V_b`` (seeded with the identity on diagonal pairs) is
    grown until it stabilizes; the system is irreducible iff every span
    fills the whole ``n_b·n_a``-dimensional space of maps.

    Raises
    ------
    UndecidedError
        If the spans fail to stabilize within ``Σ n_a² + 2k`` rounds.
    """
    size = sys.alphabet.size
    dims = sys.dims
    # span[b][a]: orthonormal rows spanning vec'd maps V_a -> V_b.
    span = [[None] * size for _ in range(size)]
    for a in range(size):
        for b in range(size):
            seed = (
                [np.eye(dims[a], dtype=complex).ravel()]
                if a == b
                else np.zeros((0, dims[b] * dims[a]), dtype=complex)
            )
            span[b][a] = _span_basis([], seed) if a == b else seed
    l_max = sum(n * n for n in dims) + 2 * sys.alphabet.size
    for _ in range(l_max):
        grew = False
        for a in range(size):
            for b in range(size):
                new_rows = []
                for c in range(size):
                    if b == c ^ 1 or not span[c][a].shape[0]:
                        continue
                    h = sys.blocks.get((b, c))
                    if h is None or not np.any(h):
                        continue
                    basis = span[c][a].reshape(-1, dims[c], dims[a])
                    new_rows.append(np.einsum("ij,rjk->rik", h, basis).reshape(
                        -1, dims[b] * dims[a]))
                if not new_rows:
                    continue
                before = span[b][a].shape[0]
                span[b][a] = _span_basis(span[b][a], np.vstack(new_rows))
                if span[b][a].shape[0] > before:
                    grew = True
        if not grew:
            return all(
                span[b][a].shape[0] == dims[b] * dims[a]
                for a in range(size)
                for b in range(size)
            )
    raise UndecidedError("irreducibility undecided: spans did not stabilize")


def transfer_apply(sys, t):
    """Apply the transfer operator to a tuple of per-letter matrices.

    Returns the tuple ``(Σ_b H_ba† t_b H_ba)_a``.  Linear in ``t``; maps
    Hermitian tuples to Hermitian tuples and PSD tuples to PSD tuples.
    """
    for c in sys.alphabet.letters:
        if t[c].shape != (sys.dims[c], sys.dims[c]):
            raise ValueError("form tuple shape mismatch at letter %d" % c)
    out = []
    for a in sys.alphabet.letters:
        acc = np.zeros((sys.dims[a], sys.dims[a]), dtype=complex)
        for b in sys.alphabet.letters:
            if b == a ^ 1:
                continue
            h = sys.blocks.get((b, a))
            if h is not None:
                acc += h.conj().T @ t[b] @ h
        out.append(acc)
    return tuple(out)


def transfer_matrix(sys):
    """Dense matrix of the transfer operator on row-major vec'd tuples."""
    dims = sys.dims
    sizes = [n * n for n in dims]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offs[-1])
    mat = np.zeros((total, total), dtype=complex)
    for a in sys.alphabet.letters:
        for b in sys.alphabet.letters:
            if b == a ^ 1:
                continue
            h = sys.blocks.get((b, a))
            if h is None:
                continue
            mat[offs[a]:offs[a + 1], offs[b]:offs[b + 1]] += np.kron(
                h.conj().T, h.T
            )
    return mat


def spectral_radius_T(sys):
    """Spectral radius of the transfer operator (largest eigenvalue modulus)."""
    if not any(np.any(m) for m in sys.blocks.values()):
        raise ValueError("degenerate system: all blocks zero")
    return float(np.max(np.abs(np.linalg.eigvals(transfer_matrix(sys)))))


def frob_tuple(t):
    """Frobenius norm of a tuple of matrices."""
    return float(np.sqrt(sum(np.vdot(m, m).real for m in t)))


def identity_tuple(dims):
    return tuple(np.eye(n, dtype=complex) for n in dims)


def _hermitize(t):
    return tuple((m + m.conj().T) / 2 for m in t)


def _trace_normalized(t, target):
    total = sum(np.trace(m).real for m in t)
    if total <= 0:
        raise RuntimeError("B not positive definite")
    return tuple(m * (target / total) for m in t)


@dataclass(frozen=True)
class NormalizedSystem:
    """A validated irreducible system scaled to unit transfer radius.

    Attributes
    ----------
    system : MatrixSystem
        The rescaled system (blocks divided by the square root of the
        original transfer radius).
    B : tuple of ndarray
        The positive definite fixed forms, trace-normalized so that
        ``Σ_a tr(B_a) = Σ_a n_a``.
    rho_certificate : float
        Transfer radius of the stored system; 1 within tolerance.
    irreducible : bool
    fix_residual : float
        Relative fixed-point residual of ``B``.
    b_min_eig : float
        Smallest eigenvalue over the ``B_a``.
    """

    system: MatrixSystem
    B: tuple
    rho_certificate: float
    irreducible: bool
    fix_residual: float
    b_min_eig: float

    @property
    def alphabet(self):
        return self.system.alphabet

    @property
    def dims(self):
        return self.system.dims

    def h(self, b, a):
        return self.system.h(b, a)


def _power_iterate(sys, trace_target):
    """Fixed form of a radius-1 system by accelerated power iteration."""
    t = _trace_normalized(identity_tuple(sys.dims), trace_target)
    history = [t]
    residual = np.inf
    for it in range(_MAX_ITER):
        nxt = _trace_normalized(_hermitize(transfer_apply(sys, t)), trace_target)
        history.append(nxt)
        if len(history) > 3:
            history.pop(0)
        if len(history) == 3 and it % 3 == 2:
            t0, t1, t2 = history
            acc = []
            for m0, m1, m2 in zip(t0, t1, t2):
                den = m2 - 2 * m1 + m0
                num = (m2 - m1) ** 2
                safe = np.abs(den) > 1e-300
                m = np.where(safe, m2 - np.divide(num, den, where=safe,
                                                  out=np.zeros_like(num)), m2)
                acc.append(m)
            try:
                acc = _trace_normalized(_hermitize(tuple(acc)), trace_target)
                if _fix_residual(sys, acc) < _fix_residual(sys, nxt):
                    nxt = acc
                    history[-1] = acc
            except RuntimeError:
                pass
        t = nxt
        residual = _fix_residual(sys, t)
        if residual < _TARGET_RESIDUAL:
            return t, residual, it + 1
    return t, residual, _MAX_ITER


def _fix_residual(sys, t):
    image = transfer_apply(sys, t)
    return frob_tuple(tuple(i - m for i, m in zip(image, t))) / frob_tuple(t)


def _eigensolve_fixed(sys, trace_target):
    """Direct eigensolve fallback: eigenvector of T nearest eigenvalue 1."""
    mat = transfer_matrix(sys)
    vals, vecs = np.linalg.eig(mat)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    vec = vecs[:, idx]
    dims = sys.dims
    out = []
    pos = 0
    for n in dims:
        out.append(vec[pos:pos + n * n].reshape(n, n))
        pos += n * n
    t = _hermitize(tuple(out))
    total = sum(np.trace(m).real for m in t)
    if total < 0:
        t = tuple(-m for m in t)
    return _trace_normalized(t, trace_target)


def normalize(sys, tol_fix=TOL_FIX, tol_pd=TOL_PD):
    """Scale to unit transfer radius and compute the fixed forms.

    Every block is divided by the square root of the transfer radius, the
    fixed tuple ``B`` is computed by power iteration seeded with the
    identity tuple (Aitken-accelerated, direct eigensolve as fallback), and
    the result is certified: ``B`` strictly positive definite, eigenvalue 1
    of the transfer operator simple.

    Raises
    ------
    ValueError
        Invalid or reducible input.
    RuntimeError
        "B not positive definite" or "eigenvalue 1 not simple", both of
        which signal reducibility or numerical failure.
    UndecidedError
        Propagated from the irreducibility certification.
    """
    violations = validate(sys)
    if violations:
        raise ValueError("invalid system: " + "; ".join(violations))
    irreducible = is_irreducible(sys)
    if not irreducible:
        raise ValueError("system is not irreducible")
    rho = spectral_radius_T(sys)
    scaled = sys.scaled(1.0 / np.sqrt(rho))
    trace_target = float(sum(scaled.dims))
    t, residual, _ = _power_iterate(scaled, trace_target)
    if residual > 1e-12:
        t = _eigensolve_fixed(scaled, trace_target)
        residual = _fix_residual(scaled, t)
    norm_b = frob_tuple(t)
    if residual > tol_fix:
        raise RuntimeError("B not positive definite")
    min_eig = min(float(np.linalg.eigvalsh(m)[0]) for m in t)
    if min_eig <= tol_pd * norm_b:
        raise RuntimeError("B not positive definite")
    vals = np.linalg.eigvals(transfer_matrix(scaled))
    near_one = np.abs(vals - 1.0)
    near_one.sort()
    if near_one.size > 1 and near_one[1] < 1e-8:
        raise RuntimeError("eigenvalue 1 not simple")
    radius = float(np.max(np.abs(vals)))
    return NormalizedSystem(
        system=scaled,
        B=t,
        rho_certificate=radius,
        irreducible=irreducible,
        fix_residual=residual,
        b_min_eig=min_eig,
    )
