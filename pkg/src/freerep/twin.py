"""Twin systems, the pairing maps between a system and its twin, and
equivalence testing.

The twin attaches to each letter the conjugate-dual space of the inverse
letter.  In conjugate-dual coordinates the twin's blocks are plain data:
``Ĥ[b, a] = H[a⁻¹, b⁻¹]†``, which makes the construction an involution on
the nose.  Forms for the twin are recomputed by normalization rather than
transported, so the construction has no side conditions.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .systems import MatrixSystem, NormalizedSystem, normalize, frob_tuple

# Relative singular-value threshold for nullspace rank decisions, and the
# invertibility floor for equivalence tuples.
NULLSPACE_RTOL = 1e-8
TOL_INV = 1e-8


def twin_system(sys):
    """Twin of a plain system: dims swapped along the involution, blocks
    conjugate-transposed across inverted letter pairs.  An involution."""
    dims = tuple(sys.dims[c ^ 1] for c in range(sys.alphabet.size))
    blocks = {}
    for (b, a), m in sys.blocks.items():
        blocks[(a ^ 1, b ^ 1)] = m.conj().T
    return MatrixSystem(sys.alphabet, dims, blocks)


def twin(nsys):
    """Twin of a normalized system, renormalized independently.

    The twin of an irreducible system is irreducible and already has unit
    transfer radius, so normalization only recomputes the forms ``B̂``.
    """
    return normalize(twin_system(nsys.system))


def e_maps(nsys):
    """The pairing maps ``E_ab : V_b → V̂_a`` for all pairs with ``ab ≠ e``.

    ``E_ab = Σ_c H[c, a⁻¹]† B_c H[c, b]``; the terms ``c = a`` and
    ``c = b⁻¹`` vanish automatically.  For ``ab = e`` the map is zero by
    definition (the unrestricted sum would instead reproduce ``B_{a⁻¹}``),
    so those pairs are simply absent from the result.
    """
    sys = nsys.system
    size = sys.alphabet.size
    out = {}
    for a in range(size):
        for b in range(size):
            if b == a ^ 1:
                continue
            acc = np.zeros((sys.dims[a ^ 1], sys.dims[b]), dtype=complex)
            for c in range(size):
                left = sys.blocks.get((c, a ^ 1))
                right = sys.blocks.get((c, b))
                if left is None or right is None:
                    continue
                acc += left.conj().T @ nsys.B[c] @ right
            out[(a, b)] = acc
    return out


def e_lookup(E, dims, a, b):
    """E map for any ordered pair, zeros at ``ab = e``."""
    if b == a ^ 1:
        return np.zeros((dims[a ^ 1], dims[b]), dtype=complex)
    return E[(a, b)]


@dataclass
class EquivalenceResult:
    """Outcome of the intertwiner nullspace computation.

    ``status`` is one of ``equivalent``, ``inequivalent``, ``undecided``;
    ``K`` is the equivalence tuple when equivalent; ``solution_space_dim``
    is 0 or 1 for honest irreducible inputs (2 or more flags an upstream
    irreducibility bug and yields ``undecided``).
    """

    status: str
    K: Optional[tuple]
    solution_space_dim: int
    residual: float
    diagnostic: str = ""


def _intertwiner_nullspace(ns1, ns2):
    """SVD nullspace of (J_a) ↦ (H2_ba J_a − J_b H1_ba) over all pairs."""
    dims1, dims2 = ns1.dims, ns2.dims
    size = ns1.alphabet.size
    sizes = [dims2[c] * dims1[c] for c in range(size)]
    offs = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    rows = []
    for b, a in ns1.system.pairs():
        h1 = ns1.system.blocks.get((b, a))
        h2 = ns2.system.blocks.get((b, a))
        if h1 is None and h2 is None:
            continue
        h1 = ns1.h(b, a) if h1 is None else h1
        h2 = ns2.h(b, a) if h2 is None else h2
        row = np.zeros((dims2[b] * dims1[a], offs[-1]), dtype=complex)
        row[:, offs[a]:offs[a] + sizes[a]] += np.kron(h2, np.eye(dims1[a]))
        row[:, offs[b]:offs[b] + sizes[b]] -= np.kron(
            np.eye(dims2[b]), h1.T
        )
        rows.append(row)
    mat = np.vstack(rows)
    _, s, vh = np.linalg.svd(mat)
    null_dim = int(np.sum(s < NULLSPACE_RTOL * s[0])) + (mat.shape[1] - s.size)
    vecs = vh[mat.shape[1] - null_dim:].conj() if null_dim else None
    return null_dim, vecs, offs


def _unvec_tuple(vec, dims1, dims2, offs):
    out = []
    for c in range(len(dims1)):
        n2, n1 = dims2[c], dims1[c]
        out.append(vec[offs[c]:offs[c] + n2 * n1].reshape(n2, n1))
    return tuple(out)


def _pin_phase(K):
    """Deterministic phase and scale: largest entry real positive, unit norm."""
    flat = np.concatenate([m.ravel() for m in K])
    top = flat[int(np.argmax(np.abs(flat)))]
    phase = top / abs(top)
    norm = frob_tuple(K)
    return tuple(m / (phase * norm) for m in K)


def intertwining_residual(ns1, ns2, K):
    """max over pairs of ‖H2_ba K_a − K_b H1_ba‖ relative to ‖K‖."""
    worst = 0.0
    for b, a in ns1.system.pairs():
        gap = ns2.h(b, a) @ K[a] - K[b] @ ns1.h(b, a)
        worst = max(worst, float(np.linalg.norm(gap)))
    return worst / max(frob_tuple(K), 1e-300)


def solve_equivalence(ns1, ns2):
    """Decide whether two normalized irreducible systems are equivalent.

    Computes the full nullspace of the intertwining constraints.  Dimension
    0 means inequivalent; dimension 1 with an invertible representative
    means equivalent, and the representative (phase-pinned, unit norm) is
    returned as ``K``.  Any other outcome is ``undecided`` with a
    diagnostic.
    """
    if ns1.alphabet.size != ns2.alphabet.size:
        raise ValueError("dimension mismatch of alphabets")
    null_dim, vecs, offs = _intertwiner_nullspace(ns1, ns2)
    if null_dim == 0:
        return EquivalenceResult("inequivalent", None, 0, 0.0)
    if null_dim >= 2:
        return EquivalenceResult(
            "undecided",
            None,
            null_dim,
            0.0,
            diagnostic="solution space dimension %d contradicts "
            "irreducibility" % null_dim,
        )
    K = _pin_phase(_unvec_tuple(vecs[0], ns1.dims, ns2.dims, offs))
    svs = [np.linalg.svd(m, compute_uv=False) for m in K]
    scale = max(s[0] for s in svs)
    if min(s[-1] for s in svs) <= TOL_INV * scale:
        return EquivalenceResult(
            "undecided",
            None,
            1,
            0.0,
            diagnostic="one-dimensional solution space but the "
            "representative is singular",
        )
    return EquivalenceResult(
        "equivalent", K, 1, intertwining_residual(ns1, ns2, K)
    )


@dataclass
class SymmetrizedK:
    """Equivalence tuple with ``K_a† = K_{a⁻¹}`` and form-unitarity data."""

    K: tuple
    branch: str
    unitary_residual: float


def symmetrize_and_unitarize_K(result, ns1, ns2):
    """Adjust an equivalence tuple to satisfy ``K_a† = K_{a⁻¹}`` and
    ``K_a† B̂_a K_a = B_a``.

    Both the Hermitian part ``(K_a + K_{a⁻¹}†)/2`` and the anti-Hermitian
    part ``(K_a − K_{a⁻¹}†)/(2i)`` solve the intertwining equations, and in
    a one-dimensional solution space each is a scalar multiple of ``K``, so
    at least one is nonzero; the larger is kept.  Form-unitarity is then
    imposed by a single global positive rescale; the residual spread across
    letters is reported (nonzero spread would mean a scalar cannot
    unitarize, which is surfaced rather than hidden).
    """
    if result.status != "equivalent":
        raise ValueError("symmetrization requires an equivalence")
    K = result.K
    herm = tuple((K[c] + K[c ^ 1].conj().T) / 2 for c in range(len(K)))
    anti = tuple((K[c] - K[c ^ 1].conj().T) / (2j) for c in range(len(K)))
    n_h, n_a = frob_tuple(herm), frob_tuple(anti)
    assert max(n_h, n_a) > 1e-12 * frob_tuple(K), "both symmetrized parts zero"
    K, branch = (herm, "hermitian-part") if n_h >= n_a else (anti, "antihermitian-part")
    # global unitarization scalar from the trace ratio; valid because
    # K†B̂K is again a transfer fixed point, hence proportional to B
    pulled = tuple(
        K[c].conj().T @ ns2.B[c] @ K[c] for c in range(len(K))
    )
    ratio = sum(np.trace(m).real for m in pulled) / sum(
        np.trace(m).real for m in ns1.B
    )
    K = tuple(m / np.sqrt(ratio) for m in K)
    spread = 0.0
    for c in range(len(K)):
        gap = K[c].conj().T @ ns2.B[c] @ K[c] - ns1.B[c]
        spread = max(
            spread, float(np.linalg.norm(gap) / np.linalg.norm(ns1.B[c]))
        )
    return SymmetrizedK(K=K, branch=branch, unitary_residual=spread)


@dataclass
class TwinPackage:
    """A system together with its twin, pairing maps, and (when the two
    are equivalent) the symmetrized unitary equivalence tuple."""

    original: NormalizedSystem
    twin: NormalizedSystem
    E: dict
    equivalence: EquivalenceResult
    K: Optional[tuple] = None
    k_branch: str = ""
    k_unitary_residual: float = 0.0

    @property
    def equivalent(self):
        return self.equivalence.status == "equivalent"

    def e(self, a, b):
        return e_lookup(self.E, self.original.dims, a, b)

    def hhat(self, b, a):
        return self.twin.h(b, a)


def twin_package(nsys):
    """Assemble twin, pairing maps, and the equivalence decision."""
    tw = twin(nsys)
    E = e_maps(nsys)
    eq = solve_equivalence(nsys, tw)
    pkg = TwinPackage(original=nsys, twin=tw, E=E, equivalence=eq)
    if eq.status == "equivalent":
        sym = symmetrize_and_unitarize_K(eq, nsys, tw)
        pkg.K = sym.K
        pkg.k_branch = sym.branch
        pkg.k_unitary_residual = sym.unitary_residual
    return pkg
