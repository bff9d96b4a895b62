"""Targeted solution of the complex generalized eigenproblem, orbital
labeling of the field-free spectrum, and continuation of resonance
families along field sweeps.

The solver shift-inverts around a complex shift: the pencil (H, S) is
mapped to the standard operator (H - sigma S)^{-1} S whose dominant
eigenvalues theta correspond to pencil eigenvalues E = sigma + 1/theta
nearest the shift.  Neither symmetry nor Hermiticity of H is assumed.
"""

from __future__ import annotations

import sys
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import FieldSpec, HamiltonianPair

ORBITAL_LABELS = ("1a1", "2a1", "1b2", "3a1", "1b1")

# widths below this magnitude are numerical noise (the smallest tabulated
# half-widths in the tunneling regime are ~1e-12)
HALF_WIDTH_FLOOR = 1e-12

RESIDUAL_TOL = 1e-8

_RNG_SEED = 987114  # fixed solver start vector for bit-reproducible output


@dataclass
class EigenSolution:
    """One converged eigenpair of H v = E S v."""

    eigenvalue: complex
    eigenvector: np.ndarray
    residual: float


@dataclass
class Resonance:
    """A labeled Stark resonance: position Re E and half-width -Im E."""

    position: float
    half_width: float | None
    orbital: str
    field: FieldSpec
    l_max: int
    na_flag: bool

    @property
    def width_gamma(self) -> float | None:
        return None if self.half_width is None else 2.0 * self.half_width


class ContinuationBreak(RuntimeError):
    """Raised when no solve candidate is close enough to the previous step."""


def half_width_or_na(im: float) -> float | None:
    """Half-width -Im(E), or None when below resolution (NA policy).

    Positive imaginary parts and magnitudes under the 1e-12 floor are
    classified NA rather than reported as physical widths.
    """
    if abs(im) < HALF_WIDTH_FLOOR or im > 0:
        return None
    return -im


def resonance_from_eigenvalue(ev: complex, orbital: str, fs: FieldSpec, l_max: int) -> Resonance:
    hw = half_width_or_na(ev.imag)
    return Resonance(
        position=float(ev.real),
        half_width=hw,
        orbital=orbital,
        field=fs,
        l_max=l_max,
        na_flag=hw is None,
    )


# ---------------------------------------------------------------------------
# shift-invert solves
# ---------------------------------------------------------------------------

def _interleave_permutation(n_channels: int, n_radial: int) -> np.ndarray:
    """Reorder channel-major dofs to radial-major, shrinking the LU band."""
    return np.arange(n_channels * n_radial).reshape(n_channels, n_radial).T.ravel()


def _pencil_residuals(h, s, eigvals, vecs) -> np.ndarray:
    res = np.empty(len(eigvals))
    for i, (ev, v) in enumerate(zip(eigvals, vecs.T)):
        nrm = np.linalg.norm(v)
        res[i] = np.linalg.norm(h @ v - ev * (s @ v)) / nrm
    return res


def _solve_dense(hp: HamiltonianPair, shift: complex, k: int) -> list[EigenSolution]:
    h = hp.h.toarray()
    s = hp.s.toarray()
    vals, vecs = sla.eig(h, s)
    finite = np.isfinite(vals)
    vals, vecs = vals[finite], vecs[:, finite]
    order = np.argsort(np.abs(vals - shift))[:k]
    vals, vecs = vals[order], vecs[:, order]
    res = _pencil_residuals(hp.h, hp.s, vals, vecs)
    return [
        EigenSolution(complex(ev), vecs[:, i] / np.linalg.norm(vecs[:, i]), float(res[i]))
        for i, ev in enumerate(vals)
    ]


def solve_near(
    hp: HamiltonianPair,
    shift: complex,
    k: int = 6,
    ncv: int | None = None,
    dense_threshold: int = 2000,
) -> list[EigenSolution]:
    """k eigenpairs of H v = E S v nearest the shift, sorted by distance.

    Singular factorizations retry with the shift perturbed by +1e-6i (up
    to three times); Arnoldi non-convergence falls back to a dense
    full-spectrum solve for small problems and raises otherwise.
    """
    if k < 1:
        raise ValueError("solve_near: k must be >= 1")
    n = hp.dimension
    if n <= dense_threshold or k >= n - 1:
        return _solve_dense(hp, shift, min(k, n))

    perm = _interleave_permutation(hp.n_channels, hp.n_radial)
    s_perm = hp.s[perm, :][:, perm].tocsr()
    h_perm = hp.h[perm, :][:, perm].tocsr()

    sigma = complex(shift)
    lu = None
    for attempt in range(3):
        try:
            lu = spla.splu((h_perm - sigma * s_perm).tocsc())
            break
        except RuntimeError as exc:
            print(f"solve_near: factorization failed at shift {sigma} ({exc}); perturbing",
                  file=sys.stderr)
            sigma = sigma + 1e-6j
    if lu is None:
        raise RuntimeError(f"solve_near: factorization singular after 3 shift perturbations near {shift}")

    op = spla.LinearOperator(
        (n, n), matvec=lambda v: lu.solve(s_perm @ v), dtype=complex
    )
    rng = np.random.default_rng(_RNG_SEED)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    n_cv = ncv if ncv is not None else max(30, 2 * k + 12)
    n_cv = min(n_cv, n - 1)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sp.SparseEfficiencyWarning)
            theta, xs = spla.eigs(op, k=k, which="LM", v0=v0, ncv=n_cv, maxiter=5000)
    except spla.ArpackNoConvergence as exc:
        if n <= 4 * dense_threshold:
            print(f"solve_near: Arnoldi stalled near {shift}; dense fallback", file=sys.stderr)
            return _solve_dense(hp, shift, k)
        raise RuntimeError(
            f"solve_near: no convergence near shift {shift}: {exc}"
        ) from exc

    keep = np.abs(theta) > 1e-14
    theta, xs = theta[keep], xs[:, keep]
    eigvals = sigma + 1.0 / theta

    # invert the bandwidth permutation back to channel-major layout
    inv = np.empty_like(perm)
    inv[perm] = np.arange(n)
    xs = xs[inv, :]

    res = _pencil_residuals(hp.h, hp.s, eigvals, xs)
    order = np.argsort(np.abs(eigvals - shift))
    out = []
    for i in order:
        v = xs[:, i] / np.linalg.norm(xs[:, i])
        out.append(EigenSolution(complex(eigvals[i]), v, float(res[i])))
    bad = [sol for sol in out if sol.residual > RESIDUAL_TOL]
    if bad:
        worst = max(s.residual for s in bad)
        print(f"solve_near: {len(bad)} eigenpair(s) above residual tolerance "
              f"(worst {worst:.2e}) near shift {shift}", file=sys.stderr)
    return out


# ---------------------------------------------------------------------------
# labeling and continuation
# ---------------------------------------------------------------------------

def bound_states(solutions, width_tol: float = 1e-8) -> list[EigenSolution]:
    """Distinct bound states (Re E < 0, |Im E| below tolerance), deepest first."""
    found: list[EigenSolution] = []
    for sol in solutions:
        ev = sol.eigenvalue
        if ev.real >= 0 or abs(ev.imag) > width_tol:
            continue
        if any(abs(ev - f.eigenvalue) < 1e-9 for f in found):
            continue
        found.append(sol)
    found.sort(key=lambda s: s.eigenvalue.real)
    return found


def classify_field_free(solutions) -> dict[str, EigenSolution]:
    """Label the five deepest field-free bound states 1a1..1b1 by energy."""
    bound = bound_states(solutions)
    if len(bound) < 5:
        raise RuntimeError(
            f"classify_field_free: need at least 5 bound states, found {len(bound)}"
        )
    return dict(zip(ORBITAL_LABELS, bound[:5]))


def continue_resonance(prev: EigenSolution, candidates, max_jump: float = 0.05) -> EigenSolution:
    """Pick the candidate continuing a resonance family from `prev`.

    Nearest eigenvalue wins; near-ties are broken by the larger
    eigenvector overlap modulus with the previous step.  A nearest
    distance above `max_jump` means the field step was too large.
    """
    cands = list(candidates)
    if not cands:
        raise ValueError("continue_resonance: empty candidate list")
    dists = [abs(c.eigenvalue - prev.eigenvalue) for c in cands]
    order = np.argsort(dists)
    best = cands[order[0]]
    if len(order) > 1 and dists[order[1]] - dists[order[0]] < 1e-10:
        tied = [c for c, d in zip(cands, dists) if d - dists[order[0]] < 1e-10]
        best = max(tied, key=lambda c: abs(np.vdot(prev.eigenvector, c.eigenvector)))
    if abs(best.eigenvalue - prev.eigenvalue) > max_jump:
        raise ContinuationBreak(
            f"nearest candidate {best.eigenvalue:.6g} is "
            f"{abs(best.eigenvalue - prev.eigenvalue):.3g} from previous "
            f"{prev.eigenvalue:.6g} (limit {max_jump})"
        )
    return best


# default search shifts for the field-free spectrum of the water model;
# the two deep orbitals sit far below the valence triple
FIELD_FREE_SHIFTS = (-0.60 + 0.0j, -1.35 + 0.0j, -18.0 + 0.0j)


def find_field_free(
    operators,
    shifts=FIELD_FREE_SHIFTS,
    k_valence: int = 10,
) -> dict[str, EigenSolution]:
    """Solve the field-free problem near a ladder of shifts and label orbitals.

    Extends the ladder downward automatically if fewer than five bound
    states appear near the default shifts.
    """
    hp = operators.hamiltonian(FieldSpec.zero())
    pool: list[EigenSolution] = []
    for sigma in shifts:
        pool.extend(solve_near(hp, sigma, k=k_valence))
    extra = 0
    deepest = min((s.eigenvalue.real for s in bound_states(pool)), default=-1.0)
    while len(bound_states(pool)) < 5 and extra < 6:
        deepest *= 2.5
        pool.extend(solve_near(hp, deepest + 0.0j, k=6))
        extra += 1
    return classify_field_free(pool)
