"""Radial finite-element discretization on [0, r_max] with exterior
complex scaling.

The basis is C0 Lagrange polynomials on Gauss-Lobatto points per element
with shared endpoint nodes; the scaling radius always coincides with an
element boundary, so every element is either fully unscaled (contour
Jacobian 1) or fully scaled (Jacobian e^{i xi}).  Dirichlet u(0) = 0 is
enforced by removing the first node; the Neumann condition at r_max is
natural.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.polynomial import Polynomial

from .angular import gauss_legendre, gauss_lobatto_points


@dataclass(frozen=True)
class EcsContour:
    """Exterior-scaling path r -> r_s + (r - r_s) e^{i xi} beyond r_s."""

    r_s: float = 16.4
    xi: float = 1.4
    r_max: float = 24.3

    def __post_init__(self):
        if not 0.0 < self.r_s < self.r_max:
            raise ValueError(f"EcsContour: need 0 < r_s < r_max, got r_s={self.r_s}, r_max={self.r_max}")
        if not 0.0 <= self.xi < np.pi / 2 + 0.2:
            raise ValueError(f"EcsContour: scaling angle {self.xi} out of range")

    def map(self, r):
        r = np.asarray(r, dtype=float)
        phase = np.exp(1j * self.xi)
        out = np.where(r <= self.r_s, r + 0.0j, self.r_s + (r - self.r_s) * phase)
        return out if out.ndim else complex(out)

    def jacobian(self, r):
        r = np.asarray(r, dtype=float)
        out = np.where(r <= self.r_s, 1.0 + 0.0j, np.exp(1j * self.xi))
        return out if out.ndim else complex(out)


def contour_map(contour: EcsContour, r):
    """Complex radius on the scaling contour (identity below r_s)."""
    return contour.map(r)


@dataclass(frozen=True)
class RadialOperatorMatrix:
    """Dense banded radial operator block of dimension n_dof."""

    kind: str
    entries: np.ndarray

    @property
    def n_dof(self) -> int:
        return self.entries.shape[0]


class FemMesh:
    """Radial element mesh with per-element basis and quadrature tables."""

    def __init__(self, breakpoints: np.ndarray, order: int, contour: EcsContour, n_quad: int | None = None):
        breakpoints = np.asarray(breakpoints, dtype=float)
        if breakpoints.ndim != 1 or len(breakpoints) < 2:
            raise ValueError("mesh needs at least two breakpoints")
        if np.any(np.diff(breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if order < 1:
            raise ValueError("polynomial order must be >= 1")
        if not np.any(np.abs(breakpoints - contour.r_s) < 1e-12):
            raise ValueError("r_s must coincide with a mesh breakpoint")
        self.breakpoints = breakpoints
        self.order = order
        self.contour = contour
        self.n_elements = len(breakpoints) - 1
        self.n_nodes = self.n_elements * order + 1
        self.n_dof = self.n_nodes - 1  # Dirichlet node at r = 0 removed

        p = order
        self.ref_nodes = gauss_lobatto_points(p + 1)
        nq = n_quad if n_quad is not None else p + 4
        self.quad_ref, self.quad_w = gauss_legendre(nq)
        self.n_quad = nq

        # Lagrange basis values/derivatives at the reference quadrature points
        basis_vals = np.empty((p + 1, nq))
        basis_ders = np.empty((p + 1, nq))
        bary = np.empty(p + 1)
        for i, xi_node in enumerate(self.ref_nodes):
            others = np.delete(self.ref_nodes, i)
            poly = Polynomial.fromroots(others) / np.prod(xi_node - others)
            basis_vals[i] = poly(self.quad_ref)
            basis_ders[i] = poly.deriv()(self.quad_ref)
            bary[i] = 1.0 / np.prod(xi_node - others)
        self.basis_vals = basis_vals
        self.basis_ders = basis_ders
        self._bary_weights = bary

        lo, hi = breakpoints[:-1], breakpoints[1:]
        self.element_lengths = hi - lo
        # real-parameter quadrature radii, shape (n_elements, n_quad)
        self.quad_radii = lo[:, None] + 0.5 * (self.quad_ref + 1.0)[None, :] * self.element_lengths[:, None]
        self.element_scaled = lo >= contour.r_s - 1e-12
        # physical node coordinates (shared endpoints)
        nodes = np.empty(self.n_nodes)
        for e in range(self.n_elements):
            nodes[e * p : e * p + p + 1] = lo[e] + 0.5 * (self.ref_nodes + 1.0) * self.element_lengths[e]
        self.nodes = nodes

    def element_dofs(self, e: int) -> np.ndarray:
        """Global node indices of element e (node 0 is the Dirichlet node)."""
        p = self.order
        return np.arange(e * p, e * p + p + 1)

    def evaluate_dof(self, u_dof: np.ndarray, r) -> np.ndarray:
        """Evaluate the FEM function with dof coefficients u at radii r.

        u_dof may carry extra leading axes (e.g. one per angular channel).
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        u_nodes = np.concatenate(
            [np.zeros(u_dof.shape[:-1] + (1,), dtype=u_dof.dtype), u_dof], axis=-1
        )
        e_idx = np.clip(np.searchsorted(self.breakpoints, r, side="right") - 1, 0, self.n_elements - 1)
        t = 2.0 * (r - self.breakpoints[e_idx]) / self.element_lengths[e_idx] - 1.0
        # barycentric Lagrange evaluation on [-1, 1]
        diff = t[:, None] - self.ref_nodes[None, :]
        exact = np.abs(diff) < 1e-14
        diff = np.where(exact, 1.0, diff)
        w = self._bary_weights[None, :] / diff
        w = np.where(exact.any(axis=1)[:, None], exact.astype(float), w / w.sum(axis=1)[:, None])
        p = self.order
        cols = e_idx[:, None] * p + np.arange(p + 1)[None, :]
        return np.einsum("pk,...pk->...p", w, u_nodes[..., cols])


def build_mesh(
    contour: EcsContour,
    elements: int,
    order: int,
    outer_elements: int | None = None,
    first_element: float = 0.1,
    extra_breakpoints: tuple = (),
    n_quad: int | None = None,
) -> FemMesh:
    """Mesh with geometric grading on [0, r_s] and uniform elements beyond.

    `elements` is the total element count; `outer_elements` of them cover
    the scaled region (a proportional default is used when omitted).
    Points in `extra_breakpoints` snap the nearest interior breakpoint,
    placing potential kinks (the O-H bond radius) on element boundaries.
    """
    if elements < 2:
        raise ValueError("build_mesh: need at least 2 elements (one per contour region)")
    if outer_elements is None:
        outer_elements = max(1, min(elements - 1, round(elements * (contour.r_max - contour.r_s) / contour.r_max)))
    if not 1 <= outer_elements < elements:
        raise ValueError("build_mesh: outer_elements must leave at least one inner element")
    inner = elements - outer_elements

    h1 = min(first_element, contour.r_s / inner)
    if inner == 1 or abs(h1 - contour.r_s / inner) < 1e-12:
        bp_in = np.linspace(0.0, contour.r_s, inner + 1)
    else:
        # geometric ratio g with h1 (g^n - 1)/(g - 1) = r_s
        lo_g, hi_g = 1.0 + 1e-12, 4.0
        for _ in range(200):
            g = 0.5 * (lo_g + hi_g)
            total = h1 * (g**inner - 1.0) / (g - 1.0)
            if total < contour.r_s:
                lo_g = g
            else:
                hi_g = g
        steps = h1 * g ** np.arange(inner)
        bp_in = np.concatenate(([0.0], np.cumsum(steps)))
        bp_in *= contour.r_s / bp_in[-1]
    bp_out = np.linspace(contour.r_s, contour.r_max, outer_elements + 1)
    bp = np.concatenate((bp_in, bp_out[1:]))

    for x in extra_breakpoints:
        if not 0.0 < x < contour.r_s:
            continue
        k = int(np.argmin(np.abs(bp - x)))
        if k == 0 or abs(bp[k] - contour.r_s) < 1e-12:
            k = int(np.argmin(np.abs(bp[1:-1] - x))) + 1
        old = bp[k]
        bp[k] = x
        if np.any(np.diff(bp) <= 0):
            bp[k] = old
            warnings.warn(f"extra breakpoint {x} could not be snapped; mesh left unchanged")
    return FemMesh(bp, order, contour, n_quad=n_quad)


# ---------------------------------------------------------------------------
# elemental/global operator matrices
# ---------------------------------------------------------------------------

def _assemble_global(mesh: FemMesh, element_matrix) -> np.ndarray:
    n = mesh.n_nodes
    out = np.zeros((n, n), dtype=complex)
    for e in range(mesh.n_elements):
        idx = mesh.element_dofs(e)
        out[np.ix_(idx, idx)] += element_matrix(e)
    return out[1:, 1:]  # strike the r = 0 Dirichlet node


def _element_weight_matrix(mesh: FemMesh, e: int, weights: np.ndarray) -> np.ndarray:
    """(p+1, p+1) element matrix int f_a f_b w(r) dr with w given at quad points."""
    h = mesh.element_lengths[e]
    scaled = mesh.basis_vals * (mesh.quad_w * weights)[None, :]
    return 0.5 * h * (scaled @ mesh.basis_vals.T)


def overlap_matrix(mesh: FemMesh, contour: EcsContour, region: str = "all") -> RadialOperatorMatrix:
    """S_ab = int f_a f_b J dr (complex-symmetric; real SPD at xi = 0)."""
    sel = _region_mask(mesh, contour, region)

    def el(e):
        if not sel[e]:
            return np.zeros((mesh.order + 1, mesh.order + 1))
        jac = contour.jacobian(mesh.quad_radii[e, 0])
        return jac * _element_weight_matrix(mesh, e, np.ones(mesh.n_quad))

    return RadialOperatorMatrix("overlap", _assemble_global(mesh, el))


def kinetic_matrix(mesh: FemMesh, contour: EcsContour, l: int) -> RadialOperatorMatrix:
    """Radial kinetic block (1/2) int f_a' f_b' J^{-1} dr + centrifugal term."""
    if l < 0:
        raise ValueError("kinetic_matrix: l must be >= 0")

    def el(e):
        h = mesh.element_lengths[e]
        jac = contour.jacobian(mesh.quad_radii[e, 0])
        dmat = mesh.basis_ders * mesh.quad_w[None, :]
        out = (1.0 / jac) * (1.0 / h) * (dmat @ mesh.basis_ders.T)
        if l > 0:
            z = contour.map(mesh.quad_radii[e])
            out = out + jac * (0.5 * l * (l + 1)) * _element_weight_matrix(mesh, e, 1.0 / z**2)
        return out

    return RadialOperatorMatrix(f"kinetic(l={l})", _assemble_global(mesh, el))


def potential_matrix(mesh: FemMesh, contour: EcsContour, v, region: str = "all") -> RadialOperatorMatrix:
    """V_ab = int f_a v(contour(r)) f_b J dr, restricted to a contour region.

    `v` is either a callable, invoked once per element with the (possibly
    complex) contour radii of the quadrature points, or a precomputed
    sample array of shape (n_elements, n_quad).  Evaluation errors
    propagate with the offending element's radial location attached.
    """
    sel = _region_mask(mesh, contour, region)
    samples = None if callable(v) else np.asarray(v)
    if samples is not None and samples.shape != (mesh.n_elements, mesh.n_quad):
        raise ValueError("potential sample array must have shape (n_elements, n_quad)")

    def el(e):
        if not sel[e]:
            return np.zeros((mesh.order + 1, mesh.order + 1))
        if samples is not None:
            values = samples[e]
        else:
            z = contour.map(mesh.quad_radii[e]) if mesh.element_scaled[e] else mesh.quad_radii[e]
            try:
                values = np.asarray(v(z))
            except Exception as exc:
                raise RuntimeError(
                    f"potential evaluation failed on element {e}, r in "
                    f"[{mesh.breakpoints[e]:.4g}, {mesh.breakpoints[e+1]:.4g}]"
                ) from exc
        jac = contour.jacobian(mesh.quad_radii[e, 0])
        return jac * _element_weight_matrix(mesh, e, values)

    return RadialOperatorMatrix("potential", _assemble_global(mesh, el))


def moment_r_matrix(mesh: FemMesh, contour: EcsContour) -> RadialOperatorMatrix:
    """R_ab = int f_a contour(r) f_b J dr (dipole radial factor)."""

    def el(e):
        z = contour.map(mesh.quad_radii[e])
        jac = contour.jacobian(mesh.quad_radii[e, 0])
        return jac * _element_weight_matrix(mesh, e, z)

    return RadialOperatorMatrix("moment_r", _assemble_global(mesh, el))


def _region_mask(mesh: FemMesh, contour: EcsContour, region: str) -> np.ndarray:
    if region == "all":
        return np.ones(mesh.n_elements, dtype=bool)
    if region == "inner":
        return ~mesh.element_scaled
    if region == "outer":
        return mesh.element_scaled.copy()
    raise ValueError(f"unknown region {region!r}")
