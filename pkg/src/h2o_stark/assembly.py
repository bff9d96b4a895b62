"""Assembly of the complex non-Hermitian generalized eigenproblem
H c = E S c over the tensor basis (radial dof) x (angular channel).

Channels couple through the multipole potential (even mu, lambda up to
2*l_max) and through the external-field dipole operator (lambda = 1).
The eigenvector layout is channel-major, radial-minor, with channels in
lexicographic (l, m) order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .angular import GauntTable, channels
from .potential import MultipoleExpansion, v_center, v_tail
from .radial_fem import (
    EcsContour,
    FemMesh,
    kinetic_matrix,
    moment_r_matrix,
    overlap_matrix,
    potential_matrix,
)


@dataclass(frozen=True)
class FieldSpec:
    """External dc force on the electron (atomic units).

    `direction` is one of x, y, z, xz_plane or none; for the xz_plane mode
    the dimensionless fractions (f_x, f_z) fix the orientation and F_o
    scales the magnitude, F_x = F_o f_x >= 0 and F_z = F_o f_z.
    """

    direction: str = "none"
    magnitude: float = 0.0
    f_x: float = 0.0
    f_z: float = 0.0
    F_x: float = 0.0
    F_y: float = 0.0
    F_z: float = 0.0
    F_o: float = 0.0

    @classmethod
    def zero(cls) -> "FieldSpec":
        return cls()

    @classmethod
    def along(cls, axis: str, strength: float) -> "FieldSpec":
        """Force of the given strength along a Cartesian axis."""
        if axis not in ("x", "y", "z"):
            raise ValueError(f"FieldSpec.along: unknown axis {axis!r}")
        if strength == 0.0:
            return cls.zero()
        comp = {"F_" + axis: strength}
        fx = 1.0 if axis == "x" else 0.0
        fz = 1.0 if axis == "z" else 0.0
        return cls(
            direction=axis,
            magnitude=abs(strength),
            f_x=fx,
            f_z=fz,
            F_o=strength,
            **comp,
        )

    @classmethod
    def in_xz_plane(cls, magnitude: float, f_z: float, f_x: float) -> "FieldSpec":
        """Force of fixed magnitude oriented by fractions (f_z, f_x), f_x >= 0."""
        if f_x < 0:
            raise ValueError("in_xz_plane: f_x must be >= 0 (x-reversal symmetry)")
        norm = math.hypot(f_x, f_z)
        if norm == 0.0:
            raise ValueError("in_xz_plane: fractions must not both vanish")
        fo = magnitude / norm
        return cls(
            direction="xz_plane",
            magnitude=magnitude,
            f_x=f_x,
            f_z=f_z,
            F_o=fo,
            F_x=fo * f_x,
            F_z=fo * f_z,
        )

    @property
    def angle(self) -> float:
        """Orientation angle from the x toward the z axis, arctan(f_z/f_x)."""
        return math.atan2(self.f_z, self.f_x)

    @property
    def is_zero(self) -> bool:
        return self.F_x == 0.0 and self.F_y == 0.0 and self.F_z == 0.0


_C1 = math.sqrt(2.0 * math.pi / 3.0)  # half the inverse normalization of Y_1^{+-1}
_C0 = math.sqrt(4.0 * math.pi / 3.0)


def field_coefficients(fs: FieldSpec) -> list[tuple[int, complex]]:
    """Expansion of the field potential -F.r over r Y_1^mu.

    Returns (mu, coefficient) pairs such that
    -F.r = r * sum_mu coeff_mu Y_1^mu(theta, phi); the empty list marks
    the field-free mode.
    """
    acc: dict[int, complex] = {}
    if fs.F_z != 0.0:
        acc[0] = acc.get(0, 0.0) - fs.F_z * _C0
    if fs.F_x != 0.0:
        # sin(theta)cos(phi) = sqrt(2 pi/3) (Y_1^-1 - Y_1^+1)
        acc[-1] = acc.get(-1, 0.0) - fs.F_x * _C1
        acc[+1] = acc.get(+1, 0.0) + fs.F_x * _C1
    if fs.F_y != 0.0:
        # sin(theta)sin(phi) = i sqrt(2 pi/3) (Y_1^-1 + Y_1^+1)
        acc[-1] = acc.get(-1, 0.0) - 1j * fs.F_y * _C1
        acc[+1] = acc.get(+1, 0.0) - 1j * fs.F_y * _C1
    return sorted((mu, c) for mu, c in acc.items() if c != 0.0)


@dataclass
class HamiltonianPair:
    """Assembled Hamiltonian and overlap with basis metadata."""

    h: sp.csr_matrix
    s: sp.csr_matrix
    l_max: int
    n_radial: int
    field: FieldSpec
    contour: EcsContour
    mesh: FemMesh = field(repr=False, default=None)

    @property
    def dimension(self) -> int:
        return self.h.shape[0]

    @property
    def n_channels(self) -> int:
        return (self.l_max + 1) ** 2


class StarkOperators:
    """Field-independent operator bundle for one basis configuration.

    All radial blocks and channel couplings are precomputed once;
    `hamiltonian(field)` then costs only three sparse-matrix additions,
    which makes field sweeps cheap.
    """

    def __init__(
        self,
        mesh: FemMesh,
        contour: EcsContour,
        multipoles: MultipoleExpansion,
        gaunt_table: GauntTable,
        l_max: int,
    ):
        if multipoles.lambda_max < 2 * l_max:
            raise ValueError(
                f"multipole expansion truncated at {multipoles.lambda_max}, need 2*l_max = {2 * l_max}"
            )
        if gaunt_table.l_max < l_max:
            raise ValueError("Gaunt table does not cover the requested l_max")
        self.mesh = mesh
        self.contour = contour
        self.multipoles = multipoles
        self.gaunt = gaunt_table
        self.l_max = l_max
        self.channels = channels(l_max)
        n_ch = len(self.channels)
        ident = sp.identity(n_ch, format="csr")

        s_rad = overlap_matrix(mesh, contour).entries
        r_rad = moment_r_matrix(mesh, contour).entries
        self.s_radial = s_rad
        self.s = sp.kron(ident, sp.csr_matrix(s_rad), format="csr")

        # spherically symmetric part: oxygen inside r_s, Coulomb tail beyond
        oxy = multipoles.geometry.oxygen
        p_core = (
            potential_matrix(mesh, contour, lambda z: v_center(oxy, np.real(z)), region="inner").entries
            + potential_matrix(mesh, contour, v_tail, region="outer").entries
        )

        # multipole radial coefficients cached on the union of quadrature nodes
        lam_max = multipoles.lambda_max
        v_cache = multipoles.v_lam(mesh.quad_radii.ravel())
        v_cache = v_cache.reshape(lam_max + 1, mesh.n_elements, mesh.n_quad)

        blocks = [
            sp.block_diag(
                [sp.csr_matrix(kinetic_matrix(mesh, contour, ch.l).entries + p_core) for ch in self.channels],
                format="csr",
            )
        ]
        for lam in range(min(lam_max, 2 * l_max) + 1):
            weights = {
                mu: multipoles.angular_factor(lam, mu)
                for mu in range(-lam, lam + 1)
                if multipoles.angular_factor(lam, mu) != 0.0
            }
            if not weights:
                continue
            c_lam = gaunt_table.coupling_matrix(lam, weights)
            if not np.any(c_lam):
                continue
            p_lam = potential_matrix(mesh, contour, v_cache[lam], region="inner").entries
            blocks.append(sp.kron(sp.csr_matrix(c_lam), sp.csr_matrix(p_lam), format="csr"))
        self.h0 = sum(blocks).tocsr()

        # unit-strength dipole operators per Cartesian direction
        r_sp = sp.csr_matrix(r_rad)
        self.dipole = {}
        for axis in ("x", "y", "z"):
            coeffs = dict(field_coefficients(FieldSpec.along(axis, 1.0)))
            c_mat = gaunt_table.coupling_matrix(1, coeffs)
            self.dipole[axis] = sp.kron(sp.csr_matrix(c_mat), r_sp, format="csr")

    def hamiltonian(self, fs: FieldSpec) -> HamiltonianPair:
        h = self.h0
        if fs.F_x != 0.0:
            h = h + fs.F_x * self.dipole["x"]
        if fs.F_y != 0.0:
            h = h + fs.F_y * self.dipole["y"]
        if fs.F_z != 0.0:
            h = h + fs.F_z * self.dipole["z"]
        return HamiltonianPair(
            h=h.tocsr(),
            s=self.s,
            l_max=self.l_max,
            n_radial=self.mesh.n_dof,
            field=fs,
            contour=self.contour,
            mesh=self.mesh,
        )


def assemble(
    mesh: FemMesh,
    contour: EcsContour,
    multipoles: MultipoleExpansion,
    gaunt_table: GauntTable,
    fs: FieldSpec,
    l_max: int,
) -> HamiltonianPair:
    """One-shot assembly of the full (H, S) pair for a single field point.

    Sweeps should construct a StarkOperators bundle instead and reuse it
    across field points.
    """
    return StarkOperators(mesh, contour, multipoles, gaunt_table, l_max).hamiltonian(fs)
