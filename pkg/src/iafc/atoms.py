"""Dual combs synthesised from alkali hyperfine + Zeeman structure.

The ground and excited hyperfine manifolds are diagonalised in the
|m_I, m_J> product basis under a longitudinal magnetic field; electric-
dipole matrix elements of the spherical components d_q (reduced element
normalised to 1) then yield one comb per circular polarization.  The
field conserves m_F = m_I + m_J, so every transition couples to exactly
one of q = +1 / -1 and the polarization cross-coupling vanishes
structurally.

Atomic constants ship as editable YAML files (data/*.yaml) with
literature defaults; they are external inputs, not derived quantities.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
import yaml
from scipy.constants import atomic_mass, hbar, physical_constants

from .polarization import DualComb
from .spectral import CombTooth, FrequencyComb

__all__ = [
    "LevelSpec", "ZeemanManifold", "AtomData", "load_atom",
    "diagonalize_level", "transition_dipoles", "make_atomic_dual_comb",
]

MU_B = physical_constants["Bohr magneton"][0]  # J/T


@dataclass(frozen=True)
class LevelSpec:
    """One electronic level: angular momenta, hyperfine constants, g-factors.

    ``a_hfs``/``b_hfs`` are the magnetic-dipole and electric-quadrupole
    constants in rad/s; ``g_j``/``g_i`` are dimensionless Lande factors
    (nuclear g includes its customary sign).
    """

    j: float
    i: float
    a_hfs: float
    b_hfs: float = 0.0
    g_j: float = 2.0
    g_i: float = 0.0

    def __post_init__(self):
        for name, value in (("j", self.j), ("i", self.i)):
            if value < 0 or round(2 * value) != 2 * value:
                raise ValueError(f"{name} must be a non-negative half-integer")
        if self.b_hfs != 0.0 and (self.j < 1 or self.i < 1):
            raise ValueError("quadrupole term requires both J >= 1 and I >= 1")

    @property
    def dim(self) -> int:
        return int((2 * self.j + 1) * (2 * self.i + 1))


@dataclass(frozen=True)
class ZeemanManifold:
    """Eigen-decomposition of one level at field B (energies in rad/s)."""

    spec: LevelSpec
    field: float
    energies: np.ndarray
    states: np.ndarray      # columns are eigenvectors in the |m_I, m_J> basis
    m_f: np.ndarray         # <Fz> per eigenstate (good quantum number)

    @property
    def dim(self) -> int:
        return self.energies.size


def _ladder(j: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Jz, J+, J-) for angular momentum j, basis m = -j .. +j."""
    m = np.arange(-j, j + 1)
    jz = np.diag(m)
    up = np.zeros((m.size, m.size))
    for k in range(m.size - 1):
        up[k + 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    return jz, up, up.T


def _hyperfine_hamiltonian(spec: LevelSpec, field: float) -> np.ndarray:
    iz, ip_, im_ = _ladder(spec.i)
    jz, jp, jm = _ladder(spec.j)
    eye_i = np.eye(iz.shape[0])
    eye_j = np.eye(jz.shape[0])

    i_dot_j = (np.kron(iz, jz)
               + 0.5 * (np.kron(ip_, jm) + np.kron(im_, jp)))
    h = spec.a_hfs * i_dot_j
    if spec.b_hfs != 0.0:
        ii, jj = spec.i, spec.j
        quad = (3.0 * i_dot_j @ i_dot_j + 1.5 * i_dot_j
                - ii * (ii + 1) * jj * (jj + 1) * np.eye(i_dot_j.shape[0]))
        h = h + spec.b_hfs * quad / (2.0 * ii * (2 * ii - 1) * jj * (2 * jj - 1))
    zeeman = MU_B * field / hbar * (spec.g_j * np.kron(eye_i, jz)
                                    + spec.g_i * np.kron(iz, eye_j))
    return h + zeeman


def diagonalize_level(spec: LevelSpec, field: float) -> ZeemanManifold:
    """Eigen-solve A I.J + quadrupole + Zeeman at magnetic field B (tesla)."""
    if field < 0:
        raise ValueError("field must be >= 0")
    h = _hyperfine_hamiltonian(spec, field)
    energies, states = np.linalg.eigh(h)
    iz, _, _ = _ladder(spec.i)
    jz, _, _ = _ladder(spec.j)
    fz = np.kron(iz, np.eye(jz.shape[0])) + np.kron(np.eye(iz.shape[0]), jz)
    m_f = np.real(np.einsum("in,ij,jn->n", states.conj(), fz, states))
    return ZeemanManifold(spec, field, energies, states, m_f)


@lru_cache(maxsize=None)
def _clebsch(j1: float, m1: float, j2: float, m2: float,
             j3: float, m3: float) -> float:
    from sympy import Rational
    from sympy.physics.quantum.cg import CG

    args = [Rational(int(round(2 * v)), 2) for v in (j1, m1, j2, m2, j3, m3)]
    return float(CG(args[0], args[1], args[2], args[3], args[4], args[5])
                 .doit().evalf())


def _dipole_operator(ground: LevelSpec, excited: LevelSpec, q: int) -> np.ndarray:
    """d_q from the ground to the excited product basis, reduced element 1."""
    if q not in (-1, 0, 1):
        raise ValueError("q must be one of -1, 0, +1")
    if abs(ground.j - excited.j) > 1 or abs(ground.i - excited.i) > 1e-9:
        raise ValueError("levels are not dipole-compatible")
    mg = np.arange(-ground.j, ground.j + 1)
    me = np.arange(-excited.j, excited.j + 1)
    small = np.zeros((me.size, mg.size))
    for a, m_e in enumerate(me):
        for b, m_g in enumerate(mg):
            if abs(m_e - (m_g + q)) < 1e-9:
                small[a, b] = _clebsch(ground.j, m_g, 1.0, q, excited.j, m_e)
    n_i = int(2 * ground.i + 1)
    return np.kron(np.eye(n_i), small)


def transition_dipoles(ground: ZeemanManifold, excited: ZeemanManifold,
                       q: int, min_strength: float = 1e-9):
    """Allowed lines for one circular component: (frequency, strength).

    Frequencies are E_e - E_g in rad/s, measured from the fine-structure
    line centre (the gross electronic gap is excluded from both level
    Hamiltonians).  Strengths are squared dipole matrix elements with
    the reduced element normalised to 1, so they are relative weights.
    """
    d_q = _dipole_operator(ground.spec, excited.spec, q)
    matrix = excited.states.conj().T @ d_q @ ground.states
    strengths = np.abs(matrix) ** 2
    lines = []
    cap = strengths.max()
    for n in range(excited.dim):
        for m in range(ground.dim):
            if strengths[n, m] > min_strength * cap:
                lines.append((float(excited.energies[n] - ground.energies[m]),
                              float(strengths[n, m])))
    lines.sort()
    return lines


@dataclass(frozen=True)
class AtomData:
    """Constants for one storage transition of one atomic species."""

    name: str
    ground: LevelSpec
    excited: LevelSpec
    mass: float
    wavelength: float

    @property
    def k(self) -> float:
        return 2.0 * np.pi / self.wavelength


_ALIASES = {
    "cs": "cesium", "cesium": "cesium", "cs133": "cesium",
    "rb": "rubidium87", "rb87": "rubidium87", "rubidium": "rubidium87",
    "rubidium87": "rubidium87",
    "rb85": "rubidium85", "rubidium85": "rubidium85",
}


def load_atom(name: str) -> AtomData:
    """Read one species' constants from the bundled (editable) data files."""
    key = _ALIASES.get(name.lower())
    if key is None:
        raise ValueError(f"unsupported atom '{name}' "
                         f"(known: {sorted(set(_ALIASES))})")
    text = resources.files("iafc.data").joinpath(f"{key}.yaml").read_text()
    raw = yaml.safe_load(text)
    mhz = 2.0 * np.pi * 1e6
    ground = LevelSpec(j=raw["J_g"], i=raw["I"],
                       a_hfs=raw["A_hfs_g_MHz"] * mhz,
                       b_hfs=raw.get("B_hfs_g_MHz", 0.0) * mhz,
                       g_j=raw["gJ_g"], g_i=raw["gI"])
    excited = LevelSpec(j=raw["J_e"], i=raw["I"],
                        a_hfs=raw["A_hfs_e_MHz"] * mhz,
                        b_hfs=raw.get("B_hfs_e_MHz", 0.0) * mhz,
                        g_j=raw["gJ_e"], g_i=raw["gI"])
    return AtomData(raw["atom"], ground, excited,
                    raw["mass_amu"] * atomic_mass, raw["lambda_nm"] * 1e-9)


def make_atomic_dual_comb(atom: str | AtomData, field: float,
                          gamma: float = 5e6,
                          density_scale: float = 1.0) -> DualComb:
    """Per-polarization combs of one species at magnetic field B (tesla).

    Ground populations are uniform across Zeeman sublevels (no optical
    pumping), so each tooth weight is density_scale * strength / N_g.
    The carrier sits at the strength-weighted mean transition frequency,
    and the conserved m_F guarantees an exactly vanishing polarization
    cross-coupling, encoded as an empty ``cross_teeth``.
    """
    if not (field > 0):
        raise ValueError("field must be > 0 to lift the Zeeman degeneracy")
    data = load_atom(atom) if isinstance(atom, str) else atom
    ground = diagonalize_level(data.ground, field)
    excited = diagonalize_level(data.excited, field)

    lines = {q: transition_dipoles(ground, excited, q) for q in (+1, -1)}
    total_w = sum(s for q in lines for _, s in lines[q])
    carrier = sum(s * f for q in lines for f, s in lines[q]) / total_w

    combs = {}
    for q in (+1, -1):
        teeth = tuple(
            CombTooth(f - carrier, density_scale * s / ground.dim)
            for f, s in lines[q]
        )
        combs[q] = FrequencyComb(teeth, gamma, carrier)
    return DualComb(combs[+1], combs[-1])
