"""Outer-product beamformer sets, their power algebra, and update operators.

A user's transmit matrix is a sum of M rank-one outer products,

    V_ell = sum_m v_e[m] @ v_a[m].T     (Q x Q),

composed from M elevation vectors and M azimuth vectors of length Q each.
Per user the M vectors of one side are kept stacked in a single length Q*M
vector (column-major over m). Two operators recur in every algorithm when
one side is updated with the other held fixed:

  * ``psi_matrix``: the Q^2 x QM mixing matrix turning the free side's
    stacked vector into vec(sum_m v_a[m] @ v_e[m].T), so channel bilinear
    forms become plain matrix products against vectorized channels;
  * ``coupling_matrix``: the QM x QM Gram operator of the fixed side's
    vectors (Kronecker-expanded), through which the transmit-power
    constraint becomes a quadratic form in the free side's vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Scenario

SIDES = ("azimuth", "elevation")


@dataclass
class BeamformerSet:
    """Stacked azimuth/elevation vectors for all users.

    ``v_a`` and ``v_e`` are (L, Q*M) complex arrays; row ``ell`` stacks that
    user's M length-Q vectors column-major.
    """

    Q: int
    M: int
    v_a: np.ndarray
    v_e: np.ndarray

    @property
    def L(self) -> int:
        return self.v_a.shape[0]

    def copy(self) -> "BeamformerSet":
        return BeamformerSet(self.Q, self.M, self.v_a.copy(), self.v_e.copy())

    def columns(self, side: str, ell: int) -> np.ndarray:
        """The M stacked vectors of one side as a (Q, M) column matrix."""
        v = self.v_a if side == "azimuth" else self.v_e
        return v[ell].reshape(self.Q, self.M, order="F")


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")


def full_beamformer(bf: BeamformerSet, ell: int) -> np.ndarray:
    """The rank-<=M transmit matrix V_ell = sum_m v_e[m] v_a[m].T."""
    v_e = bf.columns("elevation", ell)
    v_a = bf.columns("azimuth", ell)
    return v_e @ v_a.T


def beamformer_matrix(bf: BeamformerSet) -> np.ndarray:
    """Column-major vectorized beamformers as a (Q^2, L) matrix."""
    cols = [full_beamformer(bf, ell).reshape(-1, order="F") for ell in range(bf.L)]
    return np.stack(cols, axis=1)


def total_power(bf: BeamformerSet) -> float:
    """Transmit power: sum over users of ||sum_m v_a[m] v_e[m].T||_F^2."""
    power = 0.0
    for ell in range(bf.L):
        v_a = bf.columns("azimuth", ell)
        v_e = bf.columns("elevation", ell)
        power += float(np.linalg.norm(v_a @ v_e.T) ** 2)
    return power


def coupling_matrix(side: str, bf: BeamformerSet, ell: int) -> np.ndarray:
    """Power operator for updating ``side`` with the other side fixed.

    Returns the QM x QM Hermitian PSD matrix A with
    ``v^H A v = ||sum_m v[m] v_fixed[m].T||_F^2`` for any stacked free-side
    vector v: the M x M Gram matrix of the fixed side's vectors Kronecker-
    expanded by I_Q. Orthonormal fixed vectors give the identity.
    """
    _check_side(side)
    fixed = bf.columns("elevation" if side == "azimuth" else "azimuth", ell)
    gram = fixed.conj().T @ fixed
    return np.kron(gram, np.eye(bf.Q))


def psi_matrix(side: str, bf: BeamformerSet, ell: int) -> np.ndarray:
    """Mixing operator for updating ``side`` with the other side fixed.

    Returns the Q^2 x QM matrix ``Psi = [u_1 ... u_M] kron I_Q`` built from
    the fixed side's vectors u_m, satisfying for any free-side stacked v

        Psi @ v = vec(sum_m v[m] u_m.T)      (column-major vec),

    so that vec(H^T).T @ Psi @ v_a and vec(H).T @ Psi @ v_e both equal the
    transmit bilinear form sum_m v_e[m].T H v_a[m].
    """
    _check_side(side)
    fixed = bf.columns("elevation" if side == "azimuth" else "azimuth", ell)
    return np.kron(fixed, np.eye(bf.Q))


def mixed_vector(side: str, bf: BeamformerSet, ell: int) -> np.ndarray:
    """``psi_matrix(side) @ v_side`` computed without forming Psi."""
    _check_side(side)
    free = bf.columns(side, ell)
    fixed = bf.columns("elevation" if side == "azimuth" else "azimuth", ell)
    return (free @ fixed.T).reshape(-1, order="F")


def init_feasible(scenario: Scenario, rng: np.random.Generator) -> BeamformerSet:
    """Random full-power starting point.

    All entries are drawn standard circular complex Gaussian, then the
    azimuth block is rescaled so the total transmit power equals the budget
    exactly (power is quadratic in the azimuth block).
    """
    shape = (scenario.L, scenario.Q * scenario.M)
    draw = lambda: (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    bf = BeamformerSet(scenario.Q, scenario.M, draw(), draw())
    bf.v_a *= np.sqrt(scenario.P / total_power(bf))
    return bf


def to_json_dict(bf: BeamformerSet) -> dict:
    """JSON-safe representation with complex entries as [re, im] pairs."""

    def encode(arr: np.ndarray) -> list:
        return np.stack([arr.real, arr.imag], axis=-1).tolist()

    return {"Q": bf.Q, "M": bf.M, "v_a": encode(bf.v_a), "v_e": encode(bf.v_e)}


def from_json_dict(data: dict) -> BeamformerSet:
    def decode(entry: list) -> np.ndarray:
        arr = np.asarray(entry, dtype=float)
        return arr[..., 0] + 1j * arr[..., 1]

    return BeamformerSet(int(data["Q"]), int(data["M"]), decode(data["v_a"]), decode(data["v_e"]))
