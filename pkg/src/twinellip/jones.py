"""Jones calculus for twin-photon beams.

Conventions
-----------
* Polarization basis: index 0 = horizontal (H), index 1 = vertical (V).
* An ordinary Jones matrix is a plain 2x2 ndarray acting on that basis.
* A beam's field is a 2x2 coefficient matrix: column 0 is the Jones vector
  multiplying the signal annihilation amplitude, column 1 the one multiplying
  the idler amplitude. `TwinPhotonField` bundles the two beams; a
  `TwinPhotonJonesMatrix` is the 2x2 block matrix of ordinary Jones matrices
  that transforms it, beam_k' = sum_l T[k,l] @ beam_l.
* Angles are radians everywhere in this package; degrees exist only at the
  CLI boundary.

All values are immutable (arrays are returned non-writeable) and all
operations are pure functions, so everything here is safe to share across
threads or processes without synchronization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "polarizer_matrix",
    "sample_matrix",
    "jones_identity",
    "TwinPhotonField",
    "TwinPhotonJonesMatrix",
    "analyzer_pair",
    "apply_twin_matrix",
    "compose",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


def _require_finite(a: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} must be finite, got {a!r}")
    return a


def jones_identity() -> np.ndarray:
    """2x2 identity Jones matrix."""
    return np.eye(2)


def polarizer_matrix(theta: float) -> np.ndarray:
    """Projector onto the linear-polarization axis at angle `theta`.

    Returns [[cos^2 t, cos t sin t], [cos t sin t, sin^2 t]]; idempotent,
    symmetric, rank 1, and pi-periodic.
    """
    if not np.isfinite(theta):
        raise ValueError(f"analyzer angle must be finite, got {theta}")
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c * c, c * s], [c * s, s * s]])


def sample_matrix(sample) -> np.ndarray:
    """diag(r1, r2): the sample acting on its two eigenpolarizations.

    `sample` is any object with complex attributes r1, r2 (see
    `rates.SampleParams`).
    """
    return np.array([[sample.r1, 0.0], [0.0, sample.r2]], dtype=complex)


@dataclass(frozen=True)
class TwinPhotonField:
    """Coefficient representation of the two-beam twin-photon field.

    beam1/beam2 are 2x2 complex arrays, rows (H, V) x columns (signal, idler).
    """

    beam1: np.ndarray
    beam2: np.ndarray

    def __post_init__(self):
        for name in ("beam1", "beam2"):
            a = np.asarray(getattr(self, name), dtype=complex)
            if a.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2, got shape {a.shape}")
            _require_finite(a, name)
            object.__setattr__(self, name, _frozen(a))

    def beams(self) -> tuple[np.ndarray, np.ndarray]:
        return self.beam1, self.beam2


@dataclass(frozen=True)
class TwinPhotonJonesMatrix:
    """2x2 block matrix of ordinary Jones matrices.

    Block (k, l) maps the beam-l input field into the beam-k output. Elements
    sitting in a single beam have t12 = t21 = 0.
    """

    t11: np.ndarray
    t12: np.ndarray
    t21: np.ndarray
    t22: np.ndarray

    def __post_init__(self):
        for name in ("t11", "t12", "t21", "t22"):
            a = np.asarray(getattr(self, name), dtype=complex)
            if a.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2, got shape {a.shape}")
            _require_finite(a, name)
            object.__setattr__(self, name, _frozen(a))

    @classmethod
    def identity(cls) -> "TwinPhotonJonesMatrix":
        z = np.zeros((2, 2))
        return cls(np.eye(2), z, z, np.eye(2))

    @classmethod
    def diagonal(cls, j1: np.ndarray, j2: np.ndarray) -> "TwinPhotonJonesMatrix":
        """Element j1 in beam 1 and j2 in beam 2 (no beam mixing)."""
        z = np.zeros((2, 2))
        return cls(j1, z, z, j2)

    @property
    def mixes_beams(self) -> bool:
        return bool(np.any(self.t12 != 0) or np.any(self.t21 != 0))

    @property
    def is_projector_pair(self) -> bool:
        """True when both diagonal blocks are rank-deficient projections.

        Used to detect analyzer stages: a polarizer projects each beam onto a
        single polarization axis, so the block is idempotent with rank <= 1.
        """
        if self.mixes_beams:
            return False
        for block in (self.t11, self.t22):
            if not np.allclose(block @ block, block, atol=1e-12):
                return False
            if np.linalg.matrix_rank(block, tol=1e-12) > 1:
                return False
        return True


def analyzer_pair(theta1: float, theta2: float) -> TwinPhotonJonesMatrix:
    """Analyzers at `theta1` (beam 1) and `theta2` (beam 2).

    Both pass axes are measured from the horizontal in each beam's own frame;
    the overall sign of an axis vector is unobservable.
    """
    return TwinPhotonJonesMatrix.diagonal(
        polarizer_matrix(theta1), polarizer_matrix(theta2)
    )


def apply_twin_matrix(m: TwinPhotonJonesMatrix, f: TwinPhotonField) -> TwinPhotonField:
    """Transform a twin-photon field: beam_k' = sum_l T[k,l] @ beam_l."""
    return TwinPhotonField(
        beam1=m.t11 @ f.beam1 + m.t12 @ f.beam2,
        beam2=m.t21 @ f.beam1 + m.t22 @ f.beam2,
    )


def compose(a: TwinPhotonJonesMatrix, b: TwinPhotonJonesMatrix) -> TwinPhotonJonesMatrix:
    """Block product: apply(compose(a, b), f) == apply(a, apply(b, f))."""
    return TwinPhotonJonesMatrix(
        t11=a.t11 @ b.t11 + a.t12 @ b.t21,
        t12=a.t11 @ b.t12 + a.t12 @ b.t22,
        t21=a.t21 @ b.t11 + a.t22 @ b.t21,
        t22=a.t21 @ b.t12 + a.t22 @ b.t22,
    )
