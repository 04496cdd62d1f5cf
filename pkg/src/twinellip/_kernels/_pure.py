"""NumPy implementations of the hot kernels.

These are the reference semantics; the Cython module `_fast` implements the
same two functions with typed loops. Both backends must agree bit-for-bit in
exact arithmetic terms (same operation order per element is not guaranteed,
agreement is to ~1e-15 relative and is enforced by tests).
"""
import numpy as np

BACKEND = "python"


def bracket_values(tan_psi, cos_delta, cross, sign, theta1, theta2, out=None):
    """Coincidence bracket over analyzer-angle arrays.

    Evaluates
        tan^2(psi) cos^2(t1) sin^2(t2) + sin^2(t1) cos^2(t2)
            + sign * 2 tan(psi) cos(delta) * cross * cos(t1) cos(t2) sin(t1) sin(t2)
    elementwise; `cross` is the interference attenuation factor (1 for full
    compensation), `sign` is -1 for the beam-splitter configuration and +1 for
    the entangled one.
    """
    t1 = np.asarray(theta1, dtype=np.float64)
    t2 = np.asarray(theta2, dtype=np.float64)
    c1, s1 = np.cos(t1), np.sin(t1)
    c2, s2 = np.cos(t2), np.sin(t2)
    res = (
        tan_psi * tan_psi * c1 * c1 * s2 * s2
        + s1 * s1 * c2 * c2
        + sign * 2.0 * tan_psi * cos_delta * cross * c1 * c2 * s1 * s2
    )
    if out is not None:
        out[...] = res
        return out
    return res


def time_average_intensity(amp_fwd, amp_rev, detuning, d_grid):
    """Mean over `d_grid` of |sum_m a_m e^{-i d q_m} + b_m e^{+i d q_m}|^2.

    amp_fwd/amp_rev are per-mode complex branch amplitudes, `detuning` the mode
    offsets q_m from the spectrum center, `d_grid` the detection-time
    differences to average over.
    """
    a = np.asarray(amp_fwd, dtype=np.complex128)
    b = np.asarray(amp_rev, dtype=np.complex128)
    q = np.asarray(detuning, dtype=np.float64)
    d = np.asarray(d_grid, dtype=np.float64)
    phases = np.exp(-1j * np.outer(d, q))
    total = phases @ a + np.conj(phases) @ b
    return float(np.mean(np.abs(total) ** 2))
