"""Jones calculus for single photons and density-matrix algebra for
two-photon polarization states.

Conventions used throughout the package:

* Single-photon basis is (TE, TM).  TE is horizontal (H), TM vertical (V).
* Two-photon basis order is (TE,TE), (TE,TM), (TM,TE), (TM,TM) with the
  signal photon as the first factor.
* Angles at the public interfaces are degrees; positive rotation angles
  rotate TE toward TM.
"""

from __future__ import annotations

import json

import numpy as np

BASIS_LABELS = ("TE,TE", "TE,TM", "TM,TE", "TM,TM")
BASIS_STRING = "(TE,TE),(TE,TM),(TM,TE),(TM,TM) signal-first"

TE = np.array([1.0, 0.0], dtype=complex)
TM = np.array([0.0, 1.0], dtype=complex)
DIAG = (TE + TM) / np.sqrt(2.0)
ANTIDIAG = (TE - TM) / np.sqrt(2.0)
RCIRC = (TE - 1j * TM) / np.sqrt(2.0)
LCIRC = (TE + 1j * TM) / np.sqrt(2.0)

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-9

# Magic Bell basis: columns are the basis kets expressed in the
# computational (TE/TM product) basis, with TE = |0>, TM = |1>.
MAGIC_BASIS = np.array(
    [
        [1.0, 1.0j, 0.0, 0.0],
        [0.0, 0.0, 1.0j, 1.0],
        [0.0, 0.0, 1.0j, -1.0],
        [1.0, -1.0j, 0.0, 0.0],
    ],
    dtype=complex,
) / np.sqrt(2.0)


class StateValidationError(ValueError):
    """A state or operator violates a contract (norm, unitarity, ...)."""


def jones(angle_deg: float, phase_deg: float = 0.0) -> np.ndarray:
    """Unit Jones vector for linear polarization at ``angle_deg`` from TE,
    with an optional retardation phase on the TM component."""
    a = np.deg2rad(angle_deg)
    p = np.deg2rad(phase_deg)
    return np.array([np.cos(a), np.sin(a) * np.exp(1j * p)], dtype=complex)


def rotator_matrix(theta_deg: float) -> np.ndarray:
    """Real rotation of the polarization plane by ``theta_deg``.

    Orthogonal with determinant +1; R(a) @ R(b) == R(a+b).
    """
    if not np.isfinite(theta_deg):
        raise ValueError("rotation angle must be finite")
    t = np.deg2rad(theta_deg)
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s], [s, c]])


def waveplate_matrix(retardance_deg: float, fast_axis_deg: float) -> np.ndarray:
    """Jones matrix of a waveplate with the given retardance and fast-axis
    angle.  A half-wave plate at 22.5 deg maps TE to the diagonal state."""
    if not (np.isfinite(retardance_deg) and np.isfinite(fast_axis_deg)):
        raise ValueError("waveplate angles must be finite")
    g = np.deg2rad(retardance_deg)
    r = rotator_matrix(fast_axis_deg)
    return r @ np.diag([1.0, np.exp(-1j * g)]).astype(complex) @ r.T


def polarizer_matrix(angle_deg: float) -> np.ndarray:
    """Projector onto linear polarization at ``angle_deg`` from TE."""
    v = jones(angle_deg)
    return np.outer(v, v.conj())


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product in the signal-first basis order."""
    return np.kron(np.asarray(a), np.asarray(b))


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def kets_equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """Global-phase-insensitive equality test for unit kets."""
    return bool(abs(abs(np.vdot(a, b)) - 1.0) <= tol)


def bell_state(phi_rad: float = 0.0) -> np.ndarray:
    """(|TE,TE> + e^{-i phi} |TM,TM>)/sqrt(2)."""
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1.0
    psi[3] = np.exp(-1j * phi_rad)
    return psi / np.sqrt(2.0)


def validate_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Check the physicality contract of a 4x4 density matrix.

    Hermitian within 1e-10, unit trace within 1e-10, smallest eigenvalue
    >= -1e-9.  Returns the array unchanged on success.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise StateValidationError(f"expected 4x4 matrix, got {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITICITY_TOL:
        raise StateValidationError(f"not Hermitian: max |rho - rho^+| = {herm:.3e}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise StateValidationError(f"trace {tr!r} differs from 1")
    lam_min = np.linalg.eigvalsh(rho)[0]
    if lam_min < EIGENVALUE_FLOOR:
        raise StateValidationError(f"negative eigenvalue {lam_min:.3e}")
    return rho


def state_to_density(psi: np.ndarray) -> np.ndarray:
    """Outer product |psi><psi| of a unit-norm two-photon ket."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (4,):
        raise StateValidationError(f"expected 4-vector, got {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise StateValidationError(f"ket norm {norm!r} differs from 1")
    return validate_density_matrix(np.outer(psi, psi.conj()))


def apply_local(us: np.ndarray, ui: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Conjugate ``rho`` by the local pair ``us (x) ui``.

    Both operators must be unitary within 1e-10; eigenvalues, trace and
    purity of ``rho`` are preserved.
    """
    for name, u in (("signal", us), ("idler", ui)):
        if not is_unitary(u, tol=1e-10):
            raise StateValidationError(f"{name} operator is not unitary")
    u4 = tensor(us, ui)
    return validate_density_matrix(u4 @ np.asarray(rho, dtype=complex) @ u4.conj().T)


def magic_basis_transform(rho: np.ndarray) -> np.ndarray:
    """Express ``rho`` in the magic Bell basis.

    The transform is unitary, so the trace and spectrum are preserved.  The
    largest eigenvalue of the real part of the result is the fully
    entangled fraction (see :mod:`polpair.metrics`).
    """
    rho = np.asarray(rho, dtype=complex)
    return MAGIC_BASIS.conj().T @ rho @ MAGIC_BASIS


def magic_basis_inverse(rho_magic: np.ndarray) -> np.ndarray:
    """Inverse of :func:`magic_basis_transform`."""
    return MAGIC_BASIS @ np.asarray(rho_magic, dtype=complex) @ MAGIC_BASIS.conj().T


def density_matrix_to_json(rho: np.ndarray) -> dict:
    """JSON-serializable form: row-major [re, im] pairs plus basis string."""
    rho = np.asarray(rho, dtype=complex)
    elements = [[float(z.real), float(z.imag)] for z in rho.reshape(-1)]
    return {"schema": "density-matrix/1", "basis": BASIS_STRING, "elements": elements}


def density_matrix_from_json(obj: dict) -> np.ndarray:
    if obj.get("schema") != "density-matrix/1":
        raise ValueError(f"unsupported density-matrix schema: {obj.get('schema')!r}")
    elements = obj["elements"]
    if len(elements) != 16:
        raise ValueError(f"expected 16 elements, got {len(elements)}")
    flat = np.array([complex(re, im) for re, im in elements])
    return flat.reshape(4, 4)


def dumps_density_matrix(rho: np.ndarray) -> str:
    return json.dumps(density_matrix_to_json(rho), indent=2)
