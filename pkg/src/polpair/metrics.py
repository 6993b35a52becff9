"""Entanglement and state-quality metrics for two-photon density matrices.

The fully entangled fraction (FEF) is computed two independent ways: a
closed form via the magic-basis real part, and a brute-force maximization
over local unitaries.  The two must agree; the acceptance suite enforces
this so a basis-convention error cannot pass silently.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import minimize

from .polarization import bell_state, magic_basis_transform, tensor

SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_YY = np.kron(SIGMA_Y, SIGMA_Y)

CHSH_BOUND = float(1.0 / np.sqrt(2.0))


def purity(rho: np.ndarray) -> float:
    """tr(rho^2); 1 for pure states, 0.25 for the maximally mixed state."""
    rho = np.asarray(rho)
    return float(np.trace(rho @ rho).real)


def off_diagonal_coherence(rho: np.ndarray) -> float:
    """|rho_03| + |rho_30|: the corner coherence between (TE,TE) and
    (TM,TM).  Equals 1 for the ideal entangled state."""
    rho = np.asarray(rho)
    return float(abs(rho[0, 3]) + abs(rho[3, 0]))


def fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """<target| rho |target> for a unit-norm pure target ket."""
    target = np.asarray(target, dtype=complex)
    if abs(np.linalg.norm(target) - 1.0) > 1e-9:
        raise ValueError("target ket must be unit norm")
    return float(np.real(target.conj() @ np.asarray(rho) @ target))


def fully_entangled_fraction(rho: np.ndarray) -> float:
    """max_Psi <Psi|rho|Psi> over all maximally entangled two-qubit states.

    Closed form: the largest eigenvalue of the real part of rho expressed
    in the magic Bell basis.  0.5 is the product/classical bound; a value
    above 1/sqrt(2) witnesses CHSH violation.
    """
    rho_m = magic_basis_transform(rho)
    return float(np.linalg.eigvalsh(rho_m.real.astype(float))[-1])


def _su2(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """SU(2) element: beta in [0, pi/2] mixes the basis states, alpha and
    gamma are the relative phases."""
    a = np.cos(beta) * np.exp(1j * alpha)
    b = np.sin(beta) * np.exp(1j * gamma)
    return np.array([[a, b], [-b.conjugate(), a.conjugate()]])


def _overlap_max_entangled(rho: np.ndarray, angles: np.ndarray) -> float:
    us = _su2(*angles[:3])
    ui = _su2(*angles[3:])
    psi = tensor(us, ui) @ bell_state(0.0)
    return float(np.real(psi.conj() @ rho @ psi))


def fef_bruteforce(rho: np.ndarray, grid_density: int = 8, refine_iters: int = 400) -> float:
    """Lower-bound FEF by direct search over (U_s, U_i) pairs.

    Each local unitary is parameterized by 3 angles; a 6-dim grid with
    ``grid_density`` points per angle is scanned (vectorized through the
    identity (U_s x U_i)|Bell> = vec(U_s U_i^T)/sqrt(2)), then the best
    grid points are polished with a simplex search.  Every candidate is an
    exact maximally entangled state, so the result converges to the true
    FEF from below.
    """
    if grid_density < 8:
        raise ValueError("grid_density must be at least 8 per angle")
    rho = np.asarray(rho, dtype=complex)

    phases = np.linspace(0.0, 2.0 * np.pi, grid_density, endpoint=False)
    betas = np.linspace(0.0, np.pi / 2.0, grid_density)
    aa, bb, gg = np.meshgrid(phases, betas, phases, indexing="ij")
    angle_list = np.stack([aa.ravel(), bb.ravel(), gg.ravel()], axis=1)

    n = angle_list.shape[0]
    us = np.empty((n, 2, 2), dtype=complex)
    us[:, 0, 0] = np.cos(angle_list[:, 1]) * np.exp(1j * angle_list[:, 0])
    us[:, 0, 1] = np.sin(angle_list[:, 1]) * np.exp(1j * angle_list[:, 2])
    us[:, 1, 0] = -us[:, 0, 1].conj()
    us[:, 1, 1] = us[:, 0, 0].conj()

    best_val = -np.inf
    best_angles = None
    # (U_s x U_i)|Bell> has amplitudes (U_s U_i^T)_{jk} / sqrt(2), so the
    # overlap only depends on V = U_s U_i^T; scan all pairs blockwise.
    for start in range(0, n, 64):
        block = us[start : start + 64]
        v = np.einsum("mij,nkj->mnik", block, us)  # U_s U_i^T
        psi = v.reshape(block.shape[0], n, 4) / np.sqrt(2.0)
        vals = np.einsum("mna,ab,mnb->mn", psi.conj(), rho, psi).real
        idx = np.unravel_index(np.argmax(vals), vals.shape)
        if vals[idx] > best_val:
            best_val = float(vals[idx])
            best_angles = np.concatenate(
                [angle_list[start + idx[0]], angle_list[idx[1]]]
            )

    res = minimize(
        lambda x: -_overlap_max_entangled(rho, x),
        best_angles,
        method="Nelder-Mead",
        options={"maxiter": refine_iters, "xatol": 1e-10, "fatol": 1e-13},
    )
    return float(max(best_val, -res.fun))


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence from the spin-flipped matrix spectrum.

    The eigenvalues of rho (sy x sy) rho* (sy x sy) are obtained from the
    similar Hermitian matrix sqrt(rho) rho~ sqrt(rho), which keeps the
    sqrt of near-zero eigenvalues from amplifying round-off noise.
    """
    rho = np.asarray(rho, dtype=complex)
    lam, vec = np.linalg.eigh(rho)
    root = (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.conj().T
    flipped = _YY @ rho.conj() @ _YY
    m = root @ flipped @ root
    ev = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
    ev = np.where(ev < 1e-12 * max(ev[-1], 1e-30), 0.0, ev)  # drop numerical dust
    lam = np.sqrt(ev)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def chsh_witness(fef: float) -> bool:
    """True iff ``fef`` strictly exceeds 1/sqrt(2)."""
    if not 0.0 <= fef <= 1.0:
        raise ValueError(f"fef {fef!r} outside [0, 1]")
    return bool(fef > CHSH_BOUND)


@dataclass(frozen=True)
class MetricReport:
    purity: float
    fidelity_to_target: float
    fully_entangled_fraction: float
    concurrence: float
    off_diagonal_coherence: float
    chsh_witness: bool

    def to_json(self) -> dict:
        return asdict(self)


def build_report(rho: np.ndarray, target: np.ndarray | None = None) -> MetricReport:
    """Evaluate all metrics; the fidelity target defaults to the phi=0
    entangled state."""
    if target is None:
        target = bell_state(0.0)
    fef = fully_entangled_fraction(rho)
    return MetricReport(
        purity=purity(rho),
        fidelity_to_target=fidelity(rho, target),
        fully_entangled_fraction=fef,
        concurrence=concurrence(rho),
        off_diagonal_coherence=off_diagonal_coherence(rho),
        chsh_witness=chsh_witness(min(max(fef, 0.0), 1.0)),
    )
