"""Two-photon state reconstruction from 16-setting coincidence counts.

Linear inversion solves the count-to-state system directly and may return
a non-physical (negative-eigenvalue) matrix under Poisson noise; the
maximum-likelihood estimator parameterizes rho = T^+ T / tr(T^+ T) with a
lower-triangular T, so its output is physical by construction.  The
per-setting flux is a nuisance parameter profiled out of the likelihood
in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .detection import CountRecord, ProjectionSetting
from .metrics import concurrence, fully_entangled_fraction, purity
from .polarization import ANTIDIAG, DIAG, LCIRC, RCIRC, TE, TM, validate_density_matrix

SINGLE_KETS = {"H": TE, "V": TM, "D": DIAG, "A": ANTIDIAG, "R": RCIRC, "L": LCIRC}

# Canonical 16-setting list (informationally complete; H=TE, V=TM).
CANONICAL_LABELS = ("HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
                    "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL")


class TomographyError(RuntimeError):
    pass


class NonConvergenceError(TomographyError):
    """MLE hit the iteration cap; carries the best iterate found."""

    def __init__(self, message: str, rho: np.ndarray, loglik: float, iterations: int):
        super().__init__(message)
        self.rho = rho
        self.loglik = loglik
        self.iterations = iterations


@dataclass(frozen=True)
class ProjectorSet:
    settings: tuple[ProjectionSetting, ...]

    def __post_init__(self):
        if len(self.settings) != 16:
            raise ValueError(f"need 16 settings, got {len(self.settings)}")
        if np.linalg.matrix_rank(self._design_matrix()) < 16:
            raise ValueError("projector set is not informationally complete")

    def _design_matrix(self) -> np.ndarray:
        basis = hermitian_basis()
        kets = np.stack([s.ket() for s in self.settings])
        return np.stack([
            [float(np.real(k.conj() @ e @ k)) for e in basis] for k in kets
        ])

    def condition_number(self) -> float:
        sv = np.linalg.svd(self._design_matrix(), compute_uv=False)
        return float(sv[0] / sv[-1])

    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.settings)


def setting_from_label(label: str) -> ProjectionSetting:
    if len(label) != 2 or any(c not in SINGLE_KETS for c in label):
        raise ValueError(f"unknown projection label {label!r}")
    return ProjectionSetting(label=label, projector_s=SINGLE_KETS[label[0]],
                             projector_i=SINGLE_KETS[label[1]])


def default_projector_set() -> ProjectorSet:
    """The canonical 16-setting tomography set."""
    return ProjectorSet(tuple(setting_from_label(lbl) for lbl in CANONICAL_LABELS))


def projector_set_from_labels(labels) -> ProjectorSet:
    return ProjectorSet(tuple(setting_from_label(lbl) for lbl in labels))


@dataclass(frozen=True)
class MleOptions:
    max_iterations: int = 10_000
    convergence_tol: float = 1e-9
    init: str = "linear_inversion_clipped"

    def __post_init__(self):
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if self.init not in ("linear_inversion_clipped", "maximally_mixed"):
            raise ValueError(f"unknown init {self.init!r}")


def subtract_accidentals(records: list[CountRecord]) -> tuple[list[CountRecord], list[str]]:
    """coincidences' = max(0, coincidences - accidentals); returns the new
    records and the labels clipped at zero."""
    out, clipped = [], []
    for rec in records:
        corrected = rec.coincidences - rec.accidentals
        if corrected < 0:
            corrected = 0
            clipped.append(rec.label)
        out.append(CountRecord(rec.label, rec.singles_s, rec.singles_i,
                               corrected, rec.accidentals, rec.duration_s))
    return out, clipped


def hermitian_basis() -> list[np.ndarray]:
    """Orthonormal (trace inner product) basis of 4x4 Hermitian matrices."""
    basis = []
    for j in range(4):
        e = np.zeros((4, 4), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
    for j in range(4):
        for k in range(j + 1, 4):
            e = np.zeros((4, 4), dtype=complex)
            e[j, k] = e[k, j] = 1.0 / np.sqrt(2.0)
            basis.append(e)
            e = np.zeros((4, 4), dtype=complex)
            e[j, k] = -1j / np.sqrt(2.0)
            e[k, j] = 1j / np.sqrt(2.0)
            basis.append(e)
    return basis


@dataclass(frozen=True)
class LinearInversion:
    matrix: np.ndarray
    condition_number: float
    min_eigenvalue: float


def _check_records(records: list[CountRecord], pset: ProjectorSet) -> None:
    if [r.label for r in records] != list(pset.labels()):
        raise ValueError("records do not match the projector set (labels/order)")
    if sum(r.coincidences for r in records) <= 0:
        raise ValueError("total coincidence counts must be positive")


def linear_reconstruct(records: list[CountRecord], pset: ProjectorSet) -> LinearInversion:
    """Solve the linear count-to-state system.

    The result is Hermitian with unit trace but may have negative
    eigenvalues; ``min_eigenvalue`` reports how non-physical it is.
    """
    _check_records(records, pset)
    a = pset._design_matrix()
    cond = pset.condition_number()
    if cond > 1e12:
        raise ValueError(f"degenerate projector set (condition number {cond:.2e})")
    rates = np.array([r.coincidences / r.duration_s for r in records])
    x = np.linalg.lstsq(a, rates, rcond=None)[0]
    rho = sum(c * e for c, e in zip(x, hermitian_basis()))
    rho = rho / np.trace(rho).real
    return LinearInversion(matrix=rho, condition_number=cond,
                           min_eigenvalue=float(np.linalg.eigvalsh(rho)[0]))


# --- maximum likelihood ----------------------------------------------------

_TRIL_ROWS, _TRIL_COLS = np.tril_indices(4, k=-1)


def _t_from_params(params: np.ndarray) -> np.ndarray:
    t = np.zeros((4, 4), dtype=complex)
    t[np.diag_indices(4)] = params[:4]
    t[_TRIL_ROWS, _TRIL_COLS] = params[4:10] + 1j * params[10:16]
    return t


def _params_from_t(t: np.ndarray) -> np.ndarray:
    return np.concatenate([
        np.diag(t).real,
        t[_TRIL_ROWS, _TRIL_COLS].real,
        t[_TRIL_ROWS, _TRIL_COLS].imag,
    ])


def _rho_from_params(params: np.ndarray) -> np.ndarray:
    t = _t_from_params(params)
    rho = t.conj().T @ t
    return rho / np.trace(rho).real


def _lower_factor(rho: np.ndarray) -> np.ndarray:
    """Lower-triangular T with T^+ T = rho (reverse-ordered Cholesky)."""
    flip = np.fliplr(np.eye(4))
    upper = flip @ np.linalg.cholesky(flip @ rho @ flip) @ flip
    return upper.conj().T


def _init_params(records, pset, init: str) -> np.ndarray:
    if init == "maximally_mixed":
        return _params_from_t(np.eye(4) * 0.5)
    rho = linear_reconstruct(records, pset).matrix
    lam, vec = np.linalg.eigh(rho)
    lam = np.clip(lam, 1e-6, None)
    rho = (vec * lam) @ vec.conj().T
    rho = rho / np.trace(rho).real
    return _params_from_t(_lower_factor(rho))


@dataclass(frozen=True)
class MleResult:
    rho: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    condition_number: float


def negative_log_likelihood(params: np.ndarray, kets: np.ndarray, counts: np.ndarray,
                            exposures: np.ndarray) -> tuple[float, np.ndarray]:
    """Profiled Poisson negative log-likelihood and its gradient.

    With the flux N0 at its closed-form optimum the objective reduces to
    -sum(n log q) + (sum n) log(sum t q), where q_nu = ||T psi_nu||^2;
    it is invariant under rescaling T.
    """
    t = _t_from_params(params)
    v = kets @ t.T  # v[nu, a] = (T psi_nu)_a
    q = np.einsum("na,na->n", v.conj(), v).real
    q = np.maximum(q, 1e-300)
    total = counts.sum()
    s = float(exposures @ q)
    nll = -float(counts @ np.log(q)) + total * np.log(s)
    coeff = -counts / q + total * exposures / s
    z = (v.conj() * coeff[:, None]).T @ kets  # (4, 4)
    grad_full = 2.0 * z
    grad = np.concatenate([
        np.diag(grad_full).real,
        grad_full[_TRIL_ROWS, _TRIL_COLS].real,
        -grad_full[_TRIL_ROWS, _TRIL_COLS].imag,
    ])
    return nll, grad


def mle_reconstruct(records: list[CountRecord], pset: ProjectorSet,
                    opts: MleOptions = MleOptions()) -> MleResult:
    """Maximum-likelihood state estimate from coincidence counts.

    Independent Poisson likelihood per setting with the total flux
    profiled out; the reported log-likelihood omits data-only constants
    (factorial terms).
    """
    _check_records(records, pset)
    kets = np.stack([s.ket() for s in pset.settings])  # (16, 4)
    counts = np.array([float(r.coincidences) for r in records])
    durations = np.array([r.duration_s for r in records])
    exposures = durations / durations.mean()

    res = minimize(
        negative_log_likelihood,
        _init_params(records, pset, opts.init),
        args=(kets, counts, exposures),
        jac=True,
        method="L-BFGS-B",
        options={
            "maxiter": opts.max_iterations,
            "ftol": opts.convergence_tol,
            "gtol": 1e-12,
            "maxfun": 10 * opts.max_iterations,
        },
    )
    rho = validate_density_matrix(_rho_from_params(res.x))
    if not res.success and res.nit >= opts.max_iterations:
        raise NonConvergenceError(
            f"MLE did not converge in {opts.max_iterations} iterations",
            rho=rho, loglik=float(-res.fun), iterations=int(res.nit),
        )
    return MleResult(rho=rho, loglik=float(-res.fun), iterations=int(res.nit),
                     converged=bool(res.success), condition_number=pset.condition_number())


@dataclass(frozen=True)
class BootstrapReport:
    n_bootstrap: int
    fef_mean: float
    fef_std: float
    concurrence_mean: float
    concurrence_std: float
    purity_mean: float
    purity_std: float

    def to_json(self) -> dict:
        return {
            "n_bootstrap": self.n_bootstrap,
            "fully_entangled_fraction": {"mean": self.fef_mean, "std": self.fef_std},
            "concurrence": {"mean": self.concurrence_mean, "std": self.concurrence_std},
            "purity": {"mean": self.purity_mean, "std": self.purity_std},
        }


def error_bars(records: list[CountRecord], pset: ProjectorSet, opts: MleOptions,
               n_bootstrap: int, seed: int) -> BootstrapReport:
    """Parametric bootstrap: resample the coincidence counts as Poisson
    around the observed values and re-run the MLE per replica."""
    if n_bootstrap < 10:
        raise ValueError("n_bootstrap must be at least 10")
    children = np.random.SeedSequence(seed).spawn(n_bootstrap)
    fefs, concs, purs = [], [], []
    for child in children:
        rng = np.random.default_rng(child)
        resampled = [
            CountRecord(r.label, r.singles_s, r.singles_i,
                        int(rng.poisson(max(r.coincidences, 0))),
                        r.accidentals, r.duration_s)
            for r in records
        ]
        rho = mle_reconstruct(resampled, pset, opts).rho
        fefs.append(fully_entangled_fraction(rho))
        concs.append(concurrence(rho))
        purs.append(purity(rho))
    return BootstrapReport(
        n_bootstrap=n_bootstrap,
        fef_mean=float(np.mean(fefs)), fef_std=float(np.std(fefs)),
        concurrence_mean=float(np.mean(concs)), concurrence_std=float(np.std(concs)),
        purity_mean=float(np.mean(purs)), purity_std=float(np.std(purs)),
    )
