"""
State reconstruction from joint-readout records.

Linear inversion solves the weighted least-squares problem on the Pauli
basis. Maximum likelihood parameterizes rho = T^dagger T / Tr(T^dagger T)
with T lower-triangular and minimizes the normalized chi-square with BFGS
and an analytic gradient.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize

from ..parity.states import TwoQubitDensityMatrix
from .records import MeasurementRecord, TomographySettings, pauli_basis

logger = logging.getLogger(__name__)

MLE_GTOL = 1e-7
MLE_MAX_ITER = 5000
CONVERGED_GRAD_NORM = 1e-5
START_MIXING = 1e-4
PHYSICAL_TOLERANCE = 1e-12

_LOWER = np.tril_indices(4)
_STRICT_LOWER = np.tril_indices(4, k=-1)
_EXCHANGE = np.eye(4)[::-1]


class RankDeficientSettingsError(ValueError):
    """Raised when the settings cannot determine all 16 Pauli components."""


def _check_records(records: Sequence[MeasurementRecord], settings: TomographySettings) -> None:
    if len(records) != len(settings):
        raise ValueError(f"{len(records)} records for {len(settings)} settings")
    for record, pair in zip(records, settings.rotations, strict=True):
        if (record.rotation_a, record.rotation_b) != pair:
            raise ValueError(f"record {record.setting_id} does not match setting {pair}")


def check_rank(settings: TomographySettings) -> NDArray[np.float64]:
    """
    Return the design matrix after verifying it has rank 16.

    The trace is fixed, so the identity column is counted through the
    normalization constraint rather than through the records.

    Raises:
        RankDeficientSettingsError: If the settings are not informationally complete
    """
    design = settings.design_matrix()
    rank = int(np.linalg.matrix_rank(np.vstack([np.eye(1, 16), design])))
    if rank < 16:
        raise RankDeficientSettingsError(f"design matrix has rank {rank}, need 16")
    return design


@dataclass(frozen=True, eq=False)
class LinearInversionResult:
    """Unconstrained estimate; `physical` is False when it has a negative eigenvalue."""

    rho_raw: NDArray[np.complex128]
    min_eigenvalue: float

    @property
    def physical(self) -> bool:
        return self.min_eigenvalue >= -PHYSICAL_TOLERANCE


def linear_inversion(
    records: Sequence[MeasurementRecord], settings: TomographySettings
) -> LinearInversionResult:
    """
    Weighted least-squares estimate with the identity component fixed to 1.

    Raises:
        RankDeficientSettingsError: If the settings design has rank < 16
    """
    _check_records(records, settings)
    design = check_rank(settings)

    values = np.array([r.mean_v for r in records])
    weights = 1.0 / np.array([r.stderr_v for r in records])
    target = (values - design[:, 0]) * weights
    coeffs, *_ = np.linalg.lstsq(design[:, 1:] * weights[:, None], target, rcond=None)

    r = np.concatenate([[1.0], coeffs])
    rho = np.einsum("m,mij->ij", r, pauli_basis()) / 4.0
    rho = (rho + rho.conj().T) / 2.0
    min_eig = float(np.linalg.eigvalsh(rho).min())
    if min_eig < -PHYSICAL_TOLERANCE:
        logger.debug("Linear inversion is unphysical: min eigenvalue %.3g", min_eig)
    return LinearInversionResult(rho_raw=rho, min_eigenvalue=min_eig)


def project_to_physical(rho_raw: NDArray[np.complex128]) -> TwoQubitDensityMatrix:
    """Clip negative eigenvalues to zero and renormalize."""
    m = np.asarray(rho_raw, dtype=complex)
    values, vectors = np.linalg.eigh((m + m.conj().T) / 2.0)
    values = np.clip(values, 0.0, None)
    if values.sum() <= 0:
        return TwoQubitDensityMatrix.maximally_mixed()
    return TwoQubitDensityMatrix.normalized((vectors * values) @ vectors.conj().T)


def chi_square(
    rho: NDArray[np.complex128] | TwoQubitDensityMatrix,
    records: Sequence[MeasurementRecord],
    settings: TomographySettings,
) -> float:
    m = rho.matrix if isinstance(rho, TwoQubitDensityMatrix) else np.asarray(rho)
    predicted = np.real(np.einsum("kij,ji->k", settings.operators(), m))
    values = np.array([r.mean_v for r in records])
    sigma = np.array([r.stderr_v for r in records])
    return float(np.sum(((values - predicted) / sigma) ** 2))


def log_likelihood(
    rho: NDArray[np.complex128] | TwoQubitDensityMatrix,
    records: Sequence[MeasurementRecord],
    settings: TomographySettings,
) -> float:
    """Gaussian log-likelihood of the records, up to a rho-independent constant."""
    return -0.5 * chi_square(rho, records, settings)


def _unpack(params: NDArray[np.float64]) -> NDArray[np.complex128]:
    t = np.zeros((4, 4), dtype=complex)
    n_lower = _LOWER[0].size
    t[_LOWER] = params[:n_lower]
    t[_STRICT_LOWER] += 1j * params[n_lower:]
    return t


def _pack(t: NDArray[np.complex128]) -> NDArray[np.float64]:
    return np.concatenate([np.real(t[_LOWER]), np.imag(t[_STRICT_LOWER])])


def _rho_of(t: NDArray[np.complex128]) -> tuple[NDArray[np.complex128], float]:
    gram = t.conj().T @ t
    trace = float(np.real(np.trace(gram)))
    return gram / trace, trace


def factor_of(rho: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Lower-triangular T with T^dagger T = rho (rho must be positive definite)."""
    flipped = _EXCHANGE @ rho @ _EXCHANGE
    lower = np.linalg.cholesky(flipped)
    return _EXCHANGE @ lower.conj().T @ _EXCHANGE


@dataclass
class MleResult:
    """Outcome of a maximum-likelihood reconstruction."""

    rho: TwoQubitDensityMatrix
    converged: bool
    iterations: int
    grad_norm: float
    log_likelihood: float
    history: list[float] = field(default_factory=list, repr=False)


def mle_reconstruct(
    records: Sequence[MeasurementRecord],
    settings: TomographySettings,
    max_iter: int = MLE_MAX_ITER,
    gtol: float = MLE_GTOL,
) -> MleResult:
    """
    Physical maximum-likelihood estimate of the state.

    Starts from the projected linear-inversion estimate mixed with a little
    of the identity, then runs BFGS on chi^2 / n_records.

    Returns:
        MleResult; `converged` is False (and a warning is logged) when the
        optimizer stopped on the iteration limit without a small gradient

    Raises:
        RankDeficientSettingsError: If the settings design has rank < 16
    """
    start = project_to_physical(linear_inversion(records, settings).rho_raw).matrix
    start = (1.0 - START_MIXING) * start + START_MIXING * np.eye(4) / 4.0

    operators = settings.operators()
    values = np.array([r.mean_v for r in records])
    weights = 1.0 / np.array([r.stderr_v for r in records]) ** 2
    scale = 1.0 / len(records)

    def objective(params: NDArray[np.float64]) -> tuple[float, NDArray[np.float64]]:
        t = _unpack(params)
        rho, trace = _rho_of(t)
        residual = values - np.real(np.einsum("kij,ji->k", operators, rho))
        value = scale * float(np.sum(weights * residual**2))

        g = np.einsum("k,kij->ij", weights * residual, operators)
        g_shift = g - np.real(np.trace(g @ rho)) * np.eye(4)
        m = g_shift @ t.conj().T
        # d(chi^2) = -(4/trace) Re Tr(M dT)
        grad_t = -(4.0 * scale / trace) * m.T
        grad = np.concatenate([np.real(grad_t[_LOWER]), -np.imag(grad_t[_STRICT_LOWER])])
        return value, grad

    history: list[float] = []

    def record(params: NDArray[np.float64]) -> None:
        history.append(objective(params)[0])

    result = minimize(
        objective,
        _pack(factor_of(start)),
        jac=True,
        method="BFGS",
        callback=record,
        options={"gtol": gtol, "maxiter": max_iter},
    )

    _, grad = objective(result.x)
    grad_norm = float(np.linalg.norm(grad))
    iterations = int(result.nit)
    converged = iterations < max_iter and (bool(result.success) or grad_norm < CONVERGED_GRAD_NORM)
    if not converged:
        logger.warning(
            "MLE did not converge after %s iterations (grad norm %.2e): %s",
            iterations,
            grad_norm,
            result.message,
        )

    rho = TwoQubitDensityMatrix.normalized(_rho_of(_unpack(result.x))[0])
    return MleResult(
        rho=rho,
        converged=converged,
        iterations=iterations,
        grad_norm=grad_norm,
        log_likelihood=log_likelihood(rho, records, settings),
        history=history,
    )
