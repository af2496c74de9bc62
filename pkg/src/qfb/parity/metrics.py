"""Entanglement and fidelity metrics of two-qubit states."""

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import NDArray

from .states import PHI_PLUS, BellTarget, TwoQubitDensityMatrix, as_density

SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
_SPIN_FLIP = np.kron(SIGMA_Y, SIGMA_Y)

DensityLike = TwoQubitDensityMatrix | NDArray[np.complex128]


def psd_sqrt(matrix: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Square root of a Hermitian PSD matrix; round-off negative eigenvalues are clipped."""
    values, vectors = np.linalg.eigh(matrix)
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T


def concurrence(rho: DensityLike) -> float:
    """
    Wootters concurrence max(0, l1 - l2 - l3 - l4).

    The l_k are the decreasing square roots of the eigenvalues of
    rho (Y x Y) rho* (Y x Y), computed here from the Hermitian form
    sqrt(rho) rho~ sqrt(rho).

    Raises:
        InvalidDensityMatrixError: If rho is not a valid density matrix
    """
    m = as_density(rho).matrix
    flipped = _SPIN_FLIP @ m.conj() @ _SPIN_FLIP
    root = psd_sqrt(m)
    values = np.linalg.eigvalsh(root @ flipped @ root)
    lam = np.sort(np.sqrt(np.clip(values, 0.0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def partial_transpose(matrix: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Partial transpose over qubit B (the left tensor factor)."""
    t = np.asarray(matrix).reshape(2, 2, 2, 2)
    return t.transpose(2, 1, 0, 3).reshape(4, 4)


def log_negativity(rho: DensityLike) -> float:
    """log2 of the trace norm of the partial transpose; 0 for PPT states."""
    m = as_density(rho).matrix
    trace_norm = float(np.abs(np.linalg.eigvalsh(partial_transpose(m))).sum())
    return max(0.0, math.log2(trace_norm))


def ebit_efficiency(p_success: float, rho: DensityLike) -> float:
    """Ebits per run: p_success times the logarithmic negativity."""
    if not 0.0 <= p_success <= 1.0:
        raise ValueError(f"p_success must be in [0, 1], got {p_success}")
    return p_success * log_negativity(rho)


def bell_fidelity(rho: DensityLike, target: BellTarget = PHI_PLUS) -> float:
    """Overlap <B|rho|B> with a Bell state."""
    psi = target.ket()
    return float(np.real(psi.conj() @ as_density(rho).matrix @ psi))


def state_fidelity(rho: DensityLike, sigma: DensityLike) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    root = psd_sqrt(as_density(rho).matrix)
    inner = root @ as_density(sigma).matrix @ root
    values = np.clip(np.linalg.eigvalsh((inner + inner.conj().T) / 2.0), 0.0, None)
    return float(min(1.0, np.sqrt(values).sum() ** 2))


@dataclass(frozen=True)
class EntanglementMetrics:
    """Metrics block attached to exported states."""

    concurrence: float
    log_negativity: float
    bell_fidelity: float
    p_success: float
    efficiency: float

    @classmethod
    def of(
        cls,
        rho: DensityLike,
        p_success: float = 1.0,
        target: BellTarget = PHI_PLUS,
    ) -> "EntanglementMetrics":
        state = as_density(rho)
        return cls(
            concurrence=concurrence(state),
            log_negativity=log_negativity(state),
            bell_fidelity=bell_fidelity(state, target),
            p_success=p_success,
            efficiency=ebit_efficiency(p_success, state),
        )

    def to_dict(self) -> dict[str, float]:
        return asdict(self)
