"""Diversity scores over kernel feature matrices.

Vendi and RKE are prompt-unaware effective mode counts of the kernel
covariance. The Scendi pair re-scores the two halves of the Schur
split: scendi_i counts model-driven modes (diversity the generator
adds beyond what prompts explain), scendi_t counts prompt-driven ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covariance import SchurDecomposition, blocks, covariance_matrix, schur_decompose
from .kernels import FeatureMatrix, KernelConfig
from .spectral import ENTROPY_FLOOR, DEFAULT_REL_CUTOFF, clamp_psd, eigh, matrix_entropy

# Below this much unexplained mass the model-driven part is treated as
# empty and its score is 1 by the empty-sum convention.
TRACE_EPS = 0.0


@dataclass(frozen=True)
class DiversityReport:
    """All four scores plus trace split and (truncated) spectra."""

    vendi: float
    rke: float
    scendi_i: float
    scendi_t: float
    trace_i: float
    trace_t: float
    spectrum_ii: list[float]
    spectrum_lambda_i: list[float]
    spectrum_lambda_t: list[float]
    kernel_config: KernelConfig = field(default_factory=KernelConfig)

    def to_dict(self) -> dict:
        return {
            "scores": {
                "vendi": self.vendi,
                "rke": self.rke,
                "scendi_i": self.scendi_i,
                "scendi_t": self.scendi_t,
            },
            "traces": {"trace_i": self.trace_i, "trace_t": self.trace_t},
            "spectra": {
                "c_ii": self.spectrum_ii,
                "lambda_i": self.spectrum_lambda_i,
                "lambda_t": self.spectrum_lambda_t,
            },
            "kernel_config": self.kernel_config.to_dict(),
        }


def _covariance_spectrum(phi: FeatureMatrix) -> np.ndarray:
    return clamp_psd(eigh(covariance_matrix(phi)).values)


def vendi(phi: FeatureMatrix) -> float:
    """exp of the von Neumann entropy of the kernel covariance spectrum."""
    return float(np.exp(matrix_entropy(_covariance_spectrum(phi))))


def rke(phi: FeatureMatrix) -> float:
    """Reciprocal squared Frobenius norm of the kernel covariance."""
    c = covariance_matrix(phi)
    return float(1.0 / np.sum(c * c))


def _partial_entropy_score(spectrum: np.ndarray) -> float:
    # exp( sum_j l_j log(trace / l_j) ) over nonzero eigenvalues; the
    # empty spectrum scores 1 (no diversity in a vanished component).
    spectrum = np.asarray(spectrum, dtype=np.float64)
    trace = float(spectrum.sum())
    if trace <= TRACE_EPS:
        return 1.0
    live = spectrum[spectrum > ENTROPY_FLOOR]
    if live.size == 0:
        return 1.0
    return float(np.exp(np.sum(live * (np.log(trace) - np.log(live)))))


def scendi(decomp: SchurDecomposition) -> float:
    """Model-driven diversity: entropy score of the Schur complement part.

    Algebraically equal to exp(Tr(lambda_i) * H(lambda_i / Tr(lambda_i))).
    """
    return _partial_entropy_score(decomp.spectrum_i)


def scendi_text(decomp: SchurDecomposition) -> float:
    """Prompt-driven diversity: same score on the text-explained part."""
    return _partial_entropy_score(decomp.spectrum_t)


def _truncate(spectrum: np.ndarray) -> list[float]:
    return [float(v) for v in spectrum if v > ENTROPY_FLOOR]


def evaluate(
    phi_i: FeatureMatrix,
    phi_t: FeatureMatrix,
    rel_cutoff: float = DEFAULT_REL_CUTOFF,
) -> DiversityReport:
    """Full pipeline: blocks, Schur split, all four scores, spectra."""
    b = blocks(phi_i, phi_t)
    decomp = schur_decompose(b, rel_cutoff)
    return DiversityReport(
        vendi=vendi(phi_i),
        rke=rke(phi_i),
        scendi_i=scendi(decomp),
        scendi_t=scendi_text(decomp),
        trace_i=decomp.trace_i,
        trace_t=decomp.trace_t,
        spectrum_ii=_truncate(_covariance_spectrum(phi_i)),
        spectrum_lambda_i=_truncate(decomp.spectrum_i),
        spectrum_lambda_t=_truncate(decomp.spectrum_t),
        kernel_config=phi_i.kernel_config,
    )
