"""Плотное SVD односторонним методом Якоби (Hestenes).

Используется для развёрток TT-SVD (матрицы порядка 112 × 7), поэтому
достаточно простого и точного метода без бидиагонализации.
"""

from __future__ import annotations

import logging

import numpy as np

from qregress.exceptions import DataError, NumericalError, ShapeError

logger = logging.getLogger(__name__)

MAX_SWEEPS = 60
_EPS = np.finfo(np.float64).eps


def svd(matrix: np.ndarray, max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Экономное SVD: A = U · diag(S) · Vt.

    Сингулярные числа упорядочены по убыванию. Калибровка знаков:
    наибольшая по модулю компонента каждого левого сингулярного вектора
    неотрицательна (соответствующая строка Vt меняет знак вместе с ним).

    Args:
        matrix: Вещественная матрица m × n.
        max_sweeps: Предельное число проходов Якоби.

    Returns:
        Кортеж (U: m × k, S: k, Vt: k × n), k = min(m, n).

    Raises:
        ShapeError: Вход не двумерный или пустой.
        DataError: Матрица содержит NaN или Inf.
        NumericalError: Метод не сошёлся за max_sweeps проходов.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ShapeError(f"Ожидалась непустая матрица, форма {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError("Матрица для SVD содержит нечисловые значения")

    m, n = a.shape
    if m < n:
        u_t, s, vt_t = _jacobi_tall(a.T, max_sweeps)
        u, vt = vt_t.T, u_t.T
    else:
        u, s, vt = _jacobi_tall(a, max_sweeps)
    return _fix_signs(u, s, vt)


def _jacobi_tall(a: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD для m ≥ n: ортогонализация столбцов вращениями Гивенса справа."""
    m, n = a.shape
    work = a.copy()
    v = np.eye(n)

    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = float(work[:, p] @ work[:, p])
                beta = float(work[:, q] @ work[:, q])
                gamma = float(work[:, p] @ work[:, q])
                if gamma == 0.0 or abs(gamma) <= _EPS * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                col_p = work[:, p].copy()
                work[:, p] = c * col_p - s * work[:, q]
                work[:, q] = s * col_p + c * work[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if not rotated:
            logger.debug("Якоби SVD %dx%d сошёлся за %d проходов", m, n, sweep + 1)
            break
    else:
        raise NumericalError("jacobi-svd", max_sweeps)

    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    work = work[:, order]
    v = v[:, order]

    cutoff = max(m, n) * _EPS * (sigma[0] if sigma.size else 0.0)
    u = np.zeros((m, n))
    nonzero = sigma > cutoff
    u[:, nonzero] = work[:, nonzero] / sigma[nonzero]
    if not np.all(nonzero):
        u = _complete_basis(u, nonzero)
    return u, sigma, v.T


def _complete_basis(u: np.ndarray, filled: np.ndarray) -> np.ndarray:
    """Дополнить столбцы при нулевых σ ортонормированным дополнением.

    Кандидаты — единичные векторы e_0, e_1, … по порядку (Грам — Шмидт
    с повторной ортогонализацией).
    """
    m = u.shape[0]
    basis = [u[:, j] for j in np.flatnonzero(filled)]
    candidates = iter(np.eye(m))
    for j in np.flatnonzero(~filled):
        for e in candidates:
            vec = e.copy()
            for _ in range(2):
                for b in basis:
                    vec -= (b @ vec) * b
            norm = np.linalg.norm(vec)
            if norm > 1e-8:
                u[:, j] = vec / norm
                basis.append(u[:, j])
                break
    return u


def _fix_signs(u: np.ndarray, s: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pivots = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[pivots, np.arange(u.shape[1])] < 0.0, -1.0, 1.0)
    return u * signs, s, vt * signs[:, None]


def fix_column_signs(vectors: np.ndarray) -> np.ndarray:
    """Ту же калибровку знаков применить к столбцам (например, к собственным векторам)."""
    vectors = np.array(vectors, dtype=np.float64)
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[pivots, np.arange(vectors.shape[1])] < 0.0, -1.0, 1.0)
    return vectors * signs
