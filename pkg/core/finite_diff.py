"""
Central finite differences
Gradient and Hessian stencils shared by the homogeneous, operator and hunter modules
"""

from typing import Callable

import numpy as np


def fd_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient of a scalar function"""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    xx = x.copy()
    for i in range(x.size):
        xx[i] = x[i] + h
        forward = f(xx)
        xx[i] = x[i] - h
        backward = f(xx)
        xx[i] = x[i]
        grad[i] = (forward - backward) / (2.0 * h)
    return grad


def fd_hessian(f: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference Hessian; mixed partials use the four-point stencil"""
    x = np.asarray(x, dtype=float)
    n = x.size
    hess = np.zeros((n, n))
    center = f(x)
    eye = np.eye(n) * h
    for i in range(n):
        hess[i, i] = (f(x + eye[i]) - 2.0 * center + f(x - eye[i])) / (h * h)
        for j in range(i + 1, n):
            value = (
                f(x + eye[i] + eye[j])
                - f(x + eye[i] - eye[j])
                - f(x - eye[i] + eye[j])
                + f(x - eye[i] - eye[j])
            ) / (4.0 * h * h)
            hess[i, j] = value
            hess[j, i] = value
    return hess


def fd_hessian_batch(f: Callable[[np.ndarray], np.ndarray], points: np.ndarray, h: float) -> np.ndarray:
    """Central-difference Hessians at every row of an (N, n) array; f maps (N, n) -> (N,)"""
    points = np.asarray(points, dtype=float)
    count, n = points.shape
    hess = np.zeros((count, n, n))
    center = f(points)
    eye = np.eye(n) * h
    for i in range(n):
        hess[:, i, i] = (f(points + eye[i]) - 2.0 * center + f(points - eye[i])) / (h * h)
        for j in range(i + 1, n):
            value = (
                f(points + eye[i] + eye[j])
                - f(points + eye[i] - eye[j])
                - f(points - eye[i] + eye[j])
                + f(points - eye[i] - eye[j])
            ) / (4.0 * h * h)
            hess[:, i, j] = value
            hess[:, j, i] = value
    return hess
