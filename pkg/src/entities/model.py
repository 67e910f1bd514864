"""
境界層乱流モデルモジュール。

鉛直方向の速度分散プロファイル σ_U(X)、速度相関時間 τ(X) と、
そこから導かれるSDE係数（減衰率 λ、拡散係数 σ、ポテンシャル勾配 ∂V/∂X）を提供します。

プロファイルは高さ x を [eps_reg, H - eps_reg] にクランプしてから評価します。
クランプ領域ではプロファイルは一定で、x に関する導関数は厳密に0です。

モジュール関数（sigma_u など）は定義域を検証するスカラー/配列兼用のAPIです。
大量サンプルの時間積分では検証を省いた TurbulenceProfile のメソッドを使用します。
"""

from dataclasses import dataclass, field
from typing import overload

import numpy as np

from src.entities.base import ValueObject
from src.entities.exceptions import InvariantViolationError, ProfileDomainError
from src.utils.types import FloatArray, FloatLike
from src.utils.validators import validate_positive

DEFAULT_KAPPA_SIGMA = 1.3
DEFAULT_KAPPA_TAU = 0.5
DEFAULT_U_STAR = 0.2
DEFAULT_HEIGHT = 1.0
DEFAULT_EPS_REG = 0.01


@dataclass(frozen=True)
class ModelParams(ValueObject):
    """境界層モデルのパラメータ（無次元: X_ref = 1000 m, U_ref = 1 m/s, t_ref = 1000 s）。"""

    kappa_sigma: float = DEFAULT_KAPPA_SIGMA
    kappa_tau: float = DEFAULT_KAPPA_TAU
    u_star: float = DEFAULT_U_STAR
    height: float = DEFAULT_HEIGHT
    eps_reg: float = DEFAULT_EPS_REG
    x_ref: float = DEFAULT_HEIGHT
    # Trueの場合は拡散係数を0とし、ノイズなしの常微分方程式として扱う
    deterministic: bool = False

    def __post_init__(self) -> None:
        """バリデーション。"""
        for name in ("kappa_sigma", "kappa_tau", "u_star", "height"):
            value = getattr(self, name)
            is_valid, _ = validate_positive(value, name)
            if not is_valid:
                raise InvariantViolationError(f"{name} > 0", value)

        if not (0.0 < self.eps_reg < self.height / 2):
            raise InvariantViolationError("0 < eps_reg < H/2", self.eps_reg)

        if not (0.0 <= self.x_ref <= self.height):
            raise InvariantViolationError("0 <= x_ref <= H", self.x_ref)


@dataclass(frozen=True)
class TurbulenceProfile:
    """検証なしの配列向けプロファイル評価器。

    入力は [0, H] 内にあることを呼び出し側が保証します。
    """

    params: ModelParams
    _scale: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        """定数の前計算。"""
        object.__setattr__(self, "_scale", self.params.kappa_sigma * self.params.u_star)

    @property
    def height(self) -> float:
        """境界層の高さH。"""
        return self.params.height

    def clamp(self, x: FloatLike) -> FloatArray:
        """高さを [eps_reg, H - eps_reg] にクランプ。"""
        p = self.params
        return np.clip(x, p.eps_reg, p.height - p.eps_reg)

    def sigma_u_squared(self, x: FloatLike) -> FloatArray:
        """速度分散 σ_U²。"""
        xc = self.clamp(x)
        return self._scale**2 * (1.0 - xc / self.params.height) ** 1.5

    def sigma_u(self, x: FloatLike) -> FloatArray:
        """速度スケール σ_U。"""
        xc = self.clamp(x)
        return self._scale * (1.0 - xc / self.params.height) ** 0.75

    def tau(self, x: FloatLike) -> FloatArray:
        """速度相関時間 τ。"""
        xc = self.clamp(x)
        return self.params.kappa_tau * xc / self.sigma_u(xc)

    def lambda_(self, x: FloatLike) -> FloatArray:
        """減衰率 λ = 1/τ。"""
        return 1.0 / self.tau(x)

    def diffusion_sigma(self, x: FloatLike) -> FloatArray:
        """拡散係数 σ = √(2σ_U²/τ)。"""
        if self.params.deterministic:
            return np.zeros_like(np.asarray(x, dtype=np.float64))
        return np.sqrt(2.0 * self.sigma_u_squared(x) / self.tau(x))

    def dsigma2_dx(self, x: FloatLike) -> FloatArray:
        """dσ_U²/dX（クランプ領域では0）。"""
        p = self.params
        x_arr = np.asarray(x, dtype=np.float64)
        interior = (x_arr > p.eps_reg) & (x_arr < p.height - p.eps_reg)
        xc = self.clamp(x_arr)
        slope = -1.5 * self._scale**2 * np.sqrt(1.0 - xc / p.height) / p.height
        return np.where(interior, slope, 0.0)

    def dv_dx(self, x: FloatLike, u: FloatLike) -> FloatArray:
        """ポテンシャル勾配 ∂V/∂X = −½(1 + u²/σ_U²)·dσ_U²/dX。"""
        u_arr = np.asarray(u, dtype=np.float64)
        return -0.5 * (1.0 + u_arr * u_arr / self.sigma_u_squared(x)) * self.dsigma2_dx(x)

    def potential(self, x: FloatLike, u: FloatLike) -> FloatArray:
        """ポテンシャル V = −½[σ_U² + u²·log(σ_U²/σ_U²(x_ref))]。"""
        u_arr = np.asarray(u, dtype=np.float64)
        s2 = self.sigma_u_squared(x)
        s2_ref = self.sigma_u_squared(self.params.x_ref)
        return -0.5 * (s2 + u_arr * u_arr * np.log(s2 / s2_ref))


def _check_domain(x: FloatLike, params: ModelParams) -> None:
    """定義域 [0, H] の検証。"""
    x_arr = np.asarray(x, dtype=np.float64)
    bad = ~np.isfinite(x_arr) | (x_arr < 0.0) | (x_arr > params.height)
    if np.any(bad):
        offending = float(x_arr[bad].flat[0]) if x_arr.ndim else float(x_arr)
        raise ProfileDomainError(offending, params.height)


@overload
def _as_output(value: FloatArray, like: float) -> float: ...
@overload
def _as_output(value: FloatArray, like: FloatArray) -> FloatArray: ...
def _as_output(value: FloatArray, like: FloatLike) -> FloatLike:
    """入力がスカラーならfloatで返す。"""
    if np.ndim(like) == 0:
        return float(value)
    return np.asarray(value, dtype=np.float64)


def sigma_u(x: FloatLike, params: ModelParams) -> FloatLike:
    """速度スケール σ_U(x) = κ_σ·u*·(1 − x_c/H)^{3/4}。

    Raises:
        ProfileDomainError: x が [0, H] の外、または非有限の場合
    """
    _check_domain(x, params)
    return _as_output(TurbulenceProfile(params).sigma_u(x), x)


def tau(x: FloatLike, params: ModelParams) -> FloatLike:
    """速度相関時間 τ(x) = κ_τ·x_c/σ_U(x_c)。"""
    _check_domain(x, params)
    return _as_output(TurbulenceProfile(params).tau(x), x)


def lambda_(x: FloatLike, params: ModelParams) -> FloatLike:
    """減衰率 λ(x) = 1/τ(x)。最大値は λ(eps_reg)。"""
    _check_domain(x, params)
    return _as_output(TurbulenceProfile(params).lambda_(x), x)


def diffusion_sigma(x: FloatLike, params: ModelParams) -> FloatLike:
    """拡散係数 σ(x) = √(2σ_U(x)²/τ(x))。"""
    _check_domain(x, params)
    return _as_output(TurbulenceProfile(params).diffusion_sigma(x), x)


def dV_dX(x: FloatLike, u: FloatLike, params: ModelParams) -> FloatLike:  # noqa: N802
    """ポテンシャル勾配 ∂V/∂X(x, u)。

    Raises:
        ProfileDomainError: x が定義域外の場合
        ValueError: u が非有限の場合
    """
    _check_domain(x, params)
    if not np.all(np.isfinite(u)):
        raise ValueError("速度uは有限値である必要があります")
    return _as_output(TurbulenceProfile(params).dv_dx(x, u), x)


def potential(x: FloatLike, u: FloatLike, params: ModelParams) -> FloatLike:
    """ポテンシャル V(x, u)。"""
    _check_domain(x, params)
    return _as_output(TurbulenceProfile(params).potential(x, u), x)


def se_stability_bound(params: ModelParams, x: float | None = None) -> float:
    """SEの安定性上限 2/λ(x)（既定は最大減衰率 λ(eps_reg)）。"""
    profile = TurbulenceProfile(params)
    reference = params.eps_reg if x is None else x
    return float(2.0 / profile.lambda_(reference))
