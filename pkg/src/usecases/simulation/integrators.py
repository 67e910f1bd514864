"""
時間積分モジュール。

Symplectic Euler (SE)、Geometric Langevin (GL)、BAOAB の1ステップ更新と、
境界 0, H での弾性反射、反射パリティの管理を提供します。

スカラー版（se_step など）は1粒子の参照実装で、サンプリングでは
ParticleArrays に対する配列版 advance / advance_with_increment を使用します。
extended=True の場合、ノイズはノイズ適用時点の反射パリティを掛けてから使用します。
これは境界のない拡張SDEを駆動するノイズから反射経路のノイズを得る変換です。
"""

import math
from dataclasses import dataclass

import numpy as np

from src.entities.exceptions import IntegratorInstabilityError
from src.entities.model import DEFAULT_HEIGHT, ModelParams, TurbulenceProfile, se_stability_bound
from src.entities.particle import ParticleState, StepRecord
from src.entities.run_config import IntegratorKind
from src.utils.logger import get_logger
from src.utils.types import BoolArray, FloatArray, IntArray

logger = get_logger(__name__)

# |x| がこの倍率×H を超えたステップは不安定とみなす
INSTABILITY_FACTOR = 10.0


def reflect(
    x: float, u: float, height: float, parity: int = 1, n_refl: int = 0
) -> tuple[float, float, int, int]:
    """境界での弾性反射を位置が [0, H] に入るまで繰り返す。

    Returns:
        (x', u', parity', n_refl')

    Raises:
        IntegratorInstabilityError: x, u が非有限、または |x| > 10H の場合
    """
    if not (math.isfinite(x) and math.isfinite(u)) or abs(x) > INSTABILITY_FACTOR * height:
        raise IntegratorInstabilityError(x, u, height)
    while x < 0.0 or x > height:
        x = -x if x < 0.0 else 2.0 * height - x
        u = -u
        parity = -parity
        n_refl += 1
    return x, u, parity, n_refl


def ou_scale(lam: FloatArray | float, h: float) -> FloatArray:
    """OU過程の1ステップ標準偏差係数 √((1 − e^{−2λh})/(2λ))。"""
    lam_arr = np.asarray(lam, dtype=np.float64)
    return np.sqrt(-np.expm1(-2.0 * lam_arr * h) / (2.0 * lam_arr))


def _record(
    state: ParticleState,
    x: float,
    u: float,
    h: float,
    xi: float,
    noise_parity: int,
    reflections: tuple[int, int],
    height: float,
    warning: bool = False,
) -> StepRecord:
    parity, n_refl = reflections
    new_state = ParticleState(
        x=x, u=u, t=state.t + h, parity=parity, n_refl=n_refl, height=height
    )
    return StepRecord(
        new_state=new_state,
        reflections_this_step=n_refl - state.n_refl,
        noise_used=xi,
        noise_parity=noise_parity,
        stability_warning=warning,
    )


def se_step(
    state: ParticleState, h: float, xi: float, params: ModelParams, *, extended: bool = False
) -> StepRecord:
    """Symplectic Euler の1ステップ。

    U' = (1 − λ(X)h)U − ∂V/∂X(X, U)h + σ(X)√h·ξ、X' = X + U'h の後に反射します。
    h >= 2/λ(eps_reg) の場合は stability_warning を立てて警告を記録します。
    """
    profile = TurbulenceProfile(params)
    warning = h >= se_stability_bound(params)
    if warning:
        logger.warning("SEの安定性上限を超えるステップ幅です", step_size=h)

    z = state.parity * xi if extended else xi
    x, u = state.x, state.u
    lam = float(profile.lambda_(x))
    u_new = (
        (1.0 - lam * h) * u
        - float(profile.dv_dx(x, u)) * h
        + float(profile.diffusion_sigma(x)) * math.sqrt(h) * z
    )
    x_new = x + u_new * h
    x_new, u_new, parity, n_refl = reflect(x_new, u_new, profile.height, state.parity, state.n_refl)
    return _record(
        state, x_new, u_new, h, xi, state.parity, (parity, n_refl), profile.height, warning
    )


def gl_step(
    state: ParticleState, h: float, xi: float, params: ModelParams, *, extended: bool = False
) -> StepRecord:
    """Geometric Langevin の1ステップ（O → B → A、係数はステップ開始位置で評価）。"""
    profile = TurbulenceProfile(params)
    z = state.parity * xi if extended else xi
    x, u = state.x, state.u
    lam = float(profile.lambda_(x))
    u_star = math.exp(-lam * h) * u + float(profile.diffusion_sigma(x)) * float(
        ou_scale(lam, h)
    ) * z
    u_new = u_star - float(profile.dv_dx(x, u_star)) * h
    x_new = x + u_new * h
    x_new, u_new, parity, n_refl = reflect(x_new, u_new, profile.height, state.parity, state.n_refl)
    return _record(
        state, x_new, u_new, h, xi, state.parity, (parity, n_refl), profile.height
    )


def baoab_step(
    state: ParticleState, h: float, xi: float, params: ModelParams, *, extended: bool = False
) -> StepRecord:
    """BAOAB の1ステップ。

    B(h/2), A(h/2), O(h), A(h/2), B(h/2) の順に更新し、O の係数は中間位置で評価します。
    位置を更新する各 A ステップの直後に反射を適用します。
    """
    profile = TurbulenceProfile(params)
    height = profile.height
    x, u = state.x, state.u
    half = 0.5 * h

    u = u - float(profile.dv_dx(x, u)) * half
    x, u, parity, n_refl = reflect(x + u * half, u, height, state.parity, state.n_refl)

    noise_parity = parity
    z = noise_parity * xi if extended else xi
    lam = float(profile.lambda_(x))
    u = math.exp(-lam * h) * u + float(profile.diffusion_sigma(x)) * float(ou_scale(lam, h)) * z

    x, u, parity, n_refl = reflect(x + u * half, u, height, parity, n_refl)
    u = u - float(profile.dv_dx(x, u)) * half
    return _record(state, x, u, h, xi, noise_parity, (parity, n_refl), height)


STEP_FUNCTIONS = {
    IntegratorKind.SE: se_step,
    IntegratorKind.GL: gl_step,
    IntegratorKind.BAOAB: baoab_step,
}


def fold(x_tilde: float, height: float) -> tuple[float, int]:
    """拡張座標の周期的な折り返し。

    η(x̃) = x̃ − n(x̃)H（n(x̃) は x̃ ∈ [(2n−1)H, (2n+1)H) を満たす偶数）を計算し、
    (|η|, sign(η)) を返します。
    """
    eta = x_tilde - 2.0 * math.floor((x_tilde + height) / (2.0 * height)) * height
    sign = 1 if eta >= 0.0 else -1
    return abs(eta), sign


def extended_step_oracle(
    x_tilde: float,
    u_tilde: float,
    h: float,
    xi: float,
    params: ModelParams,
    method: IntegratorKind,
) -> tuple[float, float]:
    """境界のない拡張SDEの1ステップ（反射処理の検証用オラクル）。

    係数は折り返した高さ |η(x̃)| で評価し、ポテンシャル勾配には sign(η) を掛けます。
    反射経路の状態は (X, U) = (|η(x̃)|, sign(η)·ũ) で復元できます。
    """
    profile = TurbulenceProfile(params)
    height = profile.height

    def drift(x: float, u: float) -> float:
        xa, sign = fold(x, height)
        return sign * float(profile.dv_dx(xa, u))

    def ou(x: float, u: float) -> float:
        xa, _ = fold(x, height)
        lam = float(profile.lambda_(xa))
        return math.exp(-lam * h) * u + float(profile.diffusion_sigma(xa)) * float(
            ou_scale(lam, h)
        ) * xi

    if method == IntegratorKind.SE:
        xa, _ = fold(x_tilde, height)
        lam = float(profile.lambda_(xa))
        u_new = (
            (1.0 - lam * h) * u_tilde
            - drift(x_tilde, u_tilde) * h
            + float(profile.diffusion_sigma(xa)) * math.sqrt(h) * xi
        )
        return x_tilde + u_new * h, u_new

    if method == IntegratorKind.GL:
        u_star = ou(x_tilde, u_tilde)
        u_new = u_star - drift(x_tilde, u_star) * h
        return x_tilde + u_new * h, u_new

    half = 0.5 * h
    u = u_tilde - drift(x_tilde, u_tilde) * half
    x = x_tilde + u * half
    u = ou(x, u)
    x = x + u * half
    u = u - drift(x, u) * half
    return x, u


def extended_to_reflected(x_tilde: float, u_tilde: float, height: float) -> tuple[float, float, int]:
    """拡張状態を反射経路の (X, U, parity) に写像。"""
    xa, sign = fold(x_tilde, height)
    return xa, sign * u_tilde, sign


@dataclass
class ParticleArrays:
    """粒子群の状態配列。

    parity は ±1 の浮動小数で保持します。failed は不安定化したサンプルを示し、
    一度立つとその経路の終了まで保持されます。
    """

    x: FloatArray
    u: FloatArray
    parity: FloatArray
    n_refl: IntArray
    failed: BoolArray

    @classmethod
    def release(cls, n: int, x0: float, u0: float) -> "ParticleArrays":
        """n 個の粒子を同一の初期状態で生成。"""
        return cls(
            x=np.full(n, x0, dtype=np.float64),
            u=np.full(n, u0, dtype=np.float64),
            parity=np.ones(n, dtype=np.float64),
            n_refl=np.zeros(n, dtype=np.int64),
            failed=np.zeros(n, dtype=bool),
        )

    @property
    def size(self) -> int:
        """粒子数。"""
        return int(self.x.shape[0])

    def copy(self) -> "ParticleArrays":
        """複製。"""
        return ParticleArrays(
            x=self.x.copy(),
            u=self.u.copy(),
            parity=self.parity.copy(),
            n_refl=self.n_refl.copy(),
            failed=self.failed.copy(),
        )

    def select(self, mask: BoolArray, other: "ParticleArrays") -> "ParticleArrays":
        """mask が真の成分を self、偽の成分を other から取った状態。"""
        return ParticleArrays(
            x=np.where(mask, self.x, other.x),
            u=np.where(mask, self.u, other.u),
            parity=np.where(mask, self.parity, other.parity),
            n_refl=np.where(mask, self.n_refl, other.n_refl),
            failed=np.where(mask, self.failed, other.failed),
        )

    def state(self, index: int, t: float = 0.0, height: float = DEFAULT_HEIGHT) -> ParticleState:
        """index 番目の粒子状態。"""
        return ParticleState(
            x=float(self.x[index]),
            u=float(self.u[index]),
            t=t,
            parity=int(self.parity[index]),
            n_refl=int(self.n_refl[index]),
            height=height,
        )


def reflect_arrays(
    x: FloatArray,
    u: FloatArray,
    parity: FloatArray,
    n_refl: IntArray,
    failed: BoolArray,
    height: float,
) -> ParticleArrays:
    """配列版の弾性反射。

    不安定なサンプル（非有限、または |x| > 10H）は failed とし、
    以降の計算が有限に保たれるよう x = H/2, u = 0 に置き換えます。
    """
    unstable = ~np.isfinite(x) | ~np.isfinite(u) | (np.abs(x) > INSTABILITY_FACTOR * height)
    failed = failed | unstable
    x = np.where(failed, 0.5 * height, x)
    u = np.where(failed, 0.0, u)
    parity = parity.copy()
    n_refl = n_refl.copy()

    while True:
        below = x < 0.0
        above = x > height
        outside = below | above
        if not outside.any():
            break
        x = np.where(below, -x, np.where(above, 2.0 * height - x, x))
        u = np.where(outside, -u, u)
        parity = np.where(outside, -parity, parity)
        n_refl = n_refl + outside

    return ParticleArrays(x=x, u=u, parity=parity, n_refl=n_refl, failed=failed)


def _se_arrays(
    profile: TurbulenceProfile, p: ParticleArrays, h: float, lam: FloatArray, noise: FloatArray
) -> ParticleArrays:
    u_new = (
        (1.0 - lam * h) * p.u - profile.dv_dx(p.x, p.u) * h + profile.diffusion_sigma(p.x) * noise
    )
    x_new = p.x + u_new * h
    return reflect_arrays(x_new, u_new, p.parity, p.n_refl, p.failed, profile.height)


def _gl_arrays(
    profile: TurbulenceProfile, p: ParticleArrays, h: float, lam: FloatArray, noise: FloatArray
) -> ParticleArrays:
    u_star = np.exp(-lam * h) * p.u + profile.diffusion_sigma(p.x) * noise
    u_new = u_star - profile.dv_dx(p.x, u_star) * h
    x_new = p.x + u_new * h
    return reflect_arrays(x_new, u_new, p.parity, p.n_refl, p.failed, profile.height)


def _baoab_arrays(
    profile: TurbulenceProfile, p: ParticleArrays, h: float, xi: FloatArray, extended: bool
) -> tuple[ParticleArrays, FloatArray]:
    half = 0.5 * h
    u = p.u - profile.dv_dx(p.x, p.u) * half
    mid = reflect_arrays(p.x + u * half, u, p.parity, p.n_refl, p.failed, profile.height)

    noise_parity = mid.parity.copy()
    z = noise_parity * xi if extended else xi
    lam = profile.lambda_(mid.x)
    u = np.exp(-lam * h) * mid.u + profile.diffusion_sigma(mid.x) * ou_scale(lam, h) * z

    end = reflect_arrays(mid.x + u * half, u, mid.parity, mid.n_refl, mid.failed, profile.height)
    end.u = end.u - profile.dv_dx(end.x, end.u) * half
    return end, noise_parity


def advance(
    method: IntegratorKind,
    profile: TurbulenceProfile,
    particles: ParticleArrays,
    h: float,
    xi: FloatArray,
    *,
    extended: bool = False,
) -> tuple[ParticleArrays, FloatArray]:
    """粒子群を刻み幅 h で1ステップ進める。

    Returns:
        (新しい状態, ノイズ適用時点の反射パリティ)
    """
    if method == IntegratorKind.BAOAB:
        return _baoab_arrays(profile, particles, h, xi, extended)

    noise_parity = particles.parity
    z = noise_parity * xi if extended else xi
    lam = profile.lambda_(particles.x)
    if method == IntegratorKind.SE:
        return _se_arrays(profile, particles, h, lam, math.sqrt(h) * z), noise_parity
    return _gl_arrays(profile, particles, h, lam, ou_scale(lam, h) * z), noise_parity


def advance_with_increment(
    method: IntegratorKind,
    profile: TurbulenceProfile,
    particles: ParticleArrays,
    h: FloatArray | float,
    increment: FloatArray,
) -> ParticleArrays:
    """累積済みのノイズ増分を使って1ステップ進める（適応刻み用、SE/GLのみ）。

    increment は SE ではブラウン運動の増分、GL では OU 重み付きの増分で、
    反射符号はすでに掛けられているものとします。
    """
    h_arr = np.asarray(h, dtype=np.float64)
    lam = profile.lambda_(particles.x)
    if method == IntegratorKind.SE:
        u_new = (
            (1.0 - lam * h_arr) * particles.u
            - profile.dv_dx(particles.x, particles.u) * h_arr
            + profile.diffusion_sigma(particles.x) * increment
        )
    elif method == IntegratorKind.GL:
        u_star = np.exp(-lam * h_arr) * particles.u + profile.diffusion_sigma(particles.x) * increment
        u_new = u_star - profile.dv_dx(particles.x, u_star) * h_arr
    else:
        raise ValueError(f"適応刻みに対応していない積分法です: {method.value}")
    x_new = particles.x + u_new * h_arr
    return reflect_arrays(
        x_new, u_new, particles.parity, particles.n_refl, particles.failed, profile.height
    )
