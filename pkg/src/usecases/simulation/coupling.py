"""
レベル間結合モジュール。

MLMCの差分サンプル Y_ℓ = P_ℓ − P_{ℓ−1} のために、細かい経路のノイズから
粗い経路のノイズを構成します（一様刻みと適応刻み、反射符号の考慮を含む）。

このモジュールのサンプル関数は1サンプルずつ計算するスカラーの参照実装です。
推定で使う配列版は sampler モジュールにあります。
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from src.entities.base import ValueObject
from src.entities.exceptions import (
    IntegratorInstabilityError,
    InvariantViolationError,
    TimelineError,
)
from src.entities.model import ModelParams, TurbulenceProfile
from src.entities.particle import ParticleState
from src.entities.qoi import QoISpec, evaluate
from src.entities.run_config import IntegratorKind
from src.usecases.simulation.integrators import (
    STEP_FUNCTIONS,
    ParticleArrays,
    advance_with_increment,
    ou_scale,
)
from src.usecases.simulation.noise import NoiseStream, draw_normal
from src.utils.types import FloatArray, FloatLike

FINE = "fine"
COARSE = "coarse"
BOTH = "both"


def coarse_noise_se(
    xi_n: FloatLike,
    xi_n1: FloatLike,
    s_n_f: FloatLike = 1,
    s_n1_f: FloatLike = 1,
    s_n_c: FloatLike = 1,
) -> FloatLike:
    """SE用の粗いノイズ S_c(S_n ξ_n + S_{n+1} ξ_{n+1})/√2。"""
    return s_n_c * (s_n_f * xi_n + s_n1_f * xi_n1) / math.sqrt(2.0)


def coarse_noise_gl(
    xi_n: FloatLike,
    xi_n1: FloatLike,
    lambda_xn: FloatLike,
    h: float,
    s_n_f: FloatLike = 1,
    s_n1_f: FloatLike = 1,
    s_n_c: FloatLike = 1,
) -> FloatLike:
    """GL/BAOAB用の粗いノイズ S_c(e^{−λh}S_n ξ_n + S_{n+1} ξ_{n+1})/√(e^{−2λh} + 1)。

    λ は2つの細かいステップの開始時点における細かい経路の位置で評価します。
    """
    decay = np.exp(-np.asarray(lambda_xn, dtype=np.float64) * h)
    value = s_n_c * (decay * s_n_f * xi_n + s_n1_f * xi_n1) / np.sqrt(decay * decay + 1.0)
    if np.ndim(value) == 0:
        return float(value)
    return value


def adaptive_step_size(x: FloatLike, h: float, x_adapt: float, params: ModelParams) -> FloatLike:
    """適応刻み幅 min{h, λ(x_adapt)/λ(x)·h}。"""
    profile = TurbulenceProfile(params)
    ratio = profile.lambda_(x_adapt) / profile.lambda_(x)
    value = np.minimum(h, ratio * h)
    if np.ndim(x) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class Timeline(ValueObject):
    """細かい経路と粗い経路の時間点の和集合。

    origins[j] は tau[j] がどちらの経路の時間点か（fine / coarse / both）を表します。
    """

    tau: tuple[float, ...]
    origins: tuple[str, ...]

    def __post_init__(self) -> None:
        """バリデーション。"""
        if len(self.tau) != len(self.origins) or len(self.tau) < 1:
            raise TimelineError("時間点と由来タグの長さが一致しません")
        if self.tau[0] != 0.0:
            raise TimelineError("最初の時間点は0である必要があります")
        if any(right <= left for left, right in zip(self.tau[:-1], self.tau[1:], strict=True)):
            raise TimelineError("時間点は狭義単調増加である必要があります")

    @property
    def intervals(self) -> int:
        """部分区間の数。"""
        return len(self.tau) - 1

    def widths(self) -> FloatArray:
        """部分区間の幅 Δτ_j。"""
        return np.diff(np.asarray(self.tau, dtype=np.float64))

    def span(self, start: float, end: float) -> range:
        """[start, end] に含まれる部分区間の番号。

        Raises:
            TimelineError: 端点が時間点でない場合
        """
        tau = np.asarray(self.tau, dtype=np.float64)
        i = int(np.searchsorted(tau, start))
        k = int(np.searchsorted(tau, end))
        if i >= len(tau) or k >= len(tau) or tau[i] != start or tau[k] != end or k <= i:
            raise TimelineError(f"区間 [{start}, {end}] の端点が時間点ではありません")
        return range(i, k)


def _check_times(times: Sequence[float], label: str) -> None:
    if len(times) < 2 or times[0] != 0.0:
        raise TimelineError(f"{label}の時間点は0から始まる必要があります")
    if any(right <= left for left, right in zip(times[:-1], times[1:], strict=True)):
        raise TimelineError(f"{label}の時間点がソートされていません")


def merged_timeline(fine_times: Sequence[float], coarse_times: Sequence[float]) -> Timeline:
    """細かい経路と粗い経路の時間点を結合。

    Raises:
        TimelineError: 時間点が未ソート、または終端が一致しない場合
    """
    _check_times(fine_times, "細かい経路")
    _check_times(coarse_times, "粗い経路")
    if fine_times[-1] != coarse_times[-1]:
        raise TimelineError(f"終端時刻が一致しません: {fine_times[-1]} != {coarse_times[-1]}")

    fine_set = set(fine_times)
    coarse_set = set(coarse_times)
    tau = tuple(sorted(fine_set | coarse_set))
    origins = tuple(
        BOTH if t in fine_set and t in coarse_set else (FINE if t in fine_set else COARSE)
        for t in tau
    )
    return Timeline(tau=tau, origins=origins)


def adaptive_increment_se(
    interval: tuple[float, float],
    timeline: Timeline,
    xis: Sequence[float],
    fine_signs: Sequence[int],
    coarse_sign: int,
    is_coarse: bool,
) -> float:
    """適応刻みSEのブラウン運動増分。

    粗い経路では S_c·Σ_j S_j ξ_j √Δτ_j、細かい経路では Σ_j ξ_j √Δτ_j を返します。
    xis と fine_signs はタイムラインの部分区間ごとの値です。
    """
    widths = timeline.widths()
    total = 0.0
    for j in timeline.span(*interval):
        sign = fine_signs[j] if is_coarse else 1
        total += sign * xis[j] * math.sqrt(widths[j])
    return coarse_sign * total if is_coarse else total


def adaptive_increment_gl(
    interval: tuple[float, float],
    timeline: Timeline,
    xis: Sequence[float],
    positions: Sequence[float],
    fine_signs: Sequence[int],
    coarse_sign: int,
    is_coarse: bool,
    params: ModelParams,
) -> float:
    """適応刻みGLのOU重み付き増分。

    各 ξ_j を √((1 − e^{−2λΔτ_j})/(2λ)) で重み付けし、後続の部分区間の
    exp(−Σ_{k>j} λ(X(τ_k))Δτ_k) で減衰させた和です。positions はその経路自身の
    部分区間ごとの位置です。
    """
    profile = TurbulenceProfile(params)
    widths = timeline.widths()
    total = 0.0
    for j in timeline.span(*interval):
        lam = float(profile.lambda_(positions[j]))
        # 逐次形 I ← I·e^{−λΔτ} + w·ξ は閉形式の和と一致する
        total *= math.exp(-lam * widths[j])
        sign = fine_signs[j] if is_coarse else 1
        total += sign * xis[j] * float(ou_scale(lam, float(widths[j])))
    return coarse_sign * total if is_coarse else total


@dataclass(frozen=True)
class CoupledPath(ValueObject):
    """結合された細かい経路と粗い経路の状態。"""

    fine: ParticleState
    coarse: ParticleState
    fine_parities: tuple[int, ...] = ()
    coarse_parity: int = 1


@dataclass(frozen=True)
class DifferenceSample:
    """1サンプル分の差分 Y とコスト。failed の場合 value は None です。"""

    value: float | FloatArray | None
    cost_steps: int
    failed: bool = False
    path: CoupledPath | None = None


def _qoi_difference(
    spec: QoISpec, fine: ParticleState, coarse: ParticleState | None
) -> float | FloatArray:
    fine_value = evaluate(spec, fine)
    if coarse is None:
        return fine_value
    return fine_value - evaluate(spec, coarse)


def level_difference_sample(
    level: int,
    stream: NoiseStream,
    spec: QoISpec,
    integrator: IntegratorKind,
    params: ModelParams,
    coarse_steps: int,
    final_time: float = 1.0,
    x0: float = 0.05,
    u0: float = 0.1,
    *,
    coupling_signs: bool = True,
) -> DifferenceSample:
    """一様刻みの差分サンプル Y_ℓ（ℓ = 0 では P_0）。

    細かい経路は M_ℓ = M_0·2^ℓ ステップ、粗い経路は M_ℓ/2 ステップで、
    粗いノイズは連続する細かいノイズの組から構成します（BAOAB は GL の規則を使用）。
    """
    if level < 0:
        raise InvariantViolationError("level >= 0", level)
    step = STEP_FUNCTIONS[integrator]
    profile = TurbulenceProfile(params)
    fine_steps = coarse_steps * 2**level
    h_f = final_time / fine_steps
    fine = ParticleState.release(x0, u0, profile.height)
    coarse = ParticleState.release(x0, u0, profile.height)
    parities: list[int] = []

    try:
        if level == 0:
            for _ in range(fine_steps):
                fine = step(fine, h_f, draw_normal(stream), params).new_state
            return DifferenceSample(_qoi_difference(spec, fine, None), fine_steps)

        h_c = 2.0 * h_f
        for _ in range(fine_steps // 2):
            x_start = fine.x
            xi_a = draw_normal(stream)
            record_a = step(fine, h_f, xi_a, params)
            xi_b = draw_normal(stream)
            record_b = step(record_a.new_state, h_f, xi_b, params)
            fine = record_b.new_state

            if coupling_signs:
                parities.extend((record_a.noise_parity, record_b.noise_parity))
                z_a = record_a.noise_parity * xi_a
                z_b = record_b.noise_parity * xi_b
            else:
                z_a, z_b = xi_a, xi_b

            if integrator == IntegratorKind.SE:
                z_c = coarse_noise_se(z_a, z_b)
            else:
                z_c = coarse_noise_gl(z_a, z_b, float(profile.lambda_(x_start)), h_f)
            coarse = step(coarse, h_c, float(z_c), params, extended=coupling_signs).new_state
    except IntegratorInstabilityError:
        return DifferenceSample(None, fine_steps + (fine_steps // 2 if level else 0), failed=True)

    path = CoupledPath(
        fine=fine, coarse=coarse, fine_parities=tuple(parities), coarse_parity=coarse.parity
    )
    return DifferenceSample(
        _qoi_difference(spec, fine, coarse), fine_steps + fine_steps // 2, path=path
    )


def _step_with_increment(
    integrator: IntegratorKind,
    profile: TurbulenceProfile,
    state: ParticleState,
    h: float,
    increment: float,
) -> ParticleState:
    particles = ParticleArrays(
        x=np.array([state.x]),
        u=np.array([state.u]),
        parity=np.array([float(state.parity)]),
        n_refl=np.array([state.n_refl], dtype=np.int64),
        failed=np.zeros(1, dtype=bool),
    )
    result = advance_with_increment(integrator, profile, particles, h, np.array([increment]))
    if result.failed[0]:
        raise IntegratorInstabilityError(float("nan"), float("nan"), profile.height)
    return result.state(0, t=state.t + h, height=profile.height)


@dataclass
class _AdaptivePath:
    """適応刻みの経路1本分の状態（参照実装用）。"""

    state: ParticleState
    base_step: float
    start: float = 0.0
    end: float = 0.0
    steps: int = 0

    def schedule(self, x_adapt: float, params: ModelParams, final_time: float) -> None:
        h = adaptive_step_size(self.state.x, self.base_step, x_adapt, params)
        self.end = min(self.start + float(h), final_time)


def adaptive_difference_sample(
    level: int,
    stream: NoiseStream,
    spec: QoISpec,
    integrator: IntegratorKind,
    params: ModelParams,
    coarse_steps: int,
    final_time: float = 1.0,
    x0: float = 0.05,
    u0: float = 0.1,
    x_adapt: float = 0.05,
    *,
    coupling_signs: bool = True,
) -> tuple[DifferenceSample, Timeline]:
    """適応刻みの差分サンプル（SE/GLのみ）。

    細かい経路の基準刻みは h_ℓ、粗い経路は 2h_ℓ で、それぞれ自分の位置から刻み幅を決めます。
    結合した時間点の各部分区間で乱数を1つ消費し、経路のステップ完了時に
    adaptive_increment_se / adaptive_increment_gl で増分を計算します。

    Returns:
        (差分サンプル, 結合タイムライン)
    """
    if integrator == IntegratorKind.BAOAB:
        raise InvariantViolationError("adaptive requires integrator in {se, gl}", integrator.value)
    profile = TurbulenceProfile(params)
    h_f = final_time / (coarse_steps * 2**level)
    release = ParticleState.release(x0, u0, profile.height)
    fine = _AdaptivePath(release, h_f)
    coarse = _AdaptivePath(release, 2.0 * h_f) if level > 0 else None

    tau = [0.0]
    origins = [BOTH]
    xis: list[float] = []
    fine_signs: list[int] = []
    fine_positions: list[float] = []
    coarse_positions: list[float] = []
    fine_times = [0.0]
    coarse_times = [0.0]

    def increment(path: _AdaptivePath, positions: list[float], is_coarse: bool) -> float:
        timeline = Timeline(tau=tuple(tau), origins=tuple(origins))
        interval = (path.start, path.end)
        sign = path.state.parity if coupling_signs else 1
        signs = fine_signs if coupling_signs else [1] * len(fine_signs)
        if integrator == IntegratorKind.SE:
            return adaptive_increment_se(interval, timeline, xis, signs, sign, is_coarse)
        return adaptive_increment_gl(
            interval, timeline, xis, positions, signs, sign, is_coarse, params
        )

    def complete(path: _AdaptivePath, positions: list[float], is_coarse: bool) -> None:
        dw = increment(path, positions, is_coarse)
        path.state = _step_with_increment(
            integrator, profile, path.state, path.end - path.start, dw
        )
        path.steps += 1
        path.start = path.end
        path.schedule(x_adapt, params, final_time)

    try:
        fine.schedule(x_adapt, params, final_time)
        if coarse is not None:
            coarse.schedule(x_adapt, params, final_time)
        t = 0.0
        while t < final_time:
            t_next = fine.end if coarse is None else min(fine.end, coarse.end)
            xis.append(draw_normal(stream))
            fine_signs.append(fine.state.parity)
            fine_positions.append(fine.state.x)
            coarse_positions.append(coarse.state.x if coarse is not None else 0.0)
            t = t_next
            fine_done = t == fine.end
            coarse_done = coarse is not None and t == coarse.end
            tau.append(t)
            origins.append(
                BOTH if fine_done and coarse_done else (FINE if fine_done else COARSE)
            )
            if fine_done:
                complete(fine, fine_positions, is_coarse=False)
                fine_times.append(t)
            if coarse is not None and coarse_done:
                complete(coarse, coarse_positions, is_coarse=True)
                coarse_times.append(t)
    except IntegratorInstabilityError:
        cost = fine.steps + (coarse.steps if coarse is not None else 0)
        return DifferenceSample(None, cost, failed=True), Timeline(tuple(tau), tuple(origins))

    timeline = Timeline(tau=tuple(tau), origins=tuple(origins))
    if coarse is None:
        return DifferenceSample(_qoi_difference(spec, fine.state, None), fine.steps), timeline

    path = CoupledPath(
        fine=fine.state,
        coarse=coarse.state,
        fine_parities=tuple(fine_signs),
        coarse_parity=coarse.state.parity,
    )
    value = _qoi_difference(spec, fine.state, coarse.state)
    sample = DifferenceSample(value, fine.steps + coarse.steps, path=path)
    return sample, merged_timeline(fine_times, coarse_times)
