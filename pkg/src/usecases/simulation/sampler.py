"""
配列版サンプリングモジュール。

サンプル番号の連続した範囲について、粒子経路を配列でまとめて時間積分し、
レベルの統計量（LevelStats）を返します。一様刻みと適応刻み、
単一レベル（P_ℓ）と結合差分（Y_ℓ）の4通りを扱います。
"""

from dataclasses import dataclass

import numpy as np

from src.entities.model import ModelParams, TurbulenceProfile
from src.entities.qoi import QoIEvaluator, QoISpec
from src.entities.run_config import IntegratorKind, RunConfig
from src.entities.statistics import LevelStats
from src.usecases.simulation.coupling import adaptive_step_size, coarse_noise_gl, coarse_noise_se
from src.usecases.simulation.integrators import (
    ParticleArrays,
    advance,
    advance_with_increment,
    ou_scale,
)
from src.usecases.simulation.noise import NoiseBlockReader, StreamFamily
from src.utils.types import FloatArray, IntArray


@dataclass(frozen=True)
class SimulationProblem:
    """サンプリングに必要な設定一式（ワーカープロセスへ渡すためpickle可能）。"""

    params: ModelParams
    integrator: IntegratorKind
    qoi: QoISpec
    final_time: float
    coarse_steps: int
    x0: float
    u0: float
    seed: int
    adaptive: bool = False
    x_adapt: float = 0.05
    coupling_signs: bool = True

    @classmethod
    def from_config(cls, config: RunConfig) -> "SimulationProblem":
        """実行設定から生成。"""
        return cls(
            params=config.model,
            integrator=config.integrator,
            qoi=config.qoi,
            final_time=config.final_time,
            coarse_steps=config.coarse_steps,
            x0=config.x0,
            u0=config.u0,
            seed=config.seed,
            adaptive=config.adaptive,
            x_adapt=config.x_adapt,
            coupling_signs=config.coupling_signs,
        )

    def step_size(self, level: int) -> float:
        """レベルℓの刻み幅。"""
        return self.final_time / (self.coarse_steps * 2**level)


@dataclass(frozen=True)
class ChunkTask:
    """サンプル番号 [start, start + count) の計算タスク。

    steps を指定した場合は単一レベル（StMC）の M ステップ経路を計算します。
    """

    level: int
    start: int
    count: int
    steps: int | None = None

    @property
    def indices(self) -> IntArray:
        """サンプル番号。"""
        return np.arange(self.start, self.start + self.count, dtype=np.int64)


def _uniform_single(
    problem: SimulationProblem, steps: int, reader: NoiseBlockReader
) -> tuple[ParticleArrays, int]:
    profile = TurbulenceProfile(problem.params)
    h = problem.final_time / steps
    particles = ParticleArrays.release(reader.size, problem.x0, problem.u0)
    for _ in range(steps):
        particles, _ = advance(problem.integrator, profile, particles, h, reader.draw())
    return particles, steps * reader.size


def _uniform_coupled(
    problem: SimulationProblem, level: int, reader: NoiseBlockReader
) -> tuple[ParticleArrays, ParticleArrays, int]:
    profile = TurbulenceProfile(problem.params)
    method = problem.integrator
    signs = problem.coupling_signs
    fine_steps = problem.coarse_steps * 2**level
    h_f = problem.final_time / fine_steps
    h_c = 2.0 * h_f
    fine = ParticleArrays.release(reader.size, problem.x0, problem.u0)
    coarse = ParticleArrays.release(reader.size, problem.x0, problem.u0)

    for _ in range(fine_steps // 2):
        x_start = fine.x
        xi_a = reader.draw()
        fine, parity_a = advance(method, profile, fine, h_f, xi_a)
        xi_b = reader.draw()
        fine, parity_b = advance(method, profile, fine, h_f, xi_b)
        z_a = parity_a * xi_a if signs else xi_a
        z_b = parity_b * xi_b if signs else xi_b
        if method == IntegratorKind.SE:
            z_c = coarse_noise_se(z_a, z_b)
        else:
            z_c = coarse_noise_gl(z_a, z_b, profile.lambda_(x_start), h_f)
        coarse, _ = advance(method, profile, coarse, h_c, np.asarray(z_c), extended=signs)

    return fine, coarse, (fine_steps + fine_steps // 2) * reader.size


def _adaptive_single(
    problem: SimulationProblem, base_step: float, reader: NoiseBlockReader
) -> tuple[ParticleArrays, int]:
    profile = TurbulenceProfile(problem.params)
    method = problem.integrator
    final_time = problem.final_time
    particles = ParticleArrays.release(reader.size, problem.x0, problem.u0)
    t = np.zeros(reader.size, dtype=np.float64)
    cost = 0

    while True:
        active = t < final_time
        if not active.any():
            break
        h = adaptive_step_size(particles.x, base_step, problem.x_adapt, problem.params)
        end = np.minimum(t + h, final_time)
        dt = np.where(active, end - t, 0.0)
        xi = reader.draw(active)
        if method == IntegratorKind.SE:
            increment = np.sqrt(dt) * xi
        else:
            increment = ou_scale(profile.lambda_(particles.x), dt) * xi
        stepped = advance_with_increment(method, profile, particles, dt, increment)
        particles = stepped.select(active, particles)
        t = np.where(active, end, t)
        cost += int(active.sum())

    return particles, cost


@dataclass
class _AdaptiveTrack:
    """適応刻みで進む経路群の状態。"""

    particles: ParticleArrays
    base_step: float
    start: FloatArray
    end: FloatArray
    lam: FloatArray
    increment: FloatArray
    steps: int = 0

    @classmethod
    def begin(
        cls, problem: SimulationProblem, profile: TurbulenceProfile, n: int, base_step: float
    ) -> "_AdaptiveTrack":
        particles = ParticleArrays.release(n, problem.x0, problem.u0)
        track = cls(
            particles=particles,
            base_step=base_step,
            start=np.zeros(n),
            end=np.zeros(n),
            lam=profile.lambda_(particles.x),
            increment=np.zeros(n),
        )
        track.end = track._next_end(problem)
        return track

    def _next_end(self, problem: SimulationProblem) -> FloatArray:
        h = adaptive_step_size(self.particles.x, self.base_step, problem.x_adapt, problem.params)
        return np.minimum(self.start + h, problem.final_time)

    def accumulate(
        self, method: IntegratorKind, xi: FloatArray, dt: FloatArray, weight: FloatArray | float
    ) -> None:
        """部分区間のノイズを保留中の増分に加算。"""
        if method == IntegratorKind.SE:
            self.increment = self.increment + weight * xi * np.sqrt(dt)
        else:
            self.increment = self.increment * np.exp(-self.lam * dt) + weight * xi * ou_scale(
                self.lam, dt
            )

    def complete(
        self,
        problem: SimulationProblem,
        profile: TurbulenceProfile,
        done: np.ndarray,
        sign: FloatArray | float,
    ) -> None:
        """done のサンプルについてステップを完了し、次のステップを予定。"""
        if not done.any():
            return
        stepped = advance_with_increment(
            problem.integrator,
            profile,
            self.particles,
            self.end - self.start,
            sign * self.increment,
        )
        self.particles = stepped.select(done, self.particles)
        self.increment = np.where(done, 0.0, self.increment)
        self.start = np.where(done, self.end, self.start)
        self.end = np.where(done, self._next_end(problem), self.end)
        self.lam = np.where(done, profile.lambda_(self.particles.x), self.lam)
        self.steps += int(done.sum())


def _adaptive_coupled(
    problem: SimulationProblem, level: int, reader: NoiseBlockReader
) -> tuple[ParticleArrays, ParticleArrays, int]:
    profile = TurbulenceProfile(problem.params)
    method = problem.integrator
    signs = problem.coupling_signs
    h_f = problem.step_size(level)
    fine = _AdaptiveTrack.begin(problem, profile, reader.size, h_f)
    coarse = _AdaptiveTrack.begin(problem, profile, reader.size, 2.0 * h_f)
    t = np.zeros(reader.size, dtype=np.float64)

    while True:
        active = t < problem.final_time
        if not active.any():
            break
        t_next = np.minimum(fine.end, coarse.end)
        dt = np.where(active, t_next - t, 0.0)
        xi = reader.draw(active)
        fine_sign = fine.particles.parity if signs else 1.0
        fine.accumulate(method, xi, dt, 1.0)
        coarse.accumulate(method, xi, dt, fine_sign)
        t = np.where(active, t_next, t)

        fine_done = active & (t == fine.end)
        coarse_done = active & (t == coarse.end)
        coarse_sign = coarse.particles.parity if signs else 1.0
        fine.complete(problem, profile, fine_done, 1.0)
        coarse.complete(problem, profile, coarse_done, coarse_sign)

    return fine.particles, coarse.particles, fine.steps + coarse.steps


def sample_chunk(problem: SimulationProblem, task: ChunkTask) -> LevelStats:
    """タスクのサンプルを計算して統計量を返す。

    失敗サンプルは統計量の和から除外し、n_failed に計上します。
    """
    evaluator = QoIEvaluator(problem.qoi)
    if task.steps is not None:
        family, key = StreamFamily.SINGLE_LEVEL, task.steps
        h = problem.final_time / task.steps
    else:
        family, key = StreamFamily.MULTILEVEL, task.level
        h = problem.step_size(task.level)
    reader = NoiseBlockReader(problem.seed, key, task.indices, family)

    if task.steps is not None or task.level == 0:
        steps = task.steps if task.steps is not None else problem.coarse_steps
        if problem.adaptive:
            fine, cost = _adaptive_single(problem, h, reader)
        else:
            fine, cost = _uniform_single(problem, steps, reader)
        values = evaluator(fine.x)
        failed = fine.failed
    else:
        if problem.adaptive:
            fine, coarse, cost = _adaptive_coupled(problem, task.level, reader)
        else:
            fine, coarse, cost = _uniform_coupled(problem, task.level, reader)
        values = evaluator(fine.x) - evaluator(coarse.x)
        failed = fine.failed | coarse.failed

    stats = LevelStats.empty(task.level, h, evaluator.dimension)
    stats.add_samples(values[~failed], cost_steps=cost, n_failed=int(failed.sum()))
    return stats


def chunk_tasks(
    level: int, start: int, count: int, chunk_size: int, steps: int | None = None
) -> list[ChunkTask]:
    """サンプル範囲をワーカー数に依存しない固定サイズのタスクに分割。"""
    tasks = []
    for offset in range(start, start + count, chunk_size):
        size = min(chunk_size, start + count - offset)
        tasks.append(ChunkTask(level=level, start=offset, count=size, steps=steps))
    return tasks

