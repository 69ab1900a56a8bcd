"""Simulated federated environment.

Serves stochastic rewards for (agent, arm) pulls and keeps exact ledgers of
pulls and of learner/agent message traffic.  Rewards are unit-variance
Gaussians around the instance means.  Each (agent, arm) pair owns an
independent substream derived from (seed, agent, arm), so the reward at a
given pull index is a deterministic function of (seed, agent, arm,
pull-index) regardless of how pulls on other pairs interleave.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instances import Instance

# Default payload prices: one unit per bit, 32 units per real number.
DEFAULT_COST_BIT = 1.0
DEFAULT_COST_REAL = 32.0

_CHUNK = 1 << 22  # cap per-call allocation at 32 MB of float64 draws

UP = "up"
DOWN = "down"


@dataclass
class Ledger:
    """Cumulative pulls per (agent, arm) plus directional message counters."""

    pulls: dict = field(default_factory=dict)
    total_pulls: int = 0
    up_reals: int = 0
    up_bits: int = 0
    down_reals: int = 0
    down_bits: int = 0

    def add_pulls(self, agent: int, arm: int, count: int) -> None:
        key = (agent, arm)
        self.pulls[key] = self.pulls.get(key, 0) + count
        self.total_pulls += count

    def comm_cost(self, cost_real: float, cost_bit: float) -> float:
        reals = self.up_reals + self.down_reals
        bits = self.up_bits + self.down_bits
        return cost_real * reals + cost_bit * bits

    def copy(self) -> "Ledger":
        return Ledger(
            pulls=dict(self.pulls),
            total_pulls=self.total_pulls,
            up_reals=self.up_reals,
            up_bits=self.up_bits,
            down_reals=self.down_reals,
            down_bits=self.down_bits,
        )

    def to_dict(self) -> dict:
        per_agent: dict[int, int] = {}
        for (agent, _arm), count in self.pulls.items():
            per_agent[agent] = per_agent.get(agent, 0) + count
        return {
            "total_pulls": self.total_pulls,
            "pulls_per_agent": {str(a): per_agent[a] for a in sorted(per_agent)},
            "messages": {
                "up_reals": self.up_reals,
                "up_bits": self.up_bits,
                "down_reals": self.down_reals,
                "down_bits": self.down_bits,
            },
        }


class GaussianRewards:
    """Default reward model: Gaussian(mean, 1) draws from the pair's stream."""

    def draw(self, gen: np.random.Generator, mean: float, count: int) -> np.ndarray:
        return gen.standard_normal(count) + mean

    def draw_sum(self, gen: np.random.Generator, mean: float, count: int) -> float:
        total = 0.0
        left = count
        while left > 0:
            step = min(left, _CHUNK)
            total += float(gen.standard_normal(step).sum())
            left -= step
        return total + mean * count


class Environment:
    """Reward oracle plus accounting for one instance and one seed.

    The reward sampler is swappable (any object with ``draw``/``draw_sum`` in
    the shape of :class:`GaussianRewards`) so bounded or discrete reward
    models can be plugged in without touching the ledger machinery.
    """

    def __init__(
        self,
        instance: Instance,
        seed: int,
        cost_real: float = DEFAULT_COST_REAL,
        cost_bit: float = DEFAULT_COST_BIT,
        sampler=None,
    ):
        if instance.num_agents == 0:
            raise ValueError("instance mapping is empty; assign agents first")
        if cost_real < 0 or cost_bit < 0:
            raise ValueError("communication costs must be nonnegative")
        self.instance = instance
        self.seed = int(seed)
        self.cost_real = float(cost_real)
        self.cost_bit = float(cost_bit)
        self.sampler = sampler if sampler is not None else GaussianRewards()
        self.ledger = Ledger()
        self._streams: dict[tuple[int, int], np.random.Generator] = {}
        self._learner_rng: np.random.Generator | None = None

    def _stream(self, agent: int, arm: int) -> np.random.Generator:
        key = (agent, arm)
        gen = self._streams.get(key)
        if gen is None:
            seq = np.random.SeedSequence(self.seed, spawn_key=(0, agent, arm))
            gen = np.random.Generator(np.random.PCG64(seq))
            self._streams[key] = gen
        return gen

    @property
    def learner_rng(self) -> np.random.Generator:
        """Stream for the learner's own randomness (e.g. agent sampling)."""
        if self._learner_rng is None:
            seq = np.random.SeedSequence(self.seed, spawn_key=(1,))
            self._learner_rng = np.random.Generator(np.random.PCG64(seq))
        return self._learner_rng

    def _mean(self, agent: int, arm: int) -> float:
        inst = self.instance
        if not 0 <= agent < inst.num_agents:
            raise IndexError(f"agent {agent} out of range [0, {inst.num_agents})")
        if not 0 <= arm < inst.num_arms:
            raise IndexError(f"arm {arm} out of range [0, {inst.num_arms})")
        return float(inst.means[inst.mapping[agent], arm])

    def pull(self, agent: int, arm: int) -> float:
        mean = self._mean(agent, arm)
        value = float(self.sampler.draw(self._stream(agent, arm), mean, 1)[0])
        self.ledger.add_pulls(agent, arm, 1)
        return value

    def pull_mean(self, agent: int, arm: int, count: int) -> float:
        """Empirical mean of ``count`` fresh pulls of one arm by one agent."""
        if count < 1:
            raise ValueError(f"need at least one pull, got {count}")
        mean = self._mean(agent, arm)
        total = self.sampler.draw_sum(self._stream(agent, arm), mean, count)
        self.ledger.add_pulls(agent, arm, count)
        return total / count

    def record_message(self, direction: str, reals: int = 0, bits: int = 0) -> None:
        if reals < 0 or bits < 0:
            raise ValueError("message payload counts must be nonnegative")
        if direction == UP:
            self.ledger.up_reals += reals
            self.ledger.up_bits += bits
        elif direction == DOWN:
            self.ledger.down_reals += reals
            self.ledger.down_bits += bits
        else:
            raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")

    def snapshot(self) -> Ledger:
        return self.ledger.copy()

    @property
    def total_comm_cost(self) -> float:
        return self.ledger.comm_cost(self.cost_real, self.cost_bit)
