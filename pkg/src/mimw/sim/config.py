from __future__ import annotations

from dataclasses import dataclass

from ..ir.validate import SMEM_CAPACITY

SCHEDULERS = ("round_robin", "seeded_random")


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    scheduler: str = "round_robin"
    async_copy_latency: int = 2
    clc_latency: int = 3
    remote_arrive_delay: int = 1
    mma_latency: int = 2
    shared_capacity_bytes: int = SMEM_CAPACITY
    race_detector: bool = True
    strict: bool = False  # halt on the first race report
    launch_skew: int = 0  # each CTA starts at a seeded step in [0, launch_skew]
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        for name in ("async_copy_latency", "clc_latency", "remote_arrive_delay", "mma_latency", "launch_skew"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


def fuzzed_config(seed: int, **overrides) -> SimConfig:
    """Seeded-random schedule with latencies drawn from the seed."""
    import random

    rng = random.Random(seed)
    fields = dict(
        seed=seed,
        scheduler="seeded_random",
        async_copy_latency=rng.randint(0, 8),
        clc_latency=rng.randint(0, 8),
        remote_arrive_delay=rng.randint(0, 3),
        mma_latency=rng.randint(0, 4),
        launch_skew=rng.randint(0, 8),
    )
    fields.update(overrides)
    return SimConfig(**fields)
