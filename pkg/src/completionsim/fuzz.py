"""Seeded random scenarios for property checks over whole simulations."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .engine import EventKind, RemoteMemory, Simulator
from .faults import DelaySpec, FaultPlan, Pause, SdcFlip
from .oae import OaeConfig, OaeEndpoint, invariant
from .verbs import Nic, NicConfig, Transport, Verb

MEMORY_BYTES = 1 << 13


@dataclass
class FuzzRun:
    seed: int
    sim: Simulator
    nic: Nic
    endpoint: OaeEndpoint | None

    def non_monotone(self) -> list[int]:
        return [op for op, tl in self.sim.timelines.items() if not tl.is_monotone()]


def random_run(seed: int, max_ops: int = 4) -> FuzzRun:
    """Build and run one random mix of transports, verbs and faults."""
    rng = random.Random(seed)
    vis_lo = rng.choice((0, 0, 1, 5, 10))
    plan = FaultPlan(
        seed=seed,
        chunk_loss_rate=rng.choice((0.0, 0.0, 0.05, 0.3)),
        visibility_delay=DelaySpec(vis_lo, vis_lo + rng.choice((0, 0, 7))),
        wire_jitter=DelaySpec(0, rng.choice((0, 0, 3, 9))),
        pauses=tuple(Pause(rng.randrange(2), rng.randrange(20), rng.randrange(1, 30))
                     for _ in range(rng.randrange(3))),
        sdc_flips=tuple(SdcFlip(rng.randrange(1, max_ops + 1), 0, rng.randrange(8))
                        for _ in range(rng.randrange(2))),
    )
    config = NicConfig(dma_ticks=rng.randrange(3), wire_ticks=rng.randrange(1, 4),
                       ack_ticks=rng.randrange(3), timeout_ticks=rng.randrange(2, 10),
                       max_passes=rng.choice((4, 64)),
                       visibility_mode=rng.choice(("per-op", "per-line")),
                       line_stride_ticks=rng.randrange(3),
                       coherent=rng.random() < 0.1)
    sim = Simulator()
    mem = RemoteMemory(MEMORY_BYTES)
    mem.register(0, MEMORY_BYTES)
    nic = Nic(sim, mem, plan, config)
    transport = rng.choice(list(Transport))
    qp = nic.create_qp(transport, rng.choice((64, 128, 256, 4096)), rng.randrange(2))
    endpoint = None
    if rng.random() < 0.25:
        endpoint = OaeEndpoint(nic, qp, OaeConfig(
            reflect_latency_ticks=rng.randrange(4),
            reflect_loss_exempt=rng.random() < 0.7,
            receiver_schema=rng.choice((1, 1, 1, 2)),
            reflect_timeout_ticks=rng.randrange(5, 40)))
        size = rng.randrange(8, 1024)
        data = rng.randbytes(size)
        sim.at(rng.randrange(5), EventKind.MARK, 0,
               lambda: f"initiate op {endpoint.oae_initiate(data, invariant('none'), 1).op_id}")
    for _ in range(rng.randrange(1, max_ops + 1)):
        _post_random(rng, nic, qp, sim)
    sim.run()
    return FuzzRun(seed, sim, nic, endpoint)


def _post_random(rng: random.Random, nic: Nic, qp, sim: Simulator) -> None:
    verb = rng.choice((Verb.WRITE, Verb.WRITE, Verb.WRITE, Verb.READ, Verb.SEND,
                       Verb.ATOMIC_CAS, Verb.ATOMIC_FAA))
    at = rng.randrange(30)
    off = rng.randrange(0, MEMORY_BYTES // 2, 8)
    if verb == Verb.WRITE:
        data = rng.randbytes(rng.randrange(1, 1500))
        selective = qp.transport_mode == Transport.UC and rng.random() < 0.5
        action = lambda: f"post op {nic.post_write(qp, data, off, selective=selective)}"
    elif verb == Verb.READ:
        n = rng.randrange(1, 700)
        action = lambda: f"post op {nic.post_read(qp, off, n)}"
    elif verb == Verb.SEND:
        data = rng.randbytes(rng.randrange(1, 400))

        def action():
            nic.post_recv(qp, off, len(data))
            return f"post op {nic.post_send(qp, data)}"
    elif verb == Verb.ATOMIC_CAS:
        ops = (rng.randrange(3), rng.randrange(1 << 64))
        action = lambda: f"post op {nic.post_atomic(qp, Verb.ATOMIC_CAS, off, ops)}"
    else:
        ops = (rng.randrange(1 << 20),)
        action = lambda: f"post op {nic.post_atomic(qp, Verb.ATOMIC_FAA, off, ops)}"
    sim.at(at, EventKind.MARK, 0, action)

