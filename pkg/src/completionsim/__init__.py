"""Discrete-event simulator for the gap between an interconnect reporting
completion and the receiver agreeing on what it received."""
from .engine import RemoteMemory, Simulator, Stage, StageTimeline, gaps
from .errors import SimError
from .faults import FaultPlan, decide_loss, enumerate_interleavings
from .verbs import Nic, NicConfig, Status, Transport, Verb
from .sdr import ChunkBitmap, report, selective_retransmit
from .farm import VersionedObject, farm_read, farm_write
from .oae import Link, LinkState, OaeEndpoint, RejectReason, commit_guard
from .profiles import builtin_profiles, simulate_gap_matrix
from .ecmp import EcmpConfig, ecmp_load
from .config import ScenarioConfig, default_config, load_config, parse_config
from .scenarios import GapReport, compare_modes, emit_table1, run_scenario

__version__ = "0.1.0"
