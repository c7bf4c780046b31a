import numpy as np
import pytest
from hypothesis import given, strategies as st

from completionsim import kernels
from completionsim.hashing import loss_threshold, stream_key, uniform53

pure = kernels.pure
compiled = pytest.importorskip("completionsim._kernels")

keys = st.integers(0, 2 ** 64 - 1)
rates = st.sampled_from([0.0, 1e-6, 1e-3, 0.1, 0.5, 1.0])


@given(keys, st.integers(0, 5000), st.integers(0, 3000), rates)
def test_lost_indices_agree(key, start, span, rate):
    t = loss_threshold(rate)
    a = np.asarray(compiled.lost_indices(key, start, start + span, t))
    b = np.asarray(pure.lost_indices(key, start, start + span, t))
    assert a.tolist() == b.tolist()
    # and both agree with the scalar definition
    assert b.tolist() == [i for i in range(start, start + span) if uniform53(key, i) < t]


@given(keys, st.integers(0, 200_000), rates)
def test_count_losses_agree(key, span, rate):
    t = loss_threshold(rate)
    assert compiled.count_losses(key, 0, span, t) == pure.count_losses(key, 0, span, t)


@given(st.integers(0, 2 ** 32), st.integers(1, 40), st.integers(1, 3000), st.sampled_from([1e-3, 1e-2]))
def test_intact_messages_agree(seed, messages, n_chunks, rate):
    t = loss_threshold(rate)
    a = compiled.intact_messages(seed, 1, messages, n_chunks, 0, t)
    b = pure.intact_messages(seed, 1, messages, n_chunks, 0, t)
    assert a == b
    oracle = sum(pure.count_losses(stream_key(seed, op, 0), 0, n_chunks, t) == 0
                 for op in range(1, messages + 1))
    assert a == oracle


@given(st.integers(0, 2 ** 32), st.integers(1, 300), st.integers(1, 64), st.integers(1, 32))
def test_ecmp_kernels_agree(seed, trials, units, paths):
    a = np.asarray(compiled.ecmp_max_units(seed, trials, units, paths, 7))
    b = np.asarray(pure.ecmp_max_units(seed, trials, units, paths, 7))
    assert a.tolist() == b.tolist()
    assert (b >= -(-units // paths)).all() and (b <= units).all()


def test_backend_selected():
    assert kernels.BACKEND in ("compiled", "python")


def test_env_switch_selects_numpy_fallback():
    import os
    import subprocess
    import sys
    env = dict(os.environ, COMPLETIONSIM_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from completionsim import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
