import dataclasses

import numpy as np
import pytest
from scipy import stats

from hierlab import replay
from hierlab.rngs import substream


def make_traj(rewards, dones=None, rng=None):
    rng = rng or substream(0, "traj")
    dones = dones or [False] * len(rewards)
    out = []
    for i, (r, d) in enumerate(zip(rewards, dones)):
        out.append(replay.Transition(s=rng.normal(size=3), a=rng.normal(size=2),
                                     r=float(r), s_next=rng.normal(size=3), done=bool(d)))
    return out


def test_append_and_fifo_eviction():
    buf = replay.ReplayBuffer(capacity=2)
    buf.append("a")
    assert len(buf) == 1
    buf.append("b")
    buf.append("c")
    assert len(buf) == 2
    assert [buf[0], buf[1]] == ["b", "c"]


def test_sampled_records_were_appended():
    buf = replay.ReplayBuffer(capacity=500)
    items = [f"rec{i}" for i in range(1000)]
    for it in items:
        buf.append(it)
    rng = substream(1, "sample")
    got = buf.sample(200, rng)
    tail = set(items[-500:])
    assert all(g in tail for g in got)


def test_empty_buffer_sampling_rejected():
    with pytest.raises(ValueError):
        replay.ReplayBuffer(10).sample(1, substream(2, "s"))


def test_aggregate_degenerate_horizon():
    traj = make_traj([5.0, 7.0])
    rec = replay.aggregate_cstep(traj, 0, 1)
    assert rec.r_sum == 5.0
    assert np.array_equal(rec.s_t, traj[0].s)
    assert np.array_equal(rec.s_t_plus_c, traj[0].s_next)
    assert rec.horizon == 1 and not rec.done


def test_aggregate_simple_sum():
    traj = make_traj([1.0, 2.0, 3.0])
    rec = replay.aggregate_cstep(traj, 0, 3)
    assert rec.r_sum == 6.0
    assert rec.horizon == 3


def test_aggregate_matches_bruteforce_on_random_trajectories():
    rng = substream(3, "agg")
    for _ in range(300):
        n = int(rng.integers(1, 30))
        rewards = rng.normal(size=n)
        dones = rng.random(n) < 0.1
        traj = make_traj(rewards, list(dones), rng)
        t = int(rng.integers(0, n))
        c = int(rng.integers(1, 12))
        rec = replay.aggregate_cstep(traj, t, c)
        total, done_flag, end = 0.0, False, t
        for k in range(t, min(t + c, n)):
            total += rewards[k]
            end = k
            if dones[k]:
                done_flag = True
                break
        assert abs(rec.r_sum - total) < 1e-12
        assert rec.done == done_flag
        assert rec.horizon == end - t + 1
        assert np.array_equal(rec.s_t_plus_c, traj[end].s_next)


def test_aggregate_linearity():
    rng = substream(4, "agg")
    rewards = list(rng.normal(size=10))
    traj = make_traj(rewards, rng=rng)
    scaled = make_traj([3.0 * r for r in rewards], rng=rng)
    a = replay.aggregate_cstep(traj, 2, 5)
    b = replay.aggregate_cstep(scaled, 2, 5)
    assert b.r_sum == pytest.approx(3.0 * a.r_sum, rel=1e-12)


def test_aggregate_bad_inputs():
    traj = make_traj([1.0])
    with pytest.raises(ValueError):
        replay.aggregate_cstep(traj, 1, 1)
    with pytest.raises(ValueError):
        replay.aggregate_cstep(traj, 0, 0)


def test_nstep_reduces_to_single_step():
    traj = make_traj([2.5, 1.0])
    rec = replay.nstep_target_inputs(traj, 0, 1)
    assert rec.r_sum == 2.5
    assert np.array_equal(rec.s, traj[0].s)
    assert np.array_equal(rec.a, traj[0].a)
    assert np.array_equal(rec.s_next, traj[0].s_next)
    assert rec.horizon == 1


def test_nstep_truncates_at_terminal():
    traj = make_traj([4.0, 9.0, 9.0], dones=[True, False, False])
    rec = replay.nstep_target_inputs(traj, 0, 3)
    assert rec.r_sum == 4.0
    assert rec.done and rec.horizon == 1


def test_nstep_matches_bruteforce():
    rng = substream(5, "nstep")
    for _ in range(300):
        n = int(rng.integers(1, 20))
        rewards = rng.normal(size=n)
        dones = rng.random(n) < 0.15
        traj = make_traj(rewards, list(dones), rng)
        t = int(rng.integers(0, n))
        c = int(rng.integers(1, 6))
        rec = replay.nstep_target_inputs(traj, t, c)
        total = 0.0
        for k in range(t, min(t + c, n)):
            total += rewards[k]
            if dones[k]:
                break
        assert abs(rec.r_sum - total) < 1e-12


def goal_record(rng, g=None, g_next=None):
    anchor = rng.normal(size=2)
    nxt = rng.normal(size=2)
    g = rng.normal(size=2) if g is None else np.asarray(g, float)
    g_next = rng.normal(size=2) if g_next is None else np.asarray(g_next, float)
    return replay.GoalTransition(
        s=rng.normal(size=6), g=g, a=rng.normal(size=2),
        r_int=replay.intrinsic_reward_value(anchor, g, nxt),
        s_next=rng.normal(size=6), g_next=g_next, done=False,
        anchor_xy=anchor, next_xy=nxt)


def test_freeze_goal():
    rng = substream(6, "goal")
    rec = goal_record(rng, g=[1.0, 2.0], g_next=[3.0, 4.0])
    frozen = replay.freeze_goal(rec)
    assert np.array_equal(frozen.g_next, [1.0, 2.0])
    assert np.array_equal(frozen.g, rec.g)
    assert rec.g_next[0] == 3.0  # original untouched
    again = replay.freeze_goal(frozen)
    assert np.array_equal(again.g_next, frozen.g_next)
    already = goal_record(rng, g=[5.0, 5.0], g_next=[5.0, 5.0])
    out = replay.freeze_goal(already)
    assert np.array_equal(out.g_next, already.g_next)


def test_hindsight_relabel_reached_goal_scores_zero():
    rng = substream(7, "goal")
    rec = goal_record(rng)
    achieved = rec.next_xy - rec.anchor_xy
    out = replay.hindsight_relabel(rec, achieved)
    assert out.r_int == pytest.approx(0.0, abs=1e-12)
    assert np.array_equal(out.g, achieved)
    assert np.array_equal(out.g_next, achieved)


def test_hindsight_relabel_same_goal_keeps_reward():
    rng = substream(8, "goal")
    rec = goal_record(rng)
    out = replay.hindsight_relabel(rec, rec.g)
    assert out.r_int == pytest.approx(rec.r_int, abs=1e-12)


def test_hindsight_relabel_matches_direct_recomputation():
    rng = substream(9, "goal")
    for _ in range(200):
        rec = goal_record(rng)
        new_goal = rng.normal(size=2)
        out = replay.hindsight_relabel(rec, new_goal)
        want = -np.linalg.norm((rec.anchor_xy + new_goal) - rec.next_xy)
        assert out.r_int == pytest.approx(want, abs=1e-12)


def test_mixed_sampling_exact_composition():
    a, b = replay.ReplayBuffer(100), replay.ReplayBuffer(100)
    for i in range(50):
        a.append(("a", i))
        b.append(("b", i))
    rng = substream(10, "mix")
    for _ in range(200):
        batch = replay.sample_mixed(a, b, 10, 0.7, rng)
        tags = [t for t, _ in batch]
        assert tags.count("a") == 7 and tags.count("b") == 3


def test_mixed_sampling_all_from_a():
    a, b = replay.ReplayBuffer(10), replay.ReplayBuffer(10)
    a.append("a")
    b.append("b")
    batch = replay.sample_mixed(a, b, 4, 1.0, substream(11, "mix"))
    assert batch == ["a"] * 4


def test_mixed_sampling_rejects_bad_inputs():
    a, b = replay.ReplayBuffer(10), replay.ReplayBuffer(10)
    a.append("a")
    with pytest.raises(ValueError):
        replay.sample_mixed(a, b, 10, 0.7, substream(12, "mix"))
    b.append("b")
    with pytest.raises(ValueError):
        replay.sample_mixed(a, b, 10, 0.75, substream(12, "mix"))
    with pytest.raises(ValueError):
        replay.sample_mixed(a, b, 10, 1.2, substream(12, "mix"))


def test_mixed_sampling_uniform_within_buffer():
    a, b = replay.ReplayBuffer(40), replay.ReplayBuffer(40)
    for i in range(40):
        a.append(i)
        b.append(100 + i)
    rng = substream(13, "mix")
    counts = np.zeros(40)
    for _ in range(2000):
        for rec in replay.sample_mixed(a, b, 10, 0.7, rng):
            if rec < 100:
                counts[rec] += 1
    p = stats.chisquare(counts).pvalue
    assert p > 0.01


def test_window_sampler_respects_episodes():
    buf = replay.ReplayBuffer(1000)
    rng = substream(14, "win")
    for ep in range(5):
        for t in range(10):
            buf.append(replay.StampedTransition(
                s=np.array([ep, t, 0.0]), a=np.zeros(2), r=1.0,
                s_next=np.array([ep, t + 1, 0.0]), done=(t == 9), episode=ep, step=t))
    for start in range(50):
        rec = replay.window_at(buf, start, 3)
        ep, t = divmod(start, 10)
        want = min(3, 10 - t)
        assert rec.horizon == want
        assert rec.r_sum == float(want)
        assert rec.done == (t + want == 10)


def fill_stamped(buf, rng, episodes=6, max_len=12, tagged=False, with_goal=False):
    for ep in range(episodes):
        n = int(rng.integers(3, max_len))
        for t in range(n):
            buf.append(replay.StampedTransition(
                s=rng.normal(size=4), a=rng.uniform(-1, 1, 2), r=float(rng.normal()),
                s_next=rng.normal(size=4), done=(t == n - 1 and rng.random() < 0.5),
                episode=ep, step=t,
                goal=rng.normal(size=2) if with_goal else None,
                anchor=rng.normal(size=2) if with_goal else None,
                tag=int(rng.integers(3)) if tagged else None))


def test_array_buffer_matches_record_buffer():
    rng = substream(20, "arr")
    ring = replay.ReplayBuffer(1000)
    arr = replay.StampedArrayBuffer(1000)
    fill_stamped(ring, substream(21, "fill"), tagged=True)
    fill_stamped(arr, substream(21, "fill"), tagged=True)
    assert len(ring) == len(arr)
    for i in range(len(ring)):
        a, b = ring[i], arr[i]
        assert np.array_equal(a.s, b.s) and np.array_equal(a.a, b.a)
        assert a.done == b.done and a.episode == b.episode and a.tag == b.tag

    starts = rng.integers(0, len(arr), size=200)
    for n in (1, 3, 5):
        s, act, r_sum, s_next, done, horizon = arr.nstep_windows(starts, n)
        for row, start in enumerate(starts):
            want = replay.window_at(ring, int(start), n)
            assert np.array_equal(s[row], want.s)
            assert np.array_equal(act[row], want.a)
            assert abs(r_sum[row] - want.r_sum) < 1e-12
            assert np.array_equal(s_next[row], want.s_next)
            assert done[row] == float(want.done)
            assert horizon[row] == want.horizon


def test_array_buffer_same_tag_windows():
    ring = replay.ReplayBuffer(1000)
    arr = replay.StampedArrayBuffer(1000)
    fill_stamped(ring, substream(22, "fill"), tagged=True)
    fill_stamped(arr, substream(22, "fill"), tagged=True)
    starts = substream(23, "x").integers(0, len(arr), size=100)
    _, _, r_sum, _, _, horizon = arr.nstep_windows(starts, 4, same_tag=True)
    for row, start in enumerate(starts):
        want = replay.window_at(ring, int(start), 4, same_tag=True)
        assert horizon[row] == want.horizon
        assert abs(r_sum[row] - want.r_sum) < 1e-12


def test_array_buffer_fifo_eviction():
    arr = replay.StampedArrayBuffer(capacity=10)
    for ep in range(4):
        for t in range(5):
            arr.append(replay.StampedTransition(
                s=np.array([ep, t, 0, 0], float), a=np.zeros(2), r=float(ep * 10 + t),
                s_next=np.zeros(4), done=False, episode=ep, step=t))
    assert len(arr) == 10
    assert arr[0].r == 20.0  # only episodes 2 and 3 survive eviction
    assert arr[9].r == 34.0
    # windows never stitch across the eviction seam: episode ids differ
    s, a, r_sum, s_next, done, horizon = arr.nstep_windows(np.array([3, 4]), 3)
    assert horizon[0] == 2.0  # steps 3,4 of episode 2 then break
    assert r_sum[0] == 23.0 + 24.0


def test_dump_buffer_is_line_oriented(tmp_path):
    buf = replay.ReplayBuffer(10)
    rng = substream(15, "dump")
    for _ in range(3):
        buf.append(goal_record(rng))
    path = tmp_path / "buf.tsv"
    replay.dump_buffer(buf, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    names = [f.name for f in dataclasses.fields(replay.GoalTransition)]
    assert all(len(line.split("\t")) == len(names) for line in lines)
    assert lines[0].startswith("s=")
