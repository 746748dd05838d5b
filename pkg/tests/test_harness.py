import numpy as np
import pytest

from skelrecall.grid import one_hot
from skelrecall.harness import SynthSpec, optimize_logits, sweep_csv, synth_case, synth_dataset, weight_sweep
from skelrecall.losses import LossConfig


def test_synth_count_zero():
    assert synth_dataset(SynthSpec(count=0), 1) == []


def test_synth_is_deterministic():
    a = synth_dataset(SynthSpec(count=3, rho=0.1), 42)
    b = synth_dataset(SynthSpec(count=3, rho=0.1), 42)
    for x, y in zip(a, b):
        assert np.array_equal(x.gt.data, y.gt.data)
        assert np.array_equal(x.observation.data, y.observation.data)
    c = synth_dataset(SynthSpec(count=3, rho=0.1), 43)
    assert any(not np.array_equal(x.observation.data, z.observation.data) for x, z in zip(a, c))


def test_clean_observation_is_one_hot():
    for i in range(5):
        case = synth_case(SynthSpec(count=1, rho=0.0, gap=0), 5, i)
        assert np.array_equal(case.observation.data, one_hot(case.gt).data)


@pytest.mark.parametrize("rho", [-0.1, 0.5, 1.2])
def test_invalid_noise_rate(rho):
    with pytest.raises(ValueError):
        SynthSpec(count=1, rho=rho)


def test_gap_cases_break_the_structure():
    for i in range(5):
        case = synth_case(SynthSpec(count=1, rho=0.0, gap=3), 11, i)
        assert case.gaps >= 1
        assert (case.observation.data[0] > 0.5).sum() > (case.gt.data == 0).sum()


def test_multiclass_and_3d_cases():
    case = synth_case(SynthSpec(count=1, dims=(20, 20, 20), num_classes=3), 0, 0)
    assert case.gt.dims == (20, 20, 20) and case.gt.num_classes == 3
    assert case.observation.data.shape == (4, 20, 20, 20)


def test_fixed_point_run():
    case = synth_case(SynthSpec(count=1, rho=0.0, gap=0), 3, 0)
    run = optimize_logits(case, LossConfig(w=0.0), steps=10)
    assert abs(run.metrics.dice_mean - 1.0) < 1e-3


def test_trajectory_never_increases():
    case = synth_case(SynthSpec(count=1), 2, 0)
    run = optimize_logits(case, LossConfig(w=1.0), steps=40)
    assert len(run.trajectory) == 41
    assert all(b <= a for a, b in zip(run.trajectory, run.trajectory[1:]))
    rec = run.to_record()
    assert rec["final_loss"] == run.trajectory[-1]


def test_optimizer_validation():
    case = synth_case(SynthSpec(count=1), 2, 0)
    with pytest.raises(ValueError):
        optimize_logits(case, LossConfig(), steps=0)
    with pytest.raises(ValueError):
        optimize_logits(case, LossConfig(), lr=0.0)


def test_gap_closed_only_with_connectivity_term():
    case = synth_case(SynthSpec(count=1, rho=0.05, gap=3), 0, 1)
    base = optimize_logits(case, LossConfig(w=0.0))
    ours = optimize_logits(case, LossConfig(w=1.0))
    assert base.metrics.betti0_error >= 1
    assert ours.metrics.betti0_error == 0


def test_sweep_rows():
    cases = synth_dataset(SynthSpec(count=2), 0)
    rows = weight_sweep(cases, [0.1, 1.0, 1.0], steps=20)
    assert [r.w for r in rows] == [0.1, 1.0, 1.0]
    assert rows[1] == rows[2]
    zero = weight_sweep(cases, [0.0], steps=20)[0]
    base = weight_sweep(cases, [0.0], LossConfig(connectivity_kind="none"), steps=20)[0]
    assert zero == base
    text = sweep_csv(rows)
    assert text.splitlines()[0] == "w,dice,cldice,betti0_error,betti1_error"
    assert len(text.splitlines()) == 4
    with pytest.raises(ValueError):
        weight_sweep(cases, [])
