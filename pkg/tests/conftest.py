import numpy as np
import pytest

from wavediag.signals import ConditionClass, SignalRecord


def make_record(samples, sample_rate_hz, record_id="test"):
    return SignalRecord(
        id=record_id,
        samples=np.asarray(samples, dtype=np.float64),
        sample_rate_hz=float(sample_rate_hz),
        condition=ConditionClass.NORMAL,
        load_pct=0,
        seed=0,
    )


@pytest.fixture
def record_factory():
    return make_record
