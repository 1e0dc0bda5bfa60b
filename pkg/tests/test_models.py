"""Tests for core data models."""

import math

import numpy as np
import pytest

from consensus_sim.core.models import (
    DelayAssignment, GlobalEvent, GlobalEventSequence, IntervalAudit, RunSummary, Segment,
    UnionConditionResult, UpdateSchedule,
)


class TestUpdateSchedule:
    """Update-time lookups."""

    def test_interval_index(self):
        schedule = UpdateSchedule(0, (0.0, 0.5, 1.2))
        assert schedule.interval_index(0.0) == 0
        assert schedule.interval_index(0.49) == 0
        assert schedule.interval_index(0.5) == 1
        assert schedule.interval_index(5.0) == 2

    def test_interval_index_absorbs_rounding(self):
        schedule = UpdateSchedule(0, (0.0, 0.3))
        assert schedule.interval_index(0.1 + 0.2) == 1

    def test_gaps(self):
        np.testing.assert_allclose(UpdateSchedule(1, (0.0, 0.5, 1.2)).gaps(), [0.5, 0.7])


class TestDelayAssignment:

    def test_missing_reception_is_instantaneous(self):
        assert DelayAssignment({}, 1.0).get(0, 3, 1) == 0.0

    def test_violations(self):
        assignment = DelayAssignment({(0, 0, 1): 0.5, (1, 0, 0): 1.5, (1, 1, 0): -0.1}, 1.0)
        assert assignment.violations() == [(1, 0, 0), (1, 1, 0)]
        assert assignment.receptions() == [(0, 0, 1), (1, 0, 0), (1, 1, 0)]


class TestGlobalEventSequence:
    """Event lookups by time."""

    @pytest.fixture
    def events(self):
        return GlobalEventSequence([
            GlobalEvent(0.0, ((0, 0), (1, 0))),
            GlobalEvent(0.4, ((0, 1),)),
            GlobalEvent(0.9, ((1, 1),)),
        ])

    def test_index_of(self, events):
        assert events.index_of(0.4) == 1
        assert events.index_of(0.4 + 1e-13) == 1

    def test_index_of_missing(self, events):
        with pytest.raises(KeyError):
            events.index_of(0.5)

    def test_count_in_is_half_open(self, events):
        assert events.count_in(0.0, 0.9) == 2
        assert events.count_in(0.4, math.inf) == 2
        assert events.count_in(0.5, 0.9) == 0

    def test_sequence_protocol(self, events):
        assert len(events) == 3
        assert events[2].updating_agents == (1,)
        assert [e.time for e in events] == [0.0, 0.4, 0.9]
        np.testing.assert_array_equal(events.times, [0.0, 0.4, 0.9])


class TestSegment:
    """Closed-form segment values."""

    def test_constant_segment(self):
        assert Segment(1.0, 2.0, 3.0, 3.0).value_at(1.7) == 3.0

    def test_half_life(self):
        assert Segment(0.0, 1.0, 1.0, -1.0).value_at(math.log(2.0)) == pytest.approx(0.0, abs=1e-15)

    def test_start_value_is_exact(self):
        assert Segment(2.5, 3.0, 0.123, 7.0).value_at(2.5) == 0.123


class TestRunSummary:

    def test_items_render_none(self):
        summary = RunSummary(seed=1, horizon=10.0, events=5, final_spread=0.5, final_value=6.0,
                             consensus_time=None)
        items = dict(summary.as_items())
        assert items["consensus_time"] == "none"
        assert items["predicted_value"] == "none"
        assert "union_condition" not in items

    def test_items_include_union_condition(self):
        summary = RunSummary(seed=1, horizon=10.0, events=5, final_spread=0.5, final_value=6.0,
                             consensus_time=2.5, union_condition=UnionConditionResult(False, 3, (0.0, 1.0)))
        items = dict(summary.as_items())
        assert items["union_condition"] == "fails"
        assert items["union_windows_checked"] == "3"
        assert items["consensus_time"] == "2.5"

    def test_items_include_certificate(self):
        summary = RunSummary(seed=1, horizon=10.0, events=5, final_spread=0.5, final_value=6.0,
                             consensus_time=None, certificate_bound=0.25, certified=True)
        items = dict(summary.as_items())
        assert items["certificate_bound"] == "0.25"
        assert items["certified"] == "true"
        assert "certificate_bound" not in dict(RunSummary(1, 10.0, 5, 0.5, 6.0, None).as_items())


class TestHelpers:

    def test_interval_audit_ok(self):
        assert IntervalAudit(3, 2).ok
        assert not IntervalAudit(3, 4, [(0, 0, 4)]).ok
