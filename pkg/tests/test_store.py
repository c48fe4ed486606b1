from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from qfl.errors import (
    MissingRationale,
    OutOfOrderTimestamp,
    UnknownElement,
    ValidationError,
)
from qfl.model import AssessmentPoint, Layer, Provenance
from qfl.store import DecisionEvent, EventKind, Store

T0 = datetime(2019, 6, 1, tzinfo=timezone.utc)


def day(n: int) -> datetime:
    return T0 + timedelta(days=n)


def point(element_id: str, n: int, value: float,
          provenance: Provenance = Provenance.OBSERVED) -> AssessmentPoint:
    return AssessmentPoint(
        element_id=element_id,
        layer=Layer.METRIC,
        timestamp=day(n),
        value=value,
        provenance=provenance,
    )


@pytest.fixture
def store(tmp_path) -> Store:
    s = Store(tmp_path / "store")
    yield s
    s.close()


def test_append_then_query_roundtrip(store):
    points = [point("m", 1, 0.1), point("m", 2, 0.2), point("m", 3, 0.3)]
    store.append_assessment(points)
    series = store.query_range("m", day(0), day(9))
    assert [p.value for p in series.points] == [0.1, 0.2, 0.3]
    assert [p.timestamp for p in series.points] == [day(1), day(2), day(3)]


def test_append_empty_is_noop(store):
    store.append_assessment([])
    assert store.latest_assessment() == {}


def test_out_of_order_append_rejected(store):
    store.append_assessment([point("m", 5, 0.5)])
    with pytest.raises(OutOfOrderTimestamp):
        store.append_assessment([point("m", 4, 0.4)])


def test_same_timestamp_append_replaces_tail(store):
    store.append_assessment([point("m", 5, 0.5)])
    store.append_assessment([point("m", 5, 0.7)])
    series = store.query_range("m", day(0), day(9))
    assert [p.value for p in series.points] == [0.7]


def test_range_boundaries_inclusive(store):
    store.append_assessment([point("m", 1, 0.1), point("m", 2, 0.2), point("m", 3, 0.3)])
    exact = store.query_range("m", day(2), day(2))
    assert [p.value for p in exact.points] == [0.2]
    nothing = store.query_range("m", day(7), day(8))
    assert nothing.points == ()


def test_reversed_range_rejected(store):
    store.append_assessment([point("m", 1, 0.1)])
    with pytest.raises(ValidationError):
        store.query_range("m", day(3), day(1))


def test_unknown_element_rejected(store):
    with pytest.raises(UnknownElement):
        store.query_range("never-seen", day(0), day(1))


def test_values_roundtrip_bit_for_bit(store):
    ugly = 0.1 + 0.2 + 1e-17
    store.append_assessment([point("m", 1, ugly)])
    got = store.query_range("m", day(1), day(1)).points[0].value
    assert got == ugly


def test_step_fixture_with_decision_event(store):
    """Passed-tests series stepping 0.75 -> 0.95 across a qr_added event."""
    for n in range(1, 6):
        store.append_assessment([point("passed_tests_percentage", n, 0.75)])
    event_day = day(5)
    store.record_event(
        DecisionEvent(
            event_id="qr-0001:evt:1",
            kind=EventKind.QR_ADDED,
            subject_id="qr-0001",
            timestamp=event_day,
        )
    )
    for n in range(6, 11):
        store.append_assessment([point("passed_tests_percentage", n, 0.95)])

    series = store.query_range("passed_tests_percentage", day(1), day(10))
    events = store.list_events(subject_id="qr-0001")
    assert len(events) == 1
    before = [p.value for p in series.points if p.timestamp <= events[0].timestamp]
    after = [p.value for p in series.points if p.timestamp > events[0].timestamp]
    assert before and after
    assert set(before) == {0.75}
    assert set(after) == {0.95}
    assert after[0] - before[-1] == pytest.approx(0.20)


def test_rejection_event_requires_rationale():
    with pytest.raises(MissingRationale):
        DecisionEvent(
            event_id="e1",
            kind=EventKind.QR_REJECTED_PM,
            subject_id="qr-1",
            timestamp=day(1),
        )


def test_events_roundtrip_and_subject_filter(store):
    added = DecisionEvent("e1", EventKind.QR_ADDED, "qr-1", day(1))
    rejected = DecisionEvent("e2", EventKind.QR_REJECTED_QE, "qr-2", day(2), "not relevant")
    store.record_event(added)
    store.record_event(rejected)
    assert store.list_events(subject_id="qr-1") == [added]
    assert store.list_events(subject_id="qr-2") == [rejected]
    assert store.list_events(from_=day(2)) == [rejected]
    assert [e.event_id for e in store.list_events()] == ["e1", "e2"]


def test_durability_across_reopen(tmp_path):
    store = Store(tmp_path / "store")
    store.append_assessment([point("m", 1, 0.25), point("m", 2, 0.5)])
    store.record_event(DecisionEvent("e1", EventKind.QR_ADDED, "qr-1", day(1)))
    store.put_doc("alert", "a1", {"alert_id": "a1", "state": "open"})
    store.close()

    reopened = Store(tmp_path / "store")
    series = reopened.query_range("m", day(0), day(9))
    assert [p.value for p in series.points] == [0.25, 0.5]
    assert reopened.list_events()[0].event_id == "e1"
    assert reopened.get_doc("alert", "a1") == {"alert_id": "a1", "state": "open"}
    reopened.close()


def test_segment_rollover_and_replay(tmp_path):
    store = Store(tmp_path / "store", segment_max_bytes=512)
    for n in range(1, 40):
        store.append_assessment([point("m", n, (n % 10) / 10)])
    assert len(list((tmp_path / "store").glob("segment-*.qfl"))) > 1
    store.close()
    reopened = Store(tmp_path / "store", segment_max_bytes=512)
    assert len(reopened.query_range("m", day(0), day(50)).points) == 39
    reopened.close()


def test_docs_last_write_wins(store):
    store.put_doc("qr", "qr-1", {"state": "Suggested"})
    store.put_doc("qr", "qr-1", {"state": "Exported"})
    assert store.get_doc("qr", "qr-1") == {"state": "Exported"}
    assert list(store.docs("qr")) == ["qr-1"]


def test_export_csv_shape(store):
    store.append_assessment([point("m", 1, 0.125), point("z", 1, 1.0)])
    text = store.export_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "element_id,timestamp,value,provenance"
    assert lines[1] == "m,2019-06-02T00:00:00Z,0.125,observed"
    assert lines[2] == "z,2019-06-02T00:00:00Z,1.0,observed"
