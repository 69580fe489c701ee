import json

import pytest

from matchfuse.hitl import HitlPolicy, ValidationRow
from matchfuse.model import DomainError
from matchfuse.retrieval import Candidate, MatchPrediction
from matchfuse.store import CorruptLogError, ValidationStore


def make_rows(n=3, prefix="r"):
    return [
        ValidationRow(
            row_id=f"{prefix}{i}",
            query={"offer_id": f"q{i}"},
            candidates=[{"offer_id": f"c{i}-{j}", "similarity": 0.8}
                        for j in range(3)],
        )
        for i in range(n)
    ]


def in_band_prediction(qid="q1", sim=0.85):
    return MatchPrediction(query_offer_id=qid,
                           candidates=[Candidate(f"{qid}-idx", 1.0 - sim)],
                           accepted=[True], threshold=0.4)


class TestPersistence:
    def test_state_survives_restart(self, tmp_path):
        store = ValidationStore(tmp_path)
        store.add_rows(make_rows(3))
        store.vote("r0", "alice", "c1")
        store.vote("r0", "bob", "c1")
        store.vote("r0", "carol", "no-match")
        store.vote("r1", "alice", "no-match")
        store.close()

        reborn = ValidationStore(tmp_path)
        assert set(reborn.rows) == {"r0", "r1", "r2"}
        assert reborn.rows["r0"].status == "complete"
        assert reborn.verdict("r0") == "c1"
        assert reborn.rows["r1"].votes == [("alice", "no-match")]
        assert reborn.pending_count() == 2
        reborn.close()

    def test_kill_midway_loses_nothing_already_flushed(self, tmp_path):
        store = ValidationStore(tmp_path)
        store.add_rows(make_rows(2))
        store.vote("r0", "alice", "c2")
        # simulate a crash: drop the handle without close()
        store._fh.close()

        reborn = ValidationStore(tmp_path)
        assert reborn.rows["r0"].votes == [("alice", "c2")]
        reborn.close()

    def test_replay_is_idempotent_under_duplicated_events(self, tmp_path):
        store = ValidationStore(tmp_path)
        store.add_rows(make_rows(1))
        store.vote("r0", "alice", "c1")
        store.close()

        # duplicate the whole log, as a retried writer might
        log = tmp_path / "events.jsonl"
        log.write_text(log.read_text() * 2)
        reborn = ValidationStore(tmp_path)
        assert len(reborn.rows) == 1
        assert reborn.rows["r0"].votes == [("alice", "c1")]
        reborn.close()

    def test_snapshot_compacts_and_preserves_state(self, tmp_path):
        store = ValidationStore(tmp_path)
        store.add_rows(make_rows(3))
        for v, c in (("a", "c1"), ("b", "c1"), ("c", "c2")):
            store.vote("r2", v, c)
        store.snapshot()
        assert (tmp_path / "events.jsonl").read_text() == ""
        store.vote("r0", "a", "no-match")
        store.close()

        reborn = ValidationStore(tmp_path)
        assert reborn.verdict("r2") == "c1"
        assert reborn.rows["r0"].votes == [("a", "no-match")]
        assert len(reborn.rows) == 3
        reborn.close()

    def test_corrupt_log_reports_byte_position(self, tmp_path):
        store = ValidationStore(tmp_path)
        store.add_rows(make_rows(1))
        store.close()
        log = tmp_path / "events.jsonl"
        good = log.read_bytes()
        log.write_bytes(good + b"{never finished\n")
        with pytest.raises(CorruptLogError, match=f"byte {len(good)}"):
            ValidationStore(tmp_path)


class TestVoting:
    def test_rejected_vote_leaves_no_event(self, tmp_path):
        store = ValidationStore(tmp_path)
        store.add_rows(make_rows(1))
        store.vote("r0", "alice", "c1")
        size_before = (tmp_path / "events.jsonl").stat().st_size
        with pytest.raises(DomainError):
            store.vote("r0", "alice", "c2")  # duplicate validator
        with pytest.raises(DomainError):
            store.vote("r0", "bob", "c9")  # invalid choice
        assert (tmp_path / "events.jsonl").stat().st_size == size_before
        assert store.rows["r0"].votes == [("alice", "c1")]
        store.close()

    def test_unknown_row_raises_keyerror(self, tmp_path):
        store = ValidationStore(tmp_path)
        with pytest.raises(KeyError):
            store.vote("ghost", "alice", "c1")
        store.close()

    def test_next_pending_skips_own_votes(self, tmp_path):
        store = ValidationStore(tmp_path)
        store.add_rows(make_rows(2))
        store.vote("r0", "alice", "c1")
        nxt = store.next_pending("alice")
        assert nxt.row_id == "r1"
        assert store.next_pending("bob").row_id == "r0"
        store.close()

    def test_completion_ordering(self, tmp_path):
        store = ValidationStore(tmp_path)
        store.add_rows(make_rows(1))
        for v in ("a", "b", "c"):
            store.vote("r0", v, "no-match")
        assert store.verdict("r0") == "no-match"
        assert store.completed_rows()[0].row_id == "r0"
        assert store.pending_count() == 0
        store.close()


class TestEnqueue:
    def test_enqueue_respects_band_and_dedup(self, tmp_path):
        store = ValidationStore(tmp_path)
        policy = HitlPolicy(band_low=0.75, band_high=0.95)
        preds = [in_band_prediction("q1", 0.85),
                 in_band_prediction("q2", 0.99)]  # out of band
        first = store.enqueue(preds, policy)
        assert [r.query["offer_id"] for r in first] == ["q1"]
        again = store.enqueue(preds, policy)
        assert again == []
        assert len(store.rows) == 1
        store.close()

    def test_enqueued_rows_survive_restart(self, tmp_path):
        store = ValidationStore(tmp_path)
        store.enqueue([in_band_prediction("q1", 0.85)], HitlPolicy())
        store.close()
        reborn = ValidationStore(tmp_path)
        assert len(reborn.rows) == 1
        reborn.close()
