import itertools
import json

import pytest
from fastapi.testclient import TestClient

from codemix import corpus
from codemix.annotation import (AnnotationProject, UnknownAnnotatorError,
                                UnknownCommentError, ZeroOverlapError)
from codemix.annotation.service import create_app
from codemix.corpus import Comment, Dataset


def make_dataset(n=3, prefix="c"):
    comments = [Comment(id=f"{prefix}{i:03d}", platform="twitter",
                        raw_text=f"comment number {i}", language="unknown")
                for i in range(1, n + 1)]
    return Dataset(comments=comments, name="proj")


@pytest.fixture
def project(tmp_path):
    return AnnotationProject.create(tmp_path / "proj.jsonl", make_dataset(3))


class TestTaskQueue:
    def test_fresh_project_serves_lowest_id(self, project):
        task = project.next_task("ann1")
        assert task.comment_id == "c001"
        assert task.status == "pending"
        assert task.raw_text == "comment number 1"
        assert task.platform == "twitter"
        assert task.assigned_to == "ann1"

    def test_next_skips_already_labeled(self, project):
        project.submit("c001", "ann1", "hate", "english")
        assert project.next_task("ann1").comment_id == "c002"

    def test_exhausted_returns_none(self, project):
        for cid in ["c001", "c002", "c003"]:
            project.submit(cid, "ann1", "hate", "english")
        assert project.next_task("ann1") is None

    def test_no_double_offer_without_label(self, project):
        # a second request (second browser tab) must get a different comment
        a = project.next_task("ann1")
        b = project.next_task("ann1")
        assert a.comment_id != b.comment_id

    def test_offer_cleared_after_submit(self, project):
        project.next_task("ann1")
        project.submit("c001", "ann1", "hate", "english")
        assert project.next_task("ann1").comment_id == "c002"

    def test_two_annotators_each_see_all_exactly_once(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(7))
        seen = {"a": [], "b": []}
        pending = {"a": True, "b": True}
        turn = itertools.cycle(["a", "b"])
        while any(pending.values()):
            who = next(turn)
            if not pending[who]:
                continue
            task = project.next_task(who)
            if task is None:
                pending[who] = False
                continue
            seen[who].append(task.comment_id)
            project.submit(task.comment_id, who, "hate", "english")
        all_ids = [f"c{i:03d}" for i in range(1, 8)]
        for who in "ab":
            assert sorted(seen[who]) == all_ids
            assert len(seen[who]) == len(set(seen[who]))

    def test_roster_rejects_unknown_annotator(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(2),
                                           roster=["alice", "bob"])
        with pytest.raises(UnknownAnnotatorError):
            project.next_task("mallory")
        assert project.next_task("alice").comment_id == "c001"

    def test_empty_annotator_rejected(self, project):
        with pytest.raises(UnknownAnnotatorError):
            project.next_task("")

    def test_task_status_reflects_other_annotators(self, project):
        project.submit("c001", "ann1", "hate", "english")
        task = project.next_task("ann2")
        assert task.comment_id == "c001"
        assert task.status == "labeled"


class TestSubmission:
    def test_first_label_increments_count(self, project):
        count, revision = project.submit("c001", "ann1", "hate", "english")
        assert count == 1
        assert revision == 1

    def test_resubmission_overwrites_with_revision_2(self, project):
        project.submit("c001", "ann1", "hate", "english")
        count, revision = project.submit("c001", "ann1", "not_hate", "english")
        assert count == 1
        assert revision == 2
        exported = project.export_labeled("first").dataset
        assert exported.comments[0].gold_label == "not_hate"

    def test_second_annotator_same_comment_count_unchanged(self, project):
        project.submit("c001", "ann1", "hate", "english")
        count, revision = project.submit("c001", "ann2", "hate", "hindi")
        assert count == 1
        assert revision == 1

    def test_unknown_comment_rejected(self, project):
        with pytest.raises(UnknownCommentError) as e:
            project.submit("x999", "ann1", "hate", "english")
        assert "x999" in str(e.value)

    def test_invalid_label_names_field(self, project):
        with pytest.raises(ValueError) as e:
            project.submit("c001", "ann1", "offensive", "english")
        assert "label" in str(e.value)

    def test_invalid_language_names_field(self, project):
        with pytest.raises(ValueError) as e:
            project.submit("c001", "ann1", "hate", "klingon")
        assert "language" in str(e.value)


class TestPersistence:
    def test_reopen_replays_all_records(self, tmp_path):
        path = tmp_path / "p.jsonl"
        project = AnnotationProject.create(path, make_dataset(5))
        project.submit("c001", "a", "hate", "english")
        project.submit("c002", "a", "not_hate", "hindi")
        project.submit("c001", "a", "not_hate", "english")  # revision 2
        project.submit("c001", "b", "hate", "hinglish")
        project.close()

        reopened = AnnotationProject(path)
        assert reopened.labeled_count == 2
        assert reopened._records[("c001", "a")].label == "not_hate"
        assert reopened._records[("c001", "a")].revision == 2
        assert reopened._records[("c001", "b")].language == "hinglish"
        count, revision = reopened.submit("c001", "a", "hate", "english")
        assert revision == 3

    def test_torn_final_line_dropped(self, tmp_path):
        path = tmp_path / "p.jsonl"
        project = AnnotationProject.create(path, make_dataset(2))
        project.submit("c001", "a", "hate", "english")
        project.close()
        with open(path, "a") as fh:
            fh.write('{"type": "label", "comment_id": "c002", "annot')
        reopened = AnnotationProject(path)
        assert reopened.labeled_count == 1

    def test_corrupt_middle_line_errors_with_line_number(self, tmp_path):
        path = tmp_path / "p.jsonl"
        project = AnnotationProject.create(path, make_dataset(2))
        project.close()
        lines = path.read_text().splitlines()
        lines.insert(1, "{broken")
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError) as e:
            AnnotationProject(path)
        assert "line 2" in str(e.value)

    def test_missing_project_file_actionable(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            AnnotationProject(tmp_path / "ghost.jsonl")

    def test_create_refuses_overwrite(self, tmp_path):
        path = tmp_path / "p.jsonl"
        AnnotationProject.create(path, make_dataset(1))
        with pytest.raises(FileExistsError):
            AnnotationProject.create(path, make_dataset(1))


class TestAgreement:
    def label_five(self, project, a_labels, b_labels):
        for i, (la, lb) in enumerate(zip(a_labels, b_labels), start=1):
            project.submit(f"c{i:03d}", "a", la, "english")
            project.submit(f"c{i:03d}", "b", lb, "english")

    def test_hand_worked_kappa_example(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(5))
        self.label_five(project,
                        ["hate", "hate", "not_hate", "not_hate", "hate"],
                        ["hate", "not_hate", "not_hate", "not_hate", "hate"])
        report = project.agreement("a", "b")
        assert abs(report.kappa - 0.6153846) < 1e-6
        assert abs(report.observed_agreement - 0.8) < 1e-12
        assert abs(report.expected_agreement - 0.48) < 1e-12
        assert report.n_items == 5

    def test_symmetry(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(5))
        self.label_five(project,
                        ["hate", "not_hate", "hate", "hate", "not_hate"],
                        ["hate", "hate", "not_hate", "hate", "not_hate"])
        ab = project.agreement("a", "b")
        ba = project.agreement("b", "a")
        assert ab.kappa == ba.kappa

    def test_full_agreement_is_one(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(3))
        self.label_five(project, ["hate", "not_hate", "hate"],
                        ["hate", "not_hate", "hate"])
        assert project.agreement("a", "b").kappa == 1.0

    def test_zero_overlap_errors(self, project):
        project.submit("c001", "a", "hate", "english")
        project.submit("c002", "b", "hate", "english")
        with pytest.raises(ZeroOverlapError) as e:
            project.agreement("a", "b")
        assert "zero overlap" in str(e.value)

    def test_intersection_only(self, tmp_path):
        # disjoint extras must not affect the overlap computation
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(6))
        self.label_five(project,
                        ["hate", "hate", "not_hate", "not_hate", "hate"],
                        ["hate", "not_hate", "not_hate", "not_hate", "hate"])
        project.submit("c006", "a", "hate", "english")
        report = project.agreement("a", "b")
        assert report.n_items == 5
        assert abs(report.kappa - 0.6153846) < 1e-6


class TestExport:
    def test_first_strategy_sizes(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(4))
        project.submit("c001", "a", "hate", "english")
        project.submit("c003", "a", "not_hate", "hindi")
        result = project.export_labeled("first")
        assert [c.id for c in result.dataset.comments] == ["c001", "c003"]
        assert [c.gold_label for c in result.dataset.comments] == ["hate", "not_hate"]
        assert result.excluded == 0

    def test_first_takes_earliest_annotator(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(1))
        project.submit("c001", "late_but_first", "hate", "english")
        project.submit("c001", "second", "not_hate", "english")
        result = project.export_labeled("first")
        assert result.dataset.comments[0].gold_label == "hate"

    def test_unanimous_excludes_disagreement(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(2))
        project.submit("c001", "a", "hate", "english")
        project.submit("c001", "b", "not_hate", "english")
        project.submit("c002", "a", "hate", "english")
        project.submit("c002", "b", "hate", "english")
        result = project.export_labeled("unanimous")
        assert [c.id for c in result.dataset.comments] == ["c002"]
        assert result.excluded == 1

    def test_majority_all_three_annotator_patterns(self, tmp_path):
        # oracle: enumerate every 2-class vote pattern for 3 annotators and
        # resolve by counting, independently of the store's implementation
        patterns = list(itertools.product(["hate", "not_hate"], repeat=3))
        project = AnnotationProject.create(tmp_path / "p.jsonl",
                                           make_dataset(len(patterns)))
        for i, votes in enumerate(patterns, start=1):
            for who, vote in zip(["a", "b", "c"], votes):
                project.submit(f"c{i:03d}", who, vote, "english")
        result = project.export_labeled("majority")
        assert result.excluded == 0
        by_id = {c.id: c.gold_label for c in result.dataset.comments}
        for i, votes in enumerate(patterns, start=1):
            expected = "hate" if votes.count("hate") >= 2 else "not_hate"
            assert by_id[f"c{i:03d}"] == expected

    def test_majority_two_way_tie_excluded(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(1))
        project.submit("c001", "a", "hate", "english")
        project.submit("c001", "b", "not_hate", "english")
        result = project.export_labeled("majority")
        assert result.dataset.comments == []
        assert result.excluded == 1

    def test_language_is_modal_tag(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(1))
        project.submit("c001", "a", "hate", "hinglish")
        project.submit("c001", "b", "hate", "hinglish")
        project.submit("c001", "c", "hate", "hindi")
        result = project.export_labeled("majority")
        assert result.dataset.comments[0].language == "hinglish"

    def test_invalid_strategy_rejected(self, project):
        with pytest.raises(ValueError):
            project.export_labeled("consensus")

    def test_annotator_labels_carried(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "p.jsonl", make_dataset(1))
        project.submit("c001", "a", "hate", "english")
        project.submit("c001", "b", "hate", "english")
        c = project.export_labeled("unanimous").dataset.comments[0]
        assert c.annotator_labels == {"a": "hate", "b": "hate"}


class TestStats:
    def test_counts(self, project):
        project.submit("c001", "ann1", "hate", "english")
        project.submit("c001", "ann2", "not_hate", "english")
        project.submit("c002", "ann1", "hate", "hindi")
        s = project.stats()
        assert s["total"] == 3
        assert s["labeled"] == 2
        assert s["pending"] == 1
        assert s["skipped"] == 0
        assert s["annotators"] == {"ann1": 2, "ann2": 1}


@pytest.fixture
def client(tmp_path):
    project = AnnotationProject.create(tmp_path / "api.jsonl", make_dataset(5))
    return TestClient(create_app(project))


class TestHttpApi:
    def test_next_task_json(self, client):
        r = client.get("/api/tasks/next", params={"annotator": "a"})
        assert r.status_code == 200
        body = r.json()
        assert body["comment_id"] == "c001"
        assert body["status"] == "pending"
        assert set(body) == {"comment_id", "raw_text", "platform", "status",
                             "assigned_to"}

    def test_exhausted_gives_204(self, client):
        for i in range(1, 6):
            client.post("/api/labels", json={"comment_id": f"c{i:03d}",
                                             "annotator_id": "a", "label": "hate",
                                             "language": "english"})
        r = client.get("/api/tasks/next", params={"annotator": "a"})
        assert r.status_code == 204

    def test_missing_annotator_param_422(self, client):
        assert client.get("/api/tasks/next").status_code == 422

    def test_dual_tab_no_double_offer(self, client):
        a = client.get("/api/tasks/next", params={"annotator": "a"}).json()
        b = client.get("/api/tasks/next", params={"annotator": "a"}).json()
        assert a["comment_id"] != b["comment_id"]

    def test_post_label_ack(self, client):
        r = client.post("/api/labels", json={"comment_id": "c001",
                                             "annotator_id": "a", "label": "hate",
                                             "language": "hinglish"})
        assert r.status_code == 200
        assert r.json() == {"labeled_count": 1, "revision": 1}

    def test_post_invalid_label_names_field(self, client):
        r = client.post("/api/labels", json={"comment_id": "c001",
                                             "annotator_id": "a",
                                             "label": "offensive",
                                             "language": "english"})
        assert r.status_code == 422
        assert any("label" in str(err.get("loc", [])) for err in r.json()["detail"])

    def test_post_unknown_comment_404(self, client):
        r = client.post("/api/labels", json={"comment_id": "x999",
                                             "annotator_id": "a", "label": "hate",
                                             "language": "english"})
        assert r.status_code == 404
        assert "x999" in r.json()["detail"]

    def test_agreement_endpoint(self, client):
        a_labels = ["hate", "hate", "not_hate", "not_hate", "hate"]
        b_labels = ["hate", "not_hate", "not_hate", "not_hate", "hate"]
        for i, (la, lb) in enumerate(zip(a_labels, b_labels), start=1):
            for who, lab in [("a", la), ("b", lb)]:
                client.post("/api/labels", json={"comment_id": f"c{i:03d}",
                                                 "annotator_id": who, "label": lab,
                                                 "language": "english"})
        r = client.get("/api/agreement", params={"a": "a", "b": "b"})
        assert r.status_code == 200
        body = r.json()
        assert set(body) == {"kappa", "p_o", "p_e", "n_items"}
        assert abs(body["kappa"] - 0.6153846) < 1e-6
        assert body["n_items"] == 5

    def test_agreement_zero_overlap_400(self, client):
        client.post("/api/labels", json={"comment_id": "c001", "annotator_id": "a",
                                         "label": "hate", "language": "english"})
        r = client.get("/api/agreement", params={"a": "a", "b": "b"})
        assert r.status_code == 400
        assert "zero overlap" in r.json()["detail"]

    def test_export_csv_loadable_by_corpus(self, client, tmp_path):
        for cid, label in [("c001", "hate"), ("c002", "not_hate")]:
            client.post("/api/labels", json={"comment_id": cid, "annotator_id": "a",
                                             "label": label, "language": "hinglish"})
        r = client.get("/api/export", params={"strategy": "first"})
        assert r.status_code == 200
        assert r.headers["content-type"].startswith("text/csv")
        assert r.headers["x-excluded-count"] == "0"
        csv_path = tmp_path / "exported.csv"
        csv_path.write_text(r.text)
        ds = corpus.load_csv(csv_path)
        assert [c.id for c in ds.comments] == ["c001", "c002"]
        assert [c.gold_label for c in ds.comments] == ["hate", "not_hate"]
        assert ds.comments[0].language == "hinglish"

    def test_export_invalid_strategy_400(self, client):
        r = client.get("/api/export", params={"strategy": "vibes"})
        assert r.status_code == 400

    def test_stats_endpoint(self, client):
        client.post("/api/labels", json={"comment_id": "c001", "annotator_id": "a",
                                         "label": "hate", "language": "english"})
        r = client.get("/api/stats")
        assert r.status_code == 200
        body = r.json()
        assert body["total"] == 5
        assert body["labeled"] == 1
        assert body["annotators"] == {"a": 1}

    def test_root_serves_static_page(self, client):
        r = client.get("/")
        assert r.status_code == 200
        assert "html" in r.text.lower()

    def test_roster_unknown_annotator_400(self, tmp_path):
        project = AnnotationProject.create(tmp_path / "r.jsonl", make_dataset(2),
                                           roster=["alice"])
        c = TestClient(create_app(project))
        r = c.get("/api/tasks/next", params={"annotator": "mallory"})
        assert r.status_code == 400
        assert "not registered" in r.json()["detail"]

    def test_http_labels_survive_reopen(self, tmp_path):
        path = tmp_path / "d.jsonl"
        project = AnnotationProject.create(path, make_dataset(3))
        c = TestClient(create_app(project))
        for i in range(1, 4):
            r = c.post("/api/labels", json={"comment_id": f"c{i:03d}",
                                            "annotator_id": "a", "label": "hate",
                                            "language": "english"})
            assert r.status_code == 200
        project.close()
        reopened = AnnotationProject(path)
        assert reopened.labeled_count == 3
