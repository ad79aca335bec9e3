import pytest
from sklearn.base import clone

from insightmem.core import ExperienceStore
from insightmem.estimators import InsightSelector, InsightSummarizer
from insightmem.pipeline import domain_shift, evaluate, ingest
from insightmem.toyworld import ExplorerPlanner, ObedientPlanner, generate_tasks
from insightmem.validation import NotFittedError


@pytest.fixture(scope="module")
def tasks():
    return generate_tasks(0)


@pytest.fixture(scope="module")
def experiences(tasks):
    return [exp for exp, _ in ingest(tasks["train"], ExplorerPlanner(0))]


def test_ingest_appends_in_task_order(tasks):
    store = ExperienceStore()
    ingest(tasks["train"][:10], ExplorerPlanner(0), store, workers=4)
    assert [e.id for e in store] == [t.id for t in tasks["train"][:10]]


def test_parallel_ingest_matches_serial(tasks):
    serial = ingest(tasks["train"], ExplorerPlanner(0))
    parallel = ingest(tasks["train"], ExplorerPlanner(0), workers=4)
    assert [e.to_dict() for e, _ in serial] == [e.to_dict() for e, _ in parallel]


def test_summarizer_params_and_clone():
    est = InsightSummarizer(mode="success", model="m")
    assert est.get_params()["mode"] == "success"
    assert clone(est).get_params() == est.get_params()


def test_summarizer_fit_is_deterministic(experiences):
    a = InsightSummarizer().fit(experiences).database_
    b = InsightSummarizer().fit(experiences).database_
    assert a.frozen and a.dumps() == b.dumps()


def test_summarizer_rejects_bad_mode(experiences):
    with pytest.raises(ValueError):
        InsightSummarizer(mode="both").fit(experiences)


def test_partial_fit_grows_without_touching_previous(experiences):
    kitchen = [e for e in experiences if e.env_category == "kitchen"]
    bedroom = [e for e in experiences if e.env_category == "bedroom"]
    est = InsightSummarizer().partial_fit(kitchen)
    first = est.database_
    snapshot = first.dumps()
    est.partial_fit(bedroom)
    assert first.dumps() == snapshot and first.frozen
    assert len(est.database_) > len(first)
    assert {i.id for i in first.ordered()} <= {i.id for i in est.database_.ordered()}
    assert est.database_.frozen


def test_selector_requires_fit():
    with pytest.raises(NotFittedError):
        InsightSelector().transform(["heat the bread"])


def test_selector_transform_accepts_tuples(experiences):
    db = InsightSummarizer().fit(experiences).database_
    sel = InsightSelector("hashmap").fit(db)
    [a, b] = sel.transform([("Please heat the potato and put it on the dining table.", "kitchen"),
                            "Place the pillow on the bed."])
    assert a.subtask_names == ["Heat Food"]
    assert b.subtask_names == ["Make Bed"] and b.environment == []


def test_evaluate_reports_every_episode(tasks, experiences):
    db = InsightSummarizer().fit(experiences).database_
    res = evaluate(tasks["valid_seen"], ObedientPlanner(), InsightSelector("hashmap").fit(db))
    assert len(res["episodes"]) == len(tasks["valid_seen"])
    assert set(res["metrics"]) == {"sr_acc", "sr_plw", "gc_acc", "gc_plw"}
    assert all(0 <= v <= 1 for v in res["metrics"].values())


def test_domain_shift_curves(tasks, experiences):
    kitchen_eval = [t for t in tasks["valid_unseen"] if t.env_category == "kitchen"]
    res = domain_shift(experiences, kitchen_eval, ObedientPlanner(), InsightSummarizer(),
                       {"msi": InsightSelector("hashmap"), "flat": InsightSelector("flat")})
    assert res["order"] == ["kitchen", "living_room", "bedroom"]
    assert [s["stage"] for s in res["stages"]] == [1, 2, 3]
    sizes = [s["insights"] for s in res["stages"]]
    assert sizes == sorted(sizes)
    assert all(len(c) == 3 for c in res["sr_curves"].values())
    assert res["sr_drop"]["msi"] == 0
    assert res["sr_drop"]["flat"] > 0
