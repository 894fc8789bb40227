# tests/test_check_worker.py

import pytest

import check_worker
import errors
import harmonic
from check_worker import SUITES, CheckWorker, expand_suites

N = 12


def test_expand_suites():
    assert expand_suites(["all"]) == list(SUITES)
    assert expand_suites(["tree", "all"])[0] == "tree"
    assert expand_suites(["tree", "tree"]) == ["tree"]
    with pytest.raises(errors.UsageError):
        expand_suites(["tree", "nosuch"])


def test_fast_suites_pass_in_order():
    started, finished = [], []
    worker = CheckWorker(["multiplier", "tree", "harmonic"], N, 6, workers=2,
                         on_started=lambda name, i: started.append((name, i)),
                         on_finished=lambda name, duration: finished.append(name))
    results = worker.run()
    assert [r.suite for r in results] == ["multiplier", "tree", "harmonic"]
    assert all(r.passed for r in results), [(r.suite, o.name) for r in results for o in r.outcomes if not o.ok]
    assert sorted(started) == [("harmonic", 2), ("multiplier", 0), ("tree", 1)]
    assert sorted(finished) == ["harmonic", "multiplier", "tree"]


def test_failing_suite_reports_its_error(monkeypatch):
    def boom(res, N, depth):
        raise errors.DepthTooShallow("table too shallow")

    monkeypatch.setitem(check_worker.SUITES, "boom", boom)
    errors_seen = []
    results = CheckWorker(["boom"], N, 4, on_error=lambda name, msg: errors_seen.append((name, msg))).run()
    assert not results[0].passed
    assert results[0].error == "table too shallow"
    assert errors_seen == [("boom", "table too shallow")]


def test_stop_skips_pending_suites():
    worker = CheckWorker(["multiplier"], N, 4)
    worker.stop()
    result, = worker.run()
    assert result.error == "stopped"
    assert not result.passed


def test_harmonic_suite_rejects_misplaced_reports(monkeypatch):
    validate = harmonic.validate

    def shifted(c):
        # Same violations, but incoming sums blamed on the center
        report = validate(c)
        moved = [m if not m.startswith("incoming") else "incoming sum nonzero at V(0;0)" for m in report.vertex_sums]
        return harmonic.ValidationReport(report.antisymmetry, moved, report.periodicity)

    monkeypatch.setattr(harmonic, "validate", shifted)
    result, = CheckWorker(["harmonic"], N, 4).run()
    assert not result.passed
    failed = {o.name for o in result.outcomes if not o.ok}
    assert failed == {"perturbations localized p=3", "perturbations localized p=5"}


def test_precision_suites_pass_at_full_digits():
    results = CheckWorker(["linvariant", "branch", "exceptional", "cohomology"], N, 7, workers=2).run()
    assert all(r.passed for r in results), [(r.suite, o.name, o.detail) for r in results for o in r.outcomes
                                            if not o.ok]
