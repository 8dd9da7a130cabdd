from weertman.storage import RunRepository


def test_run_lifecycle(tmp_path):
    repo = RunRepository(tmp_path / "ledger" / "runs.db")
    run_id = repo.create_run("evolve", {"N": 1024, "stages": ["evolve"]}, tmp_path)
    repo.log_run(run_id, "evolve 시작")
    repo.log_run(run_id, "dt too large", level="ERROR")
    repo.finish_run(run_id, status="failed", exit_code=3, failed_stage="evolve")

    run = repo.get_run(run_id)
    assert run["status"] == "failed"
    assert run["exit_code"] == 3
    assert run["failed_stage"] == "evolve"
    assert run["config"] == {"N": 1024, "stages": ["evolve"]}
    assert run["finished_at"] is not None

    logs = repo.get_run_logs(run_id)
    assert [entry["message"] for entry in logs] == ["evolve 시작", "dt too large"]
    assert logs[1]["level"] == "ERROR"


def test_recent_runs_filter_by_status(tmp_path):
    repo = RunRepository(tmp_path / "runs.db")
    done = repo.create_run("analyze", {})
    repo.finish_run(done, status="completed", exit_code=0)
    pending = repo.create_run("pipeline", {})

    assert [run["run_id"] for run in repo.list_recent_runs()] == [pending, done]
    assert [run["run_id"] for run in repo.list_recent_runs(status="completed")] == [done]
    assert repo.list_recent_runs(limit=1)[0]["status"] == "running"
    assert repo.get_run("missing") is None
