from __future__ import annotations

import json
import sqlite3
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunRepository:
    """SQLite ledger of CLI runs and their log lines."""

    def __init__(self, db_path: str | Path = "output/runs.db") -> None:
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self.init_db()

    def _connect(self) -> sqlite3.Connection:
        connection = sqlite3.connect(self.db_path)
        connection.row_factory = sqlite3.Row
        return connection

    def init_db(self) -> None:
        with self._connect() as conn:
            conn.executescript(
                """
                PRAGMA journal_mode=WAL;

                CREATE TABLE IF NOT EXISTS runs (
                    run_id TEXT PRIMARY KEY,
                    command TEXT NOT NULL,
                    status TEXT NOT NULL,
                    started_at TEXT NOT NULL,
                    finished_at TEXT,
                    config_json TEXT NOT NULL,
                    out_dir TEXT,
                    exit_code INTEGER,
                    failed_stage TEXT
                );

                CREATE INDEX IF NOT EXISTS idx_runs_status ON runs(status);
                CREATE INDEX IF NOT EXISTS idx_runs_started_at ON runs(started_at);

                CREATE TABLE IF NOT EXISTS run_logs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id TEXT NOT NULL,
                    created_at TEXT NOT NULL,
                    level TEXT NOT NULL,
                    message TEXT NOT NULL
                );

                CREATE INDEX IF NOT EXISTS idx_run_logs_run_id ON run_logs(run_id);
                """
            )

    def create_run(self, command: str, config: dict[str, Any], out_dir: str | Path | None = None) -> str:
        run_id = uuid.uuid4().hex
        with self._connect() as conn:
            conn.execute(
                """
                INSERT INTO runs (run_id, command, status, started_at, config_json, out_dir)
                VALUES (?, ?, 'running', ?, ?, ?)
                """,
                (
                    run_id,
                    command,
                    utc_now(),
                    json.dumps(config, ensure_ascii=False, sort_keys=True),
                    str(out_dir) if out_dir is not None else None,
                ),
            )
        return run_id

    def log_run(self, run_id: str, message: str, level: str = "INFO") -> None:
        with self._connect() as conn:
            conn.execute(
                """
                INSERT INTO run_logs (run_id, created_at, level, message)
                VALUES (?, ?, ?, ?)
                """,
                (run_id, utc_now(), level, message),
            )

    def finish_run(
        self,
        run_id: str,
        status: str,
        exit_code: int,
        failed_stage: str | None = None,
    ) -> None:
        with self._connect() as conn:
            conn.execute(
                """
                UPDATE runs
                SET status = ?,
                    finished_at = ?,
                    exit_code = ?,
                    failed_stage = ?
                WHERE run_id = ?
                """,
                (status, utc_now(), exit_code, failed_stage, run_id),
            )

    def get_run(self, run_id: str) -> dict[str, Any] | None:
        with self._connect() as conn:
            row = conn.execute("SELECT * FROM runs WHERE run_id = ?", (run_id,)).fetchone()
        if row is None:
            return None
        run = dict(row)
        run["config"] = json.loads(run.pop("config_json") or "{}")
        return run

    def list_recent_runs(self, limit: int = 10, status: str | None = None) -> list[dict[str, Any]]:
        params: list[Any] = []
        where_sql = ""
        if status:
            where_sql = "WHERE status = ?"
            params.append(status)
        params.append(limit)
        with self._connect() as conn:
            rows = conn.execute(
                f"""
                SELECT run_id, command, status, started_at, finished_at, exit_code, failed_stage, out_dir
                FROM runs
                {where_sql}
                ORDER BY started_at DESC, rowid DESC
                LIMIT ?
                """,
                params,
            ).fetchall()
        return [dict(row) for row in rows]

    def get_run_logs(self, run_id: str, limit: int = 200) -> list[dict[str, Any]]:
        with self._connect() as conn:
            rows = conn.execute(
                """
                SELECT created_at, level, message
                FROM run_logs
                WHERE run_id = ?
                ORDER BY id ASC
                LIMIT ?
                """,
                (run_id, limit),
            ).fetchall()
        return [dict(row) for row in rows]
