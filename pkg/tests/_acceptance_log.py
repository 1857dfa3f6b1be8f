"""Shared buffer for the acceptance scoreboard, printed by the
pytest_terminal_summary hook in conftest so the PASS/FAIL lines survive
output capture."""

LINES: list[str] = []


def record(number: int, name: str, ok: bool) -> bool:
    status = "PASS" if ok else "FAIL"
    LINES.append(f"ACCEPTANCE {number:2d} ({name}): {status}")
    return ok
