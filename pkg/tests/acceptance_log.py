"""One summary line per acceptance criterion, collected for the terminal report."""
LINES: list = []


def record(number: int, ok: bool, detail: str) -> bool:
    line = f"CRITERION {number:2d} {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append((number, line))
    print(line)
    return ok
