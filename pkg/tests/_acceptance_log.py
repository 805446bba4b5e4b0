"""One summary line per acceptance criterion, collected across the session."""

LINES = []


def record(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
    LINES.append(line)
    print(line)
    return ok
