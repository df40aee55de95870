import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

_QUIET = False


def load_config(file_path='config.json'):
    """Loads project configuration from a JSON file."""
    with open(file_path, 'r') as f:
        return json.load(f)


def set_quiet(quiet=True):
    """Silence progress output; warnings ([!]) are always printed."""
    global _QUIET
    _QUIET = quiet


def log(message, level="*"):
    """Print a tagged console line to stderr ([*] progress, [+] success, [!] problem)."""
    if _QUIET and level != "!":
        return
    print(f"[{level}] {message}", file=sys.stderr)


def banner(title):
    if _QUIET:
        return
    print("\n" + "="*60, file=sys.stderr)
    print(title, file=sys.stderr)
    print("="*60, file=sys.stderr)


def print_summary(summary, title="EXECUTION SUMMARY", file=None):
    print("\n" + "="*40, file=file)
    print(f"       {title}", file=file)
    print("="*40, file=file)
    for step, status in summary.items():
        dots = "." * max(2, 30 - len(step))
        print(f"{step} {dots} {status}", file=file)
    print("="*40 + "\n", file=file)


def write_csv(path, header, rows, config=None):
    """
    Write rows as CSV with a config comment row and a header row.

    Args:
        path (str): Output file; "-" writes to stdout
        header (list): Column names
        rows (iterable): Row sequences matching the header
        config (dict): Run configuration recorded in the leading comment row

    Returns:
        int: Number of data rows written
    """
    comment = "# config: " + json.dumps(config or {}, sort_keys=True, default=str)
    if path == "-":
        handle = sys.stdout
    else:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        handle = open(path, 'w', newline='', encoding='utf-8')

    count = 0
    try:
        handle.write(comment + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
            count += 1
    finally:
        if handle is not sys.stdout:
            handle.close()

    if path != "-":
        log(f"{count} rows saved to: {path}", "+")
    return count


def parallel_map(func, items, jobs=1):
    """Ordered map over items; jobs > 1 dispatches to a process pool."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(func, items))


def run_jobs(func, items, jobs=1, describe=str):
    """
    Run independent jobs and collect their outcomes.

    Args:
        func (callable): Job body; must be picklable when jobs > 1
        items (list): Job inputs
        jobs (int): Worker cap
        describe (callable): Label for an input in progress lines

    Returns:
        dict: Execution results
            {
                "success": True/False,
                "total": int,
                "executed": int,
                "failed": int,
                "results": [{"job": str, "success": bool, "value": object, "error": str}, ...]
            }
    """
    items = list(items)
    if not items:
        log("No jobs to execute", "!")
        return {"success": False, "total": 0, "executed": 0, "failed": 0, "results": []}

    log(f"Executing {len(items)} jobs with up to {max(1, jobs or 1)} workers")
    outcomes = parallel_map(_guarded, [(func, item) for item in items], jobs)

    results = []
    failed = 0
    for item, (value, error) in zip(items, outcomes):
        if error is not None:
            failed += 1
            log(f"Job {describe(item)} failed: {error}", "!")
        results.append({
            "job": describe(item),
            "success": error is None,
            "value": value,
            "error": error,
        })

    return {
        "success": failed == 0,
        "total": len(items),
        "executed": len(items),
        "failed": failed,
        "results": results,
    }


def _guarded(packed):
    func, item = packed
    try:
        return func(item), None
    except Exception as e:
        return None, f"{type(e).__name__}: {e}"
