#!/usr/bin/env python3
"""Runner adapter: executes one pytest file and emits normalized JSON.

Usage:
    pytest_adapter.py TESTFILE RESULTFILE COVFILE COVTARGET

Runs pytest on TESTFILE, then writes:

RESULTFILE (always):
    {"collected": int, "executed": int, "passed": int, "failed": int,
     "collection_error": null | {"signature": str, "message": str},
     "runtime_errors": [{"test": str, "signature": str, "message": str}],
     "tests": [{"name": str, "outcome": "passed|failed|error|skipped"}]}

COVFILE (always):
    {"path": COVTARGET as given,
     "executable_lines": [1-based line numbers that can execute],
     "hit_lines": [1-based line numbers that did execute]}

"executed" counts tests that ran to a pass/fail verdict; setup errors and
skips do not count. Coverage is measured by line-tracing COVTARGET while its
code can run (imports of same-named modules and test setup/call/teardown),
so import-time lines count as hit. The process exits 0 when both files were
written; test failures are data, not adapter errors.
"""

import json
import os
import re
import sys

# Third-party plugins are never used here (coverage is hand-rolled below);
# skipping the entry-point scan keeps per-run startup cheap.
os.environ.setdefault("PYTEST_DISABLE_PLUGIN_AUTOLOAD", "1")

import pytest

_SIGNATURE_RE = re.compile(r"\b([A-Z][A-Za-z]*(?:Error|Exception))\b")


def signature_from_text(text):
    matches = _SIGNATURE_RE.findall(text)
    return matches[-1] if matches else "UnknownError"


def executable_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        source = fh.read()
    code = compile(source, path, "exec")
    lines = set()
    stack = [code]
    code_type = type(code)
    while stack:
        obj = stack.pop()
        for _start, _end, line in obj.co_lines():
            if line is not None:
                lines.add(line)
        for const in obj.co_consts:
            if isinstance(const, code_type):
                stack.append(const)
    return lines


class Recorder:
    def __init__(self):
        self.collected = 0
        self.executed = 0
        self.passed = 0
        self.failed = 0
        self.collection_error = None
        self.runtime_errors = []
        self.tests = []

    def pytest_collection_modifyitems(self, items):
        self.collected = len(items)

    def pytest_collectreport(self, report):
        if report.failed and self.collection_error is None:
            text = str(report.longrepr)
            self.collection_error = {
                "signature": signature_from_text(text),
                "message": text[-500:],
            }

    def pytest_runtest_makereport(self, item, call):
        if call.when == "setup" and call.excinfo is not None:
            typename = call.excinfo.typename
            if typename == "Skipped":
                self.tests.append({"name": item.nodeid, "outcome": "skipped"})
                return
            self.tests.append({"name": item.nodeid, "outcome": "error"})
            self.runtime_errors.append({
                "test": item.nodeid,
                "signature": typename,
                "message": str(call.excinfo.value)[:200],
            })
            return
        if call.when != "call":
            return
        if call.excinfo is None:
            self.executed += 1
            self.passed += 1
            self.tests.append({"name": item.nodeid, "outcome": "passed"})
        elif call.excinfo.typename == "Skipped":
            self.tests.append({"name": item.nodeid, "outcome": "skipped"})
        else:
            self.executed += 1
            self.failed += 1
            self.tests.append({"name": item.nodeid, "outcome": "failed"})
            self.runtime_errors.append({
                "test": item.nodeid,
                "signature": call.excinfo.typename,
                "message": str(call.excinfo.value)[:200],
            })


class LineTracer:
    """Line coverage for one file, tracing only while its code can run.

    A global settrace hook taxes every Python call and roughly doubles a
    pytest session, so the trace window is scoped to (a) imports of modules
    whose terminal name matches the target file and (b) each test's
    setup/call/teardown phase. Module-level target lines therefore count as
    hit when the target is imported, matching session-wide tracing for any
    test file that reaches the target through imports or test calls.
    """

    def __init__(self, target):
        self.target = os.path.realpath(target)
        self.hits = set()
        self._known = {}
        self._depth = 0
        base = os.path.basename(self.target)
        self.candidate = base[:-3] if base.endswith(".py") else base

    def push(self):
        self._depth += 1
        if self._depth == 1:
            sys.settrace(self._global_trace)

    def pop(self):
        self._depth -= 1
        if self._depth == 0:
            sys.settrace(None)

    def _global_trace(self, frame, event, arg):
        filename = frame.f_code.co_filename
        cached = self._known.get(filename)
        if cached is None:
            cached = os.path.realpath(filename) == self.target
            self._known[filename] = cached
        return self._local_trace if cached else None

    def _local_trace(self, frame, event, arg):
        if event == "line":
            self.hits.add(frame.f_lineno)
        return self._local_trace


class ImportWindow:
    """Meta-path hook that brackets candidate-module imports with the tracer."""

    def __init__(self, tracer):
        self.tracer = tracer
        self._resolving = False

    def find_spec(self, fullname, path, target=None):
        if self._resolving or fullname.rpartition(".")[2] != self.tracer.candidate:
            return None
        self._resolving = True
        try:
            spec = None
            for finder in sys.meta_path:
                if finder is self:
                    continue
                find = getattr(finder, "find_spec", None)
                if find is None:
                    continue
                spec = find(fullname, path, target)
                if spec is not None:
                    break
        finally:
            self._resolving = False
        if spec is None or spec.loader is None:
            return None
        spec.loader = _TracingLoader(spec.loader, self.tracer)
        return spec


class _TracingLoader:
    def __init__(self, inner, tracer):
        self._inner = inner
        self._tracer = tracer

    def create_module(self, spec):
        create = getattr(self._inner, "create_module", None)
        return create(spec) if create is not None else None

    def exec_module(self, module):
        self._tracer.push()
        try:
            self._inner.exec_module(module)
        finally:
            self._tracer.pop()

    def __getattr__(self, name):
        return getattr(self._inner, name)


class TestPhaseWindow:
    """Plugin that brackets each test's setup/call/teardown with the tracer."""

    def __init__(self, tracer):
        self._tracer = tracer

    @pytest.hookimpl(wrapper=True)
    def pytest_runtest_setup(self, item):
        self._tracer.push()
        try:
            return (yield)
        finally:
            self._tracer.pop()

    @pytest.hookimpl(wrapper=True)
    def pytest_runtest_call(self, item):
        self._tracer.push()
        try:
            return (yield)
        finally:
            self._tracer.pop()

    @pytest.hookimpl(wrapper=True)
    def pytest_runtest_teardown(self, item):
        self._tracer.push()
        try:
            return (yield)
        finally:
            self._tracer.pop()


def main(argv):
    if len(argv) != 5:
        print("usage: pytest_adapter.py TESTFILE RESULTFILE COVFILE COVTARGET",
              file=sys.stderr)
        return 2
    testfile, resultfile, covfile, covtarget = argv[1:]
    sys.dont_write_bytecode = True

    recorder = Recorder()
    tracer = LineTracer(covtarget)
    window = ImportWindow(tracer)
    sys.meta_path.insert(0, window)
    try:
        pytest.main(
            ["-q", "-p", "no:cacheprovider", "--tb=long", testfile],
            plugins=[recorder, TestPhaseWindow(tracer)],
        )
    finally:
        sys.meta_path.remove(window)
        sys.settrace(None)

    result = {
        "collected": recorder.collected,
        "executed": recorder.executed,
        "passed": recorder.passed,
        "failed": recorder.failed,
        "collection_error": recorder.collection_error,
        "runtime_errors": recorder.runtime_errors,
        "tests": recorder.tests,
    }
    with open(resultfile, "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=1, sort_keys=True)

    try:
        lines = executable_lines(covtarget)
    except (OSError, SyntaxError):
        lines = set()
    coverage = {
        "path": covtarget,
        "executable_lines": sorted(lines),
        "hit_lines": sorted(tracer.hits & lines),
    }
    with open(covfile, "w", encoding="utf-8") as fh:
        json.dump(coverage, fh, indent=1, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
