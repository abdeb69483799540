from __future__ import annotations

import asyncio
import socket
import threading
from pathlib import Path

import pytest

from radiant import load_iot_config

DATA = Path(__file__).parent / "data"
FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"
ENV = {"MQTT_URL": "tcp://localhost:1883"}


def pytest_addoption(parser):
    parser.addoption(
        "--table2-dataset",
        default=None,
        help="directory with the recorded factory dataset (detections.jsonl, ground_truth.jsonl)",
    )


@pytest.fixture(scope="session")
def production():
    return load_iot_config(DATA / "production.yaml", env=ENV)


@pytest.fixture(scope="session")
def listing8():
    return load_iot_config(DATA / "listing08.yaml", env=ENV)


@pytest.fixture(scope="session")
def healthcare():
    return load_iot_config(DATA / "healthcare.yaml", env=ENV)


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="session")
def mqtt_broker():
    """A local broker on a free port; yields its url."""
    amqtt_broker = pytest.importorskip("amqtt.broker")
    port = _free_port()
    config = {
        "listeners": {"default": {"type": "tcp", "bind": f"127.0.0.1:{port}"}},
        "plugins": {"amqtt.plugins.authentication.AnonymousAuthPlugin": {"allow_anonymous": True}},
    }
    loop = asyncio.new_event_loop()
    ready = threading.Event()
    holder = {}

    def serve():
        asyncio.set_event_loop(loop)
        broker = amqtt_broker.Broker(config, loop=loop)
        holder["broker"] = broker
        loop.run_until_complete(broker.start())
        ready.set()
        loop.run_forever()

    thread = threading.Thread(target=serve, daemon=True)
    thread.start()
    if not ready.wait(15):
        pytest.skip("local MQTT broker did not start")
    yield f"tcp://127.0.0.1:{port}"
    asyncio.run_coroutine_threadsafe(holder["broker"].shutdown(), loop).result(10)
    loop.call_soon_threadsafe(loop.stop)
    thread.join(5)


# ------------------------------------------------------------- acceptance lines

_CRITERIA: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if report.skipped:
            reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
            status = "SKIP"
            detail = reason.removeprefix("Skipped: ")
        else:
            status = "PASS" if report.passed else "FAIL"
            detail = f"{report.duration:.2f} s"
        _CRITERIA[number] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {status:4}  {title} ({detail})")
