"""Live ingestion from MQTT brokers."""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
from typing import Iterator, Sequence
from urllib.parse import urlparse

import paho.mqtt.client as mqtt

from radiant.engine.events import SensorEvent
from radiant.engine.ingest import IngestError, IngestStats, decode_payload
from radiant.iot_config import SourceDecl

log = logging.getLogger(__name__)

_STOP = object()


class BrokerUnavailable(ConnectionError):
    pass


def parse_broker_url(url: str) -> tuple[str, int, bool]:
    """Split ``tcp://host:port`` (also ``mqtt://``, ``ssl://``, bare ``host:port``)."""
    if "://" not in url:
        url = "tcp://" + url
    parsed = urlparse(url)
    if not parsed.hostname:
        raise ValueError(f"broker url {url!r} has no host")
    tls = parsed.scheme in ("ssl", "mqtts", "tls")
    return parsed.hostname, parsed.port or (8883 if tls else 1883), tls


class MqttIngest:
    """Subscribe to one or more sources and hand events over through a bounded queue.

    ``bindings`` pairs each source with the station its payloads belong to
    when they carry no ``station`` field.  Delivery into the queue blocks
    when it is full, which throttles the network thread instead of
    dropping events.
    """

    def __init__(
        self,
        bindings: Sequence[tuple[SourceDecl, str | None]],
        broker: str | None = None,
        connect_deadline: float = 10.0,
        queue_size: int = 10_000,
        stats: IngestStats | None = None,
        qos: int = 1,
    ):
        self.bindings = list(bindings)
        self.broker = broker
        self.connect_deadline = connect_deadline
        self.stats = stats if stats is not None else IngestStats()
        self.qos = qos
        self.queue: queue.Queue = queue.Queue(maxsize=queue_size)
        self.clients: list[mqtt.Client] = []
        self._pending_subs = 0
        self._subscribed = threading.Event()
        self._lock = threading.Lock()

    def _client_for(self, source: SourceDecl, station: str | None) -> mqtt.Client:
        client = mqtt.Client(
            callback_api_version=mqtt.CallbackAPIVersion.VERSION2,
            client_id=source.client_id or "",
            protocol=mqtt.MQTTv311,
        )
        client.reconnect_delay_set(min_delay=1, max_delay=30)

        def on_connect(c, userdata, flags, reason_code, properties):
            if reason_code.is_failure:
                log.error("source %s: broker refused connection (%s)", source.id, reason_code)
                return
            log.info("source %s: connected, subscribing to %s", source.id, source.topic)
            c.subscribe(source.topic, qos=self.qos)

        def on_subscribe(c, userdata, mid, reason_codes, properties):
            with self._lock:
                self._pending_subs -= 1
                if self._pending_subs <= 0:
                    self._subscribed.set()

        def on_disconnect(c, userdata, flags, reason_code, properties):
            if reason_code != 0:
                log.warning("source %s: connection lost (%s); reconnecting", source.id, reason_code)

        def on_message(c, userdata, msg):
            try:
                obj = json.loads(msg.payload.decode("utf-8"))
                if not isinstance(obj, dict):
                    raise ValueError("payload is not a JSON object")
                event = decode_payload(obj, source, station, self.stats, where=f"{msg.topic}")
            except (ValueError, UnicodeDecodeError, IngestError) as exc:
                self.stats.malformed += 1
                log.warning("source %s: undecodable message skipped: %s", source.id, exc)
                return
            self.queue.put(event)

        client.on_connect = on_connect
        client.on_subscribe = on_subscribe
        client.on_disconnect = on_disconnect
        client.on_message = on_message
        return client

    def _connect(self, client: mqtt.Client, url: str) -> None:
        host, port, tls = parse_broker_url(url)
        if tls:
            client.tls_set()
        deadline = time.monotonic() + self.connect_deadline
        delay = 0.1
        while True:
            try:
                client.connect(host, port, keepalive=30)
                return
            except OSError as exc:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise BrokerUnavailable(f"cannot reach MQTT broker at {url}: {exc}") from exc
                time.sleep(min(delay, remaining))
                delay = min(delay * 2, 5.0)

    def start(self, wait_subscribed: float | None = 5.0) -> "MqttIngest":
        self._pending_subs = len(self.bindings)
        try:
            for source, station in self.bindings:
                url = self.broker or source.url
                if not url:
                    raise BrokerUnavailable(f"source {source.id} has no broker url")
                client = self._client_for(source, station)
                self._connect(client, url)
                client.loop_start()
                self.clients.append(client)
        except BaseException:
            self.close()
            raise
        if wait_subscribed is not None and not self._subscribed.wait(wait_subscribed):
            log.warning("subscriptions not acknowledged within %.1fs", wait_subscribed)
        return self

    def stop(self) -> None:
        """Ask :meth:`events` to finish after the events already queued."""
        self.queue.put(_STOP)

    def close(self) -> None:
        for client in self.clients:
            client.disconnect()
            client.loop_stop()
        self.clients.clear()

    def events(self, idle_timeout: float | None = None, max_events: int | None = None) -> Iterator[SensorEvent]:
        count = 0
        while max_events is None or count < max_events:
            try:
                item = self.queue.get(timeout=idle_timeout)
            except queue.Empty:
                log.info("no message for %.1fs; ending live stream", idle_timeout)
                return
            if item is _STOP:
                return
            count += 1
            yield item

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.close()


def ingest_mqtt(
    source: SourceDecl,
    station: str | None = None,
    broker: str | None = None,
    connect_deadline: float = 10.0,
    idle_timeout: float | None = None,
    max_events: int | None = None,
    stats: IngestStats | None = None,
) -> Iterator[SensorEvent]:
    """Yield events received on ``source.topic`` until stopped or idle."""
    sub = MqttIngest([(source, station)], broker=broker, connect_deadline=connect_deadline, stats=stats)
    sub.start()
    try:
        yield from sub.events(idle_timeout=idle_timeout, max_events=max_events)
    finally:
        sub.close()


def publish_events(url: str, topic: str, payloads, client_id: str = "", qos: int = 1) -> None:
    """Publish JSON payloads in order and wait for delivery."""
    host, port, tls = parse_broker_url(url)
    client = mqtt.Client(callback_api_version=mqtt.CallbackAPIVersion.VERSION2, client_id=client_id)
    if tls:
        client.tls_set()
    client.connect(host, port)
    client.loop_start()
    try:
        for payload in payloads:
            body = payload if isinstance(payload, (str, bytes)) else json.dumps(payload)
            client.publish(topic, body, qos=qos).wait_for_publish()
    finally:
        client.disconnect()
        client.loop_stop()
