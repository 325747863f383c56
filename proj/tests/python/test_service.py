# Copyright 2026 The vibromix Authors
# SPDX-License-Identifier: Apache-2.0
import asyncio
import json
import urllib.error
import urllib.request

import pytest
import websockets

import vibromix


async def next_reply(ws):
    while True:
        frame = json.loads(await asyncio.wait_for(ws.recv(), timeout=3))
        if frame.get("type") != "telemetry":
            return frame


@pytest.fixture
def live():
    p = vibromix.Pipeline.from_script(vibromix.demo_script(1))
    p.start(max_samples=8000 * 20)
    service = vibromix.ControlService(p, port=0)
    yield p, service
    service.stop()
    p.stop()


def test_control_round_trip(live):
    p, service = live

    async def session():
        async with websockets.connect(f"ws://127.0.0.1:{service.port}/control") as ws:
            await ws.send(json.dumps({"op": "set_gain", "channel": "right", "value": -6, "id": 7}))
            ack = await next_reply(ws)
            assert ack == {**ack, "type": "ack", "id": 7, "value": -6.0, "clamped": False}
            await ws.send("{not json")
            assert (await next_reply(ws))["type"] == "error"
            await ws.send(json.dumps({"op": "subscribe_levels"}))
            seen = []
            while len(seen) < 3:
                frame = json.loads(await asyncio.wait_for(ws.recv(), timeout=3))
                if frame.get("type") == "telemetry":
                    seen.append(frame["seq"])
            assert seen == sorted(seen)

    asyncio.run(session())
    assert p.telemetry()["channels"]["right"]["gain_db"] == -6.0


def test_status_endpoint(live):
    _, service = live
    with urllib.request.urlopen(f"http://127.0.0.1:{service.port}/status", timeout=3) as r:
        status = json.load(r)
    assert "deadline_misses" in status
    with pytest.raises(urllib.error.HTTPError) as err:
        urllib.request.urlopen(f"http://127.0.0.1:{service.port}/nowhere", timeout=3)
    assert err.value.code == 404
