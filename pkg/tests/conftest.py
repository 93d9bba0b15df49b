from __future__ import annotations

import pytest

from goosenet.codec import (
    BitString,
    EthernetFrame,
    GoosePdu,
    GooseSessionHeader,
    MacAddress,
    UtcTime,
)

GOLDEN_SRC = MacAddress.parse("00:21:c1:25:08:a2")
GOLDEN_DST = MacAddress.parse("01:0c:cd:01:00:00")
# 2015-07-10T14:24:56 UTC with the 24-bit fraction Wireshark shows as .903729915
GOLDEN_TIME = UtcTime(1436538296, 15162072, 0)


def golden_pdu() -> GoosePdu:
    return GoosePdu(
        gocb_ref="AAL1J1Q01A1LD0/LLN0$GO$gcbmydataset",
        time_allowed_to_live=11000,
        dat_set="AAL1J1Q01A1LD0/LLN0$mydataset",
        go_id="AAL1J1Q01A1LD0/LLN0.gcbmydataset",
        t=GOLDEN_TIME,
        st_num=1,
        sq_num=857,
        test=False,
        conf_rev=200,
        nds_com=False,
        all_data=(True, BitString.from_bits("0" * 13), "CLOSE"),
    )


def golden_frame(payload: bytes) -> EthernetFrame:
    return EthernetFrame(GOLDEN_DST, GOLDEN_SRC, 0x88B8, payload)


@pytest.fixture
def pdu() -> GoosePdu:
    return golden_pdu()


@pytest.fixture
def header() -> GooseSessionHeader:
    return GooseSessionHeader(appid=0x0002)


# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
